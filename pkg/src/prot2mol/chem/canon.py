"""Canonical atom ranking and SMILES emission.

Ranks start from atom invariants and are refined Morgan-style until
stable. Remaining ties are broken by individualizing each candidate of the
first tied class and keeping the lexicographically smallest emitted
string. Candidates that are twins of an already tried atom (same
neighbourhood, so swapping them is an automorphism) are skipped.
"""

from .elements import AROMATIC_ORGANIC, ORGANIC_SUBSET
from .molecule import BondOrder, smallest_ring_sizes
from .smiles import implicit_hydrogens

# past this many complete labelings only the first candidate is tried at each node
LEAF_BUDGET = 2000

_BOND_SYMBOL = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


def _dense(keys):
    order = sorted(set(keys))
    lookup = {k: r for r, k in enumerate(order)}
    return [lookup[k] for k in keys]


def atom_invariants(mol):
    rsize = smallest_ring_sizes(mol)
    adj = mol.neighbors()
    out = []
    for i, a in enumerate(mol.atoms):
        out.append(
            (
                a.element,
                len(adj[i]),
                a.explicit_h,
                a.formal_charge,
                a.aromatic,
                a.isotope or 0,
                rsize[i],
            )
        )
    return out


def refine(ranks, adj):
    """Iterate neighbour-multiset refinement until the partition stops splitting."""
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((ranks[j], o.value) for j, o in adj[i])))
            for i in range(len(ranks))
        ]
        new = _dense(keys)
        count = len(set(new))
        if count == n_classes:
            return new
        ranks, n_classes = new, count


def _are_twins(u, v, adj):
    nu = sorted((j, o.value) for j, o in adj[u] if j != v)
    nv = sorted((j, o.value) for j, o in adj[v] if j != u)
    return nu == nv


class _Search:
    def __init__(self, mol, adj):
        self.mol = mol
        self.adj = adj
        self.leaves = 0
        self.best = None
        self.best_ranks = None

    def run(self, ranks):
        ranks = refine(ranks, self.adj)
        n = len(ranks)
        if len(set(ranks)) == n:
            self.leaves += 1
            text = write_smiles(self.mol, ranks, self.adj)
            if self.best is None or text < self.best:
                self.best, self.best_ranks = text, ranks
            return
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        target = min(r for r, c in counts.items() if c > 1)
        cell = [i for i in range(n) if ranks[i] == target]
        tried = []
        for member in cell:
            if any(_are_twins(member, t, self.adj) for t in tried):
                continue
            if tried and self.leaves >= LEAF_BUDGET:
                break
            tried.append(member)
            child = [
                2 * r + (1 if (r == target and i != member) else 0)
                for i, r in enumerate(ranks)
            ]
            self.run(child)


def canonical_ranks(mol):
    """Return (ranks, smiles) for a single connected molecule."""
    adj = mol.neighbors()
    search = _Search(mol, adj)
    search.run(_dense(atom_invariants(mol)))
    return search.best_ranks, search.best


def _atom_token(mol, i, adj):
    atom = mol.atoms[i]
    if atom.is_dummy:
        return "[*]"
    symbol = atom.element.lower() if atom.aromatic else atom.element
    organic = AROMATIC_ORGANIC if atom.aromatic else ORGANIC_SUBSET
    if atom.formal_charge == 0 and atom.isotope is None and symbol in organic:
        bond_valence = sum(o.valence for _, o in adj[i])
        try:
            implicit = implicit_hydrogens(atom.element, atom.aromatic, bond_valence)
        except ValueError:
            implicit = -1
        if implicit == atom.explicit_h:
            return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.explicit_h:
        parts.append("H" if atom.explicit_h == 1 else f"H{atom.explicit_h}")
    q = atom.formal_charge
    if q:
        sign = "+" if q > 0 else "-"
        parts.append(sign if abs(q) == 1 else f"{sign}{abs(q)}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol, a, b, order):
    if order is BondOrder.SINGLE:
        return "-" if mol.atoms[a].aromatic and mol.atoms[b].aromatic else ""
    if order is BondOrder.AROMATIC:
        return ""
    return _BOND_SYMBOL[order]


def _ring_label(num):
    return str(num) if num < 10 else f"%{num:02d}"


def write_smiles(mol, ranks, adj=None):
    """Emit SMILES for ``mol`` with traversal fully determined by ``ranks``."""
    adj = adj if adj is not None else mol.neighbors()
    n = mol.n_atoms
    order_nbrs = [sorted(adj[i], key=lambda t: ranks[t[0]]) for i in range(n)]
    closures = [[] for _ in range(n)]
    visited = [False] * n
    children = [[] for _ in range(n)]
    parent_of = [-1] * n
    tree_edges = set()
    roots = []
    for root in sorted(range(n), key=lambda i: ranks[i]):
        if visited[root]:
            continue
        roots.append(root)
        visited[root] = True
        stack = [(root, iter(order_nbrs[root]))]
        while stack:
            u, it = stack[-1]
            advanced = False
            for v, _ in it:
                if not visited[v]:
                    visited[v] = True
                    parent_of[v] = u
                    children[u].append(v)
                    tree_edges.add(frozenset((u, v)))
                    stack.append((v, iter(order_nbrs[v])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
    # ring-closure bonds: everything not on the tree
    bond_order = {frozenset((b.a, b.b)): b for b in mol.bonds}
    for key, bond in bond_order.items():
        if key in tree_edges:
            continue
        closures[bond.a].append(bond.b)
        closures[bond.b].append(bond.a)

    out = []
    free = []
    next_label = [1]
    open_labels = {}  # frozenset edge -> label

    def take_label():
        if free:
            free.sort()
            return free.pop(0)
        label = next_label[0]
        next_label[0] += 1
        return label

    def emit(u):
        out.append(_atom_token(mol, u, adj))
        for v in sorted(closures[u], key=lambda x: ranks[x]):
            key = frozenset((u, v))
            if key in open_labels:
                label = open_labels.pop(key)
                out.append(_ring_label(label))
                free.append(label)
            else:
                label = take_label()
                open_labels[key] = label
                b = bond_order[key]
                out.append(_bond_token(mol, b.a, b.b, b.order) + _ring_label(label))
        kids = children[u]
        for k, v in enumerate(kids):
            b = bond_order[frozenset((u, v))]
            bond = _bond_token(mol, b.a, b.b, b.order)
            if k < len(kids) - 1:
                out.append("(")
                out.append(bond)
                emit(v)
                out.append(")")
            else:
                out.append(bond)
                emit(v)

    texts = []
    for root in roots:
        out.clear()
        emit(root)
        texts.append("".join(out))
    return ".".join(texts)


def canonical_smiles(mol):
    """Canonical SMILES: identical for isomorphic molecules.

    Each connected component is canonicalized on its own; component
    strings are joined with ``.`` in sorted order.
    """
    comps = mol.components()
    if len(comps) == 1:
        return canonical_ranks(mol)[1]
    return ".".join(sorted(canonical_ranks(mol.subgraph(c))[1] for c in comps))
