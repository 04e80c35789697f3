"""Molecular graph types and ring perception."""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .elements import ELEMENTS, allowed_valences


class SmilesError(ValueError):
    """Base class for SMILES parsing and validation failures."""


class SmilesSyntaxError(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class ValenceViolation(SmilesError):
    pass


class AromaticityError(SmilesError):
    pass


class BondOrder(Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self):
        """Contribution to the valence sum; aromatic bonds count as one."""
        return 1 if self is BondOrder.AROMATIC else self.value


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    # total attached hydrogens: bracket value, or the implicit count assigned on parse
    explicit_h: int = 0
    isotope: Optional[int] = None

    def __post_init__(self):
        if self.element != "*" and self.element not in ELEMENTS:
            raise UnknownElement(f"unsupported element {self.element!r}")
        if not 0 <= self.explicit_h <= 8:
            raise SmilesSyntaxError(f"hydrogen count {self.explicit_h} out of range")
        if abs(self.formal_charge) > 4:
            raise SmilesSyntaxError(f"formal charge {self.formal_charge} out of range")
        if self.isotope is not None and self.isotope < 1:
            raise SmilesSyntaxError("isotope must be positive")

    @property
    def is_dummy(self):
        return self.element == "*"


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.a == self.b:
            raise SmilesSyntaxError(f"self bond on atom {self.a}")

    def other(self, i):
        return self.b if i == self.a else self.a


@dataclass(frozen=True)
class Molecule:
    """An immutable molecular graph.

    ``rings`` is the smallest set of smallest rings, each a tuple of atom
    indices in ring-walk order starting from the lowest index.
    """

    atoms: tuple
    bonds: tuple
    rings: tuple = field(default=None, compare=False)
    stereo_dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise SmilesSyntaxError(f"bond {bond.a}-{bond.b} out of range")
            key = frozenset((bond.a, bond.b))
            if key in seen:
                raise SmilesSyntaxError(f"duplicate bond {bond.a}-{bond.b}")
            seen.add(key)
        if self.rings is None:
            object.__setattr__(self, "rings", tuple(sssr(n, self.bonds)))

    # -- graph helpers -------------------------------------------------

    @property
    def n_atoms(self):
        return len(self.atoms)

    def neighbors(self):
        """Adjacency list: for each atom, a list of (neighbor, BondOrder)."""
        adj = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return adj

    def ring_atoms(self):
        return frozenset(i for ring in self.rings for i in ring)

    def ring_bonds(self):
        out = set()
        for ring in self.rings:
            for k in range(len(ring)):
                out.add(frozenset((ring[k], ring[(k + 1) % len(ring)])))
        return out

    def heavy_atom_count(self):
        return sum(1 for a in self.atoms if a.element not in ("H", "*"))

    def valence_sum(self, i, adj=None):
        adj = adj if adj is not None else self.neighbors()
        return sum(order.valence for _, order in adj[i]) + self.atoms[i].explicit_h

    def check_valences(self):
        adj = self.neighbors()
        for i, atom in enumerate(self.atoms):
            allowed = allowed_valences(atom.element, atom.formal_charge)
            if allowed is None:
                continue
            total = self.valence_sum(i, adj)
            if total > max(allowed):
                raise ValenceViolation(
                    f"atom {i} ({atom.element}) has valence {total}, allowed {allowed}"
                )

    def permuted(self, perm):
        """Relabel atoms: old atom ``i`` becomes new atom ``perm[i]``."""
        atoms = [None] * len(self.atoms)
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds]
        return Molecule(tuple(atoms), tuple(bonds))

    def components(self):
        """Connected components as sorted lists of atom indices."""
        adj = self.neighbors()
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            comp = []
            stack = [start]
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def subgraph(self, keep):
        """Induced subgraph on atom indices ``keep`` (order preserved)."""
        index = {old: new for new, old in enumerate(keep)}
        atoms = tuple(self.atoms[i] for i in keep)
        bonds = tuple(
            Bond(index[b.a], index[b.b], b.order)
            for b in self.bonds
            if b.a in index and b.b in index
        )
        return Molecule(atoms, bonds)


# -- rings -------------------------------------------------------------


def _adjacency(n, bonds):
    adj = [[] for _ in range(n)]
    for bond in bonds:
        adj[bond.a].append(bond.b)
        adj[bond.b].append(bond.a)
    for row in adj:
        row.sort()
    return adj


def _shortest_path(adj, src, dst, banned_edge):
    """BFS path src -> dst avoiding one edge; neighbors visited in index order."""
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v in adj[u]:
            if v in prev or frozenset((u, v)) == banned_edge:
                continue
            prev[v] = u
            queue.append(v)
    if dst not in prev:
        return None
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def _bfs_tree(adj, root):
    prev = {root: None}
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                dist[v] = dist[u] + 1
                queue.append(v)
    return prev, dist


def _path_to_root(prev, v):
    path = [v]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path


def _normalize_ring(cycle):
    """Rotate/reflect a cycle so it starts at its lowest index, walking toward the lower neighbor."""
    k = cycle.index(min(cycle))
    fwd = cycle[k:] + cycle[:k]
    rev = [fwd[0]] + fwd[1:][::-1]
    return tuple(min(fwd, rev))


def _edge_set(cycle):
    return frozenset(
        frozenset((cycle[i], cycle[(i + 1) % len(cycle)])) for i in range(len(cycle))
    )


def _candidate_cycles_per_edge(adj, bonds):
    out = {}
    for bond in bonds:
        edge = frozenset((bond.a, bond.b))
        path = _shortest_path(adj, bond.a, bond.b, edge)
        if path is None:
            continue
        ring = _normalize_ring(path)
        out.setdefault(ring, _edge_set(ring))
    return out


def _candidate_cycles_horton(adj, n, bonds):
    out = {}
    for root in range(n):
        prev, dist = _bfs_tree(adj, root)
        for bond in bonds:
            x, y = bond.a, bond.b
            if x not in prev or y not in prev:
                continue
            px = _path_to_root(prev, x)
            py = _path_to_root(prev, y)
            if set(px) & set(py) != {root}:
                continue
            cycle = px[::-1] + py[:-1][::-1]
            if len(cycle) < 3:
                continue
            ring = _normalize_ring(cycle)
            out.setdefault(ring, _edge_set(ring))
    return out


def _select_basis(candidates, n_needed, edge_index):
    basis_rows = []  # (pivot bit, row) pairs of the GF(2) echelon form
    chosen = []
    for ring in sorted(candidates, key=lambda r: (len(r), sorted(r), r)):
        row = 0
        for e in candidates[ring]:
            row |= 1 << edge_index[e]
        for pivot, brow in basis_rows:
            if row >> pivot & 1:
                row ^= brow
        if row == 0:
            continue
        basis_rows.append((row.bit_length() - 1, row))
        chosen.append(ring)
        if len(chosen) == n_needed:
            break
    return chosen


def sssr(n, bonds):
    """Smallest set of smallest rings.

    Candidates come from one BFS shortest path per edge; a Horton candidate
    set is used only when those do not span the cycle space. Ties between
    equal-size rings go to the lexicographically lowest sorted atom sequence.
    """
    if not bonds:
        return []
    adj = _adjacency(n, bonds)
    seen = [False] * n
    n_components = 0
    for s in range(n):
        if seen[s]:
            continue
        n_components += 1
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    n_needed = len(bonds) - n + n_components
    if n_needed == 0:
        return []
    edge_index = {frozenset((b.a, b.b)): k for k, b in enumerate(bonds)}
    rings = _select_basis(_candidate_cycles_per_edge(adj, bonds), n_needed, edge_index)
    if len(rings) < n_needed:
        rings = _select_basis(_candidate_cycles_horton(adj, n, bonds), n_needed, edge_index)
    return sorted(rings, key=lambda r: (len(r), r))


def smallest_ring_sizes(mol):
    """Size of the smallest ring through each atom (0 if acyclic); label-invariant."""
    adj = _adjacency(mol.n_atoms, mol.bonds)
    ring_bonds = mol.ring_bonds()
    sizes = [0] * mol.n_atoms
    for bond in mol.bonds:
        edge = frozenset((bond.a, bond.b))
        if edge not in ring_bonds:
            continue
        path = _shortest_path(adj, bond.a, bond.b, edge)
        size = len(path)
        for i in path:
            if sizes[i] == 0 or size < sizes[i]:
                sizes[i] = size
    return sizes
