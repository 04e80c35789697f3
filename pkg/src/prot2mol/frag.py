"""Bemis-Murcko scaffolds and simplified BRICS fragmentation.

Fragmentation cleaves acyclic single bonds matching four rules:

R1  ring atom -- non-ring heavy atom
R2  amide C(=O)--N
R3  ester C(=O)--O
R4  ether C--O, neither atom in a ring, O bonded to two non-carbonyl carbons

Each cleavage site is capped with a ``[*]`` attachment atom on both sides.
"""

from collections import Counter

from .chem.canon import canonical_smiles
from .chem.molecule import Atom, Bond, BondOrder, Molecule

RULES = ("R1", "R2", "R3", "R4")


def _strip_to(mol, keep):
    """Induced subgraph on ``keep`` with hydrogens restored for removed bonds."""
    keep = sorted(keep)
    kept = set(keep)
    extra_h = Counter()
    for bond in mol.bonds:
        if (bond.a in kept) != (bond.b in kept):
            inside = bond.a if bond.a in kept else bond.b
            extra_h[inside] += bond.order.valence
    index = {old: new for new, old in enumerate(keep)}
    atoms = []
    for old in keep:
        a = mol.atoms[old]
        atoms.append(Atom(a.element, a.formal_charge, a.aromatic, a.explicit_h + extra_h[old], a.isotope))
    bonds = [
        Bond(index[b.a], index[b.b], b.order) for b in mol.bonds if b.a in kept and b.b in kept
    ]
    return Molecule(tuple(atoms), tuple(bonds))


def murcko_atoms(mol):
    """Atom indices of the ring systems plus linkers, side chains peeled off."""
    if not mol.rings:
        return set()
    adj = mol.neighbors()
    ring_atoms = mol.ring_atoms()
    alive = set(range(mol.n_atoms))
    degree = [len(adj[i]) for i in range(mol.n_atoms)]
    # a terminal atom double-bonded to a ring atom is part of the framework
    protected = set()
    for i in range(mol.n_atoms):
        if i in ring_atoms or len(adj[i]) != 1:
            continue
        (j, order), = adj[i]
        if order is BondOrder.DOUBLE and j in ring_atoms:
            protected.add(i)
    queue = [i for i in alive if degree[i] <= 1 and i not in ring_atoms and i not in protected]
    while queue:
        i = queue.pop()
        if i not in alive:
            continue
        alive.discard(i)
        for j, _ in adj[i]:
            if j in alive:
                degree[j] -= 1
                if degree[j] <= 1 and j not in ring_atoms and j not in protected:
                    queue.append(j)
    # drop whole components without rings (e.g. counter-ions)
    comps = _strip_to(mol, alive).components() if alive else []
    keep_sorted = sorted(alive)
    out = set()
    for comp in comps:
        originals = {keep_sorted[k] for k in comp}
        if originals & ring_atoms:
            out |= originals
    return out


def murcko_scaffold(mol):
    """Canonical SMILES of the Murcko framework; '' for acyclic molecules."""
    keep = murcko_atoms(mol)
    if not keep:
        return ""
    return canonical_smiles(_strip_to(mol, keep))


def _is_carbonyl_carbon(i, mol, adj):
    if mol.atoms[i].element != "C":
        return False
    return any(
        o is BondOrder.DOUBLE and mol.atoms[j].element == "O" for j, o in adj[i]
    )


def _is_ether_oxygen(i, mol, adj):
    atom = mol.atoms[i]
    if atom.element != "O" or atom.aromatic or atom.explicit_h or atom.formal_charge:
        return False
    heavy = [(j, o) for j, o in adj[i] if mol.atoms[j].element not in ("H", "*")]
    if len(heavy) != 2 or any(o is not BondOrder.SINGLE for _, o in heavy):
        return False
    return all(
        mol.atoms[j].element == "C" and not _is_carbonyl_carbon(j, mol, adj) for j, _ in heavy
    )


def cleavable_bonds(mol):
    """Map bond index -> first matching rule name."""
    adj = mol.neighbors()
    ring_atoms = mol.ring_atoms()
    ring_bonds = mol.ring_bonds()
    out = {}
    for k, bond in enumerate(mol.bonds):
        if bond.order is not BondOrder.SINGLE or frozenset((bond.a, bond.b)) in ring_bonds:
            continue
        a, b = bond.a, bond.b
        ea, eb = mol.atoms[a].element, mol.atoms[b].element
        if ea in ("H", "*") or eb in ("H", "*"):
            continue
        if (a in ring_atoms) != (b in ring_atoms):
            out[k] = "R1"
            continue
        for c, x in ((a, b), (b, a)):
            if _is_carbonyl_carbon(c, mol, adj):
                ex = mol.atoms[x].element
                if ex == "N":
                    out[k] = "R2"
                    break
                if ex == "O":
                    out[k] = "R3"
                    break
        if k in out:
            continue
        if a not in ring_atoms and b not in ring_atoms:
            for c, x in ((a, b), (b, a)):
                if mol.atoms[c].element == "C" and _is_ether_oxygen(x, mol, adj):
                    out[k] = "R4"
                    break
    return out


def brics_fragments(mol):
    """Counter of canonical fragment SMILES after cleaving every rule-matching bond."""
    cut = cleavable_bonds(mol)
    if not cut:
        return Counter({canonical_smiles(mol): 1})
    atoms = list(mol.atoms)
    bonds = []
    for k, bond in enumerate(mol.bonds):
        if k not in cut:
            bonds.append(bond)
            continue
        for side in (bond.a, bond.b):
            atoms.append(Atom("*"))
            bonds.append(Bond(side, len(atoms) - 1, BondOrder.SINGLE))
    pieces = Molecule(tuple(atoms), tuple(bonds))
    bag = Counter()
    for comp in pieces.components():
        bag[canonical_smiles(pieces.subgraph(comp))] += 1
    return bag
