"""Molecular weight and the structural filter rule set.

The rules are a simplified stand-in for the benchmark's medicinal chemistry
filters; reports that use them carry the ``simplified filters`` flag.
"""

from .elements import MASSES

FILTER_LABEL = "simplified filters"
ALLOWED_ELEMENTS = frozenset({"C", "N", "S", "O", "F", "Cl", "Br", "H"})
MW_RANGE = (150.0, 650.0)
MAX_RING_SIZE = 8


def molecular_weight(mol):
    """Monoisotopic weight including attached hydrogens."""
    total = 0.0
    for atom in mol.atoms:
        total += MASSES[atom.element] + atom.explicit_h * MASSES["H"]
    return total


def passes_filters(mol):
    if any(a.element not in ALLOWED_ELEMENTS for a in mol.atoms):
        return False
    if any(a.formal_charge != 0 for a in mol.atoms):
        return False
    if mol.rings and max(len(r) for r in mol.rings) > MAX_RING_SIZE:
        return False
    lo, hi = MW_RANGE
    return lo <= molecular_weight(mol) <= hi
