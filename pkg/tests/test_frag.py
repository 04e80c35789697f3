from collections import Counter

from prot2mol.chem import canonicalize, parse_smiles
from prot2mol.frag import brics_fragments, cleavable_bonds, murcko_scaffold


def scaf(smi):
    return murcko_scaffold(parse_smiles(smi))


def frags(smi):
    return brics_fragments(parse_smiles(smi))


def test_scaffold_examples():
    assert scaf("c1ccccc1") == canonicalize("c1ccccc1")
    assert scaf("CCc1ccccc1") == canonicalize("c1ccccc1")
    assert scaf("CCO") == ""


def test_scaffold_keeps_linkers_and_exocyclic_double_bonds():
    assert scaf("c1ccccc1CCc1ccncc1") == canonicalize("c1ccccc1CCc1ccncc1")
    assert scaf("CCCC(=O)c1ccccc1") == canonicalize("c1ccccc1")
    assert scaf("O=C1CCCCC1CC") == canonicalize("O=C1CCCCC1")


def test_scaffold_ring_invariant(corpus):
    for smi in corpus:
        m = parse_smiles(smi)
        s = murcko_scaffold(m)
        assert (s == "") == (not m.rings), smi
        if s:
            sm = parse_smiles(s)
            assert sm.rings
            # no acyclic terminal atoms other than exocyclic double-bonded ones
            ring = sm.ring_atoms()
            adj = sm.neighbors()
            for i, nbrs in enumerate(adj):
                if i not in ring and len(nbrs) == 1:
                    assert nbrs[0][1].name == "DOUBLE"


def test_fragments_examples():
    assert frags("C") == Counter({canonicalize("C"): 1})
    eb = frags("CCc1ccccc1")
    assert sum(eb.values()) == 2
    assert all(k.count("*") == 1 for k in eb)
    am = frags("CC(=O)NC")
    assert set(cleavable_bonds(parse_smiles("CC(=O)NC")).values()) == {"R2"}
    assert sum(am.values()) == 2
    assert canonicalize("CNC") not in am  # the cut is at C(=O)-N, so N keeps a stub


def test_fragments_ester_and_ether():
    assert "R3" in cleavable_bonds(parse_smiles("CC(=O)OC")).values()
    rules = cleavable_bonds(parse_smiles("CCOCC"))
    assert sorted(rules.values()) == ["R4", "R4"]
    assert sum(frags("CCOCC").values()) == 3


def test_fragments_conserve_heavy_atoms(corpus):
    for smi in corpus:
        m = parse_smiles(smi)
        bag = brics_fragments(m)
        heavy = 0
        for f, n in bag.items():
            fm = parse_smiles(f, allow_dummy=True)
            heavy += n * sum(1 for a in fm.atoms if a.element not in ("H", "*"))
        assert heavy == m.heavy_atom_count(), smi
