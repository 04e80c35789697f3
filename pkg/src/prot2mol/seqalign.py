"""Global protein alignment and the similarity-binned held-out split.

Alignment is Gotoh's three-state affine recurrence. A gap of length k costs
``gap_open + (k - 1) * gap_extend`` and end gaps are charged like any other.
When several alignments reach the optimal score, the one with the most
identities (then the shortest) defines ``identity``; that rule is symmetric
in the two inputs, so identity(a, b) == identity(b, a).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _kernels

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
PROTEIN_ALPHABET = AMINO_ACIDS + "X"

N_BINS = 10
HELDOUT_FRACTION = 0.1
DEFAULT_N_HELDOUT = 200


class EmptySequence(ValueError):
    pass


class UnknownResidue(ValueError):
    pass


class InsufficientProteins(ValueError):
    pass


class MissingFamily(ValueError):
    pass


class SubstitutionMatrix:
    """Square score table over a residue alphabet."""

    def __init__(self, alphabet, scores, name="custom"):
        self.alphabet = "".join(alphabet)
        self.scores = np.ascontiguousarray(scores, dtype=np.float64)
        if self.scores.shape != (len(self.alphabet), len(self.alphabet)):
            raise ValueError("score table does not match alphabet")
        self.index = {ch: k for k, ch in enumerate(self.alphabet)}
        self.name = name

    @classmethod
    def simple(cls, match=1.0, mismatch=-1.0, alphabet=PROTEIN_ALPHABET):
        n = len(alphabet)
        scores = np.full((n, n), float(mismatch))
        np.fill_diagonal(scores, float(match))
        return cls(alphabet, scores, name=f"simple({match},{mismatch})")

    @classmethod
    def blosum62(cls):
        text = resources.files("prot2mol").joinpath("data/blosum62.txt").read_text()
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        cols = rows[0]
        table = {r[0]: [float(x) for x in r[1:]] for r in rows[1:]}
        keep = [c for c in cols if c in PROTEIN_ALPHABET]
        pos = [cols.index(c) for c in keep]
        scores = np.array([[table[r][p] for p in pos] for r in keep])
        return cls(keep, scores, name="BLOSUM62")

    def encode(self, seq):
        if not seq:
            raise EmptySequence("cannot align an empty sequence")
        try:
            return np.fromiter((self.index[ch] for ch in seq), dtype=np.int64, count=len(seq))
        except KeyError as exc:
            raise UnknownResidue(f"residue {exc.args[0]!r} not in {self.name} alphabet") from None


_BLOSUM62 = None


def blosum62():
    global _BLOSUM62
    if _BLOSUM62 is None:
        _BLOSUM62 = SubstitutionMatrix.blosum62()
    return _BLOSUM62


@dataclass(frozen=True)
class AlignParams:
    matrix: SubstitutionMatrix = None
    gap_open: float = 10.0
    gap_extend: float = 0.5

    def resolved(self):
        return self.matrix if self.matrix is not None else blosum62()


@dataclass(frozen=True)
class AlignmentResult:
    score: float
    identity: float
    length: int
    matches: int


def needleman_wunsch(a, b, params=None):
    params = params or AlignParams()
    mat = params.resolved()
    ca, cb = mat.encode(a), mat.encode(b)
    score, matches, length = _kernels.gotoh(ca, cb, mat.scores, params.gap_open, params.gap_extend)
    return AlignmentResult(score, matches / length, length, matches)


def max_similarity(p, pool, params=None):
    if not pool:
        raise ValueError("pool is empty")
    return max(needleman_wunsch(p, q, params).identity for q in pool)


def max_similarities(queries, pool, params=None, workers=1):
    """max_similarity for each query; the compiled kernel releases the GIL."""
    if workers <= 1:
        return [max_similarity(q, pool, params) for q in queries]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda q: max_similarity(q, pool, params), queries))


def identity_bin(x, n_bins=N_BINS):
    """Equal-width bin over [0, 1]; identity 1.0 lands in the top bin."""
    return min(int(x * n_bins), n_bins - 1)


def _draw_heldout(proteins, n_heldout, rng, params, workers):
    by_family = {}
    for pid, _, fam in proteins:
        by_family.setdefault(fam, []).append(pid)
    sampled = []
    for fam in sorted(by_family):
        members = sorted(by_family[fam])
        k = math.ceil(HELDOUT_FRACTION * len(members))
        pick = rng.choice(len(members), size=k, replace=False)
        sampled.extend(members[i] for i in sorted(pick))
    if len(sampled) < n_heldout:
        raise InsufficientProteins(
            f"only {len(sampled)} proteins sampled from families, need {n_heldout}"
        )
    seqs = {pid: seq for pid, seq, _ in proteins}
    chosen = set(sampled)
    rest = [seqs[pid] for pid, _, _ in proteins if pid not in chosen]
    sims = max_similarities([seqs[pid] for pid in sampled], rest, params, workers)
    bins = [identity_bin(s) for s in sims]
    # sequential weighted draws, weight 1/|bin| over the candidates still in play
    remaining = list(range(len(sampled)))
    picked = []
    for _ in range(n_heldout):
        size = {}
        for k in remaining:
            size[bins[k]] = size.get(bins[k], 0) + 1
        w = np.array([1.0 / size[bins[k]] for k in remaining])
        j = int(rng.choice(len(remaining), p=w / w.sum()))
        picked.append(sampled[remaining.pop(j)])
    return picked


def make_split(proteins, n_heldout=DEFAULT_N_HELDOUT, seed=0, params=None, workers=1):
    """Assign each protein id to train, validation or test.

    ``proteins`` is a list of (id, sequence, family). Validation is drawn
    first, then test from what is left.
    """
    proteins = list(proteins)
    ids = [p[0] for p in proteins]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate protein ids")
    for pid, _, fam in proteins:
        if fam is None or str(fam).strip() == "":
            raise MissingFamily(f"protein {pid} has no family label")
    if not n_heldout < len(proteins) / 2:
        raise InsufficientProteins(
            f"n_heldout={n_heldout} needs more than {2 * n_heldout} proteins, got {len(proteins)}"
        )
    rng = np.random.default_rng(seed)
    assignment = {}
    pool = proteins
    for name in ("validation", "test"):
        for pid in _draw_heldout(pool, n_heldout, rng, params, workers):
            assignment[pid] = name
        pool = [p for p in pool if p[0] not in assignment]
    for pid, _, _ in pool:
        assignment[pid] = "train"
    return {pid: assignment[pid] for pid in ids}


def read_proteins_tsv(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if n == 1 and cols[:2] == ["id", "sequence"]:
                continue
            if len(cols) < 3:
                raise MissingFamily(f"line {n}: expected id, sequence, family")
            out.append((cols[0], cols[1], cols[2]))
    return out


def write_split_tsv(assignment, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\tsplit\n")
        for pid, split in assignment.items():
            fh.write(f"{pid}\t{split}\n")


def read_split_tsv(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) < 2 or cols == ["id", "split"]:
                continue
            out[cols[0]] = cols[1]
    return out
