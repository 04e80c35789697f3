"""Generation benchmark metrics, Fréchet distance and per-protein reports.

FCD here is the Fréchet distance between Gaussians fitted to a fixed
descriptor embedding (``DescriptorEmbedder``), not to the activations of a
pretrained activity network, so absolute values are not comparable with
published FCD numbers. Reports say so explicitly.
"""

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .chem import SmilesError, canonical_smiles, fingerprint, parse_smiles, passes_filters
from .chem import molecular_weight, tanimoto_matrix
from .chem.filters import FILTER_LABEL
from .frag import brics_fragments, murcko_scaffold

log = logging.getLogger(__name__)

JSD_BINS = 20
JSD_EPS = 1e-10
NEG_EIG_TOL = 1e-8
REFERENCE_SAMPLE = 20
FCD_WARNING = (
    "FCD uses a descriptor embedding instead of the ChemNet activations; "
    "absolute values are not comparable to published FCD numbers"
)


class EmptyInput(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    pass


class InsufficientActives(ValueError):
    pass


def _mol(m):
    return parse_smiles(m) if isinstance(m, str) else m


def _mols(ms):
    return [_mol(m) for m in ms]


# -- rates ---------------------------------------------------------------------


@dataclass
class Rates:
    valid: float
    unique: float
    novel: float
    filters: float
    n_generated: int
    n_valid: int
    n_unique: int


def basic_rates(generated, training_set):
    """valid / unique / novel / filter-pass fractions of a generated list."""
    if not generated:
        raise EmptyInput("no generated molecules")
    canon = []
    passing = 0
    for smi in generated:
        try:
            mol = parse_smiles(smi)
        except SmilesError:
            continue
        canon.append(canonical_smiles(mol))
        passing += passes_filters(mol)
    n_valid = len(canon)
    distinct = set(canon)
    novel = sum(1 for c in distinct if c not in training_set)
    return Rates(
        valid=n_valid / len(generated),
        unique=len(distinct) / n_valid if n_valid else 0.0,
        novel=novel / len(distinct) if distinct else 0.0,
        filters=passing / n_valid if n_valid else 0.0,
        n_generated=len(generated),
        n_valid=n_valid,
        n_unique=len(distinct),
    )


# -- similarity metrics --------------------------------------------------------


def _fps(ms):
    return [fingerprint(m) for m in _mols(ms)]


def snn(gen, ref):
    """Mean nearest-neighbour Tanimoto similarity from ``gen`` into ``ref``."""
    if not gen or not ref:
        raise EmptyInput("snn needs two non-empty sets")
    sim = tanimoto_matrix(_fps(gen), _fps(ref))
    return float(sim.max(axis=1).mean())


def int_div(gen, p=1):
    """1 - power mean of Tanimoto similarity over ordered pairs incl. self."""
    if not gen:
        raise EmptyInput("int_div needs at least one molecule")
    fps = _fps(gen)
    sim = tanimoto_matrix(fps, fps)
    return float(1.0 - np.mean(sim**p) ** (1.0 / p))


def scaffold_counts(ms):
    c = Counter(murcko_scaffold(m) for m in _mols(ms))
    c.pop("", None)  # acyclic molecules have no scaffold
    return c


def fragment_counts(ms):
    c = Counter()
    for m in _mols(ms):
        c.update(brics_fragments(m))
    return c


def cosine_counts(a, b):
    keys = sorted(set(a) | set(b))
    va = np.array([a.get(k, 0) for k in keys], dtype=np.float64)
    vb = np.array([b.get(k, 0) for k in keys], dtype=np.float64)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return 0.0
    return float(va @ vb / (na * nb))


def freq_cosine_sim(gen, ref, kind="scaffold"):
    if not gen or not ref:
        raise EmptyInput("freq_cosine_sim needs two non-empty sets")
    counts = {"scaffold": scaffold_counts, "fragment": fragment_counts}.get(kind)
    if counts is None:
        raise ValueError(f"kind must be scaffold or fragment, got {kind!r}")
    return cosine_counts(counts(gen), counts(ref))


# -- embedding and Fréchet distance ---------------------------------------------

EMBED_ELEMENTS = ("C", "N", "O", "S", "F", "Cl", "Br", "P")
FP_BUCKETS = 47
EMBED_LAYOUT = (
    [f"count_{e}" for e in EMBED_ELEMENTS]
    + ["count_other", "bonds_single", "bonds_double", "bonds_triple", "bonds_aromatic"]
    + ["ring_count", "largest_ring", "heavy_atoms", "mw_per_100"]
    + [f"fp_bucket_{k}" for k in range(FP_BUCKETS)]
)
EMBED_DIM = len(EMBED_LAYOUT)


class DescriptorEmbedder:
    """Fixed 64-dim layout: 17 graph descriptors then a 47-bucket fingerprint fold."""

    id = "descriptor-v1"
    dim = EMBED_DIM
    layout = tuple(EMBED_LAYOUT)

    def embed(self, m):
        m = _mol(m)
        v = np.zeros(EMBED_DIM, dtype=np.float64)
        for a in m.atoms:
            if a.element == "H" or a.is_dummy:
                continue
            k = EMBED_ELEMENTS.index(a.element) if a.element in EMBED_ELEMENTS else 8
            v[k] += 1
        for b in m.bonds:
            v[9 + b.order.value - 1] += 1
        v[13] = len(m.rings)
        v[14] = max((len(r) for r in m.rings), default=0)
        v[15] = m.heavy_atom_count()
        v[16] = molecular_weight(m) / 100.0
        for bit in fingerprint(m).on_bits():
            v[17 + bit % FP_BUCKETS] += 1
        return v

    def embed_many(self, ms):
        return np.array([self.embed(m) for m in ms], dtype=np.float64).reshape(-1, EMBED_DIM)


def descriptor_embed(m):
    return DescriptorEmbedder().embed(m)


def _sqrt_psd(mat):
    w, v = np.linalg.eigh(mat)
    if w.min() < -NEG_EIG_TOL:
        raise NumericalFailure(f"matrix has eigenvalue {w.min():.3g} < -{NEG_EIG_TOL}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T, w


def frechet_distance(X, Y):
    """|mu_x - mu_y|^2 + Tr(Sx + Sy - 2 (Sx Sy)^(1/2)), sample statistics."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"embedding dims {X.shape[1]} and {Y.shape[1]} differ")
    if len(X) < 2 or len(Y) < 2:
        raise TooFewSamples("each set needs at least two embeddings")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise NumericalFailure("non-finite embedding")
    mx, my = X.mean(axis=0), Y.mean(axis=0)
    sx = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    sy = np.atleast_2d(np.cov(Y, rowvar=False, ddof=1))
    root_x, _ = _sqrt_psd(sx)
    mid = root_x @ sy @ root_x
    _, w = _sqrt_psd((mid + mid.T) / 2.0)
    tr_covmean = float(np.sqrt(w).sum())
    d = float(((mx - my) ** 2).sum() + np.trace(sx) + np.trace(sy) - 2.0 * tr_covmean)
    return max(d, 0.0)


def fcd(gen, ref, embedder=None):
    embedder = embedder or DescriptorEmbedder()
    return frechet_distance(embedder.embed_many(_mols(gen)), embedder.embed_many(_mols(ref)))


# -- Jensen-Shannon ------------------------------------------------------------


def jsd(scores_a, scores_b, bins=JSD_BINS, eps=JSD_EPS):
    """Base-2 Jensen-Shannon distance between two score samples."""
    if len(scores_a) == 0 or len(scores_b) == 0:
        raise EmptyInput("jsd needs two non-empty lists")
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    p = np.histogram(a, edges)[0] / len(a) + eps
    q = np.histogram(b, edges)[0] / len(b) + eps
    p /= p.sum()
    q /= q.sum()
    m = 0.5 * (p + q)
    div = 0.5 * np.sum(p * np.log2(p / m)) + 0.5 * np.sum(q * np.log2(q / m))
    return float(math.sqrt(min(max(div, 0.0), 1.0)))


# -- full reports ---------------------------------------------------------------


@dataclass
class MetricsReport:
    valid: float
    unique: float
    novel: float
    filters: float
    int_div: float
    int_div2: float
    snn: float
    frag: float
    scaf: float
    fcd: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _valid_mols(smiles):
    out = []
    for s in smiles:
        try:
            out.append(parse_smiles(s))
        except SmilesError:
            pass
    return out


def metrics_report(generated, reference, training_set, seed=0, embedder=None):
    """Benchmark metrics for one generated list against a reference set."""
    embedder = embedder or DescriptorEmbedder()
    rates = basic_rates(generated, training_set)
    gen = _valid_mols(generated)
    ref = _valid_mols(reference)
    nan = float("nan")
    have = bool(gen) and bool(ref)
    fcd_value = nan
    if len(gen) >= 2 and len(ref) >= 2:
        fcd_value = fcd(gen, ref, embedder)
    return MetricsReport(
        valid=rates.valid,
        unique=rates.unique,
        novel=rates.novel,
        filters=rates.filters,
        int_div=int_div(gen, 1) if gen else nan,
        int_div2=int_div(gen, 2) if gen else nan,
        snn=snn(gen, ref) if have else nan,
        frag=freq_cosine_sim(gen, ref, "fragment") if have else nan,
        scaf=freq_cosine_sim(gen, ref, "scaffold") if have else nan,
        fcd=fcd_value,
        metadata={
            "embedder": embedder.id,
            "fcd_warning": FCD_WARNING,
            "filters": FILTER_LABEL,
            "fragments": "simplified BRICS (4 rules)",
            "seed": seed,
            "n_generated": rates.n_generated,
            "n_valid": rates.n_valid,
            "n_unique": rates.n_unique,
            "n_reference": len(ref),
        },
    )


def protein_report(generated, actives, train_reference, seed=0, embedder=None):
    """Per-protein FCD/SNN rows and the training-protein reference distribution.

    ``generated`` and ``actives`` map test protein id -> SMILES list;
    ``train_reference`` maps training protein id -> active SMILES list. For
    each reference protein with at least 22 actives, a seeded sample of 20
    is compared against the rest.
    """
    embedder = embedder or DescriptorEmbedder()
    rows, skipped = [], []
    for pid in sorted(generated):
        gen = _valid_mols(generated[pid])
        act = _valid_mols(actives.get(pid, []))
        try:
            if len(act) < 2:
                raise InsufficientActives(f"{pid}: {len(act)} actives (< 2)")
            if len(gen) < 2:
                raise InsufficientActives(f"{pid}: {len(gen)} valid generated (< 2)")
        except InsufficientActives as exc:
            log.info("skip protein=%s reason=%s", pid, exc)
            skipped.append({"protein_id": pid, "reason": str(exc)})
            continue
        rows.append(
            {
                "protein_id": pid,
                "fcd": fcd(gen, act, embedder),
                "snn": snn(gen, act),
                "n_generated": len(gen),
                "n_actives": len(act),
            }
        )
    rng = np.random.default_rng(seed)
    reference = []
    for pid in sorted(train_reference):
        act = _valid_mols(train_reference[pid])
        if len(act) < REFERENCE_SAMPLE + 2:
            skipped.append({"protein_id": pid, "reason": f"{len(act)} actives (< 22)"})
            continue
        pick = set(rng.choice(len(act), size=REFERENCE_SAMPLE, replace=False).tolist())
        sample_ = [m for i, m in enumerate(act) if i in pick]
        rest = [m for i, m in enumerate(act) if i not in pick]
        reference.append(
            {
                "protein_id": pid,
                "fcd": fcd(sample_, rest, embedder),
                "snn": snn(sample_, rest),
                "n_generated": len(sample_),
                "n_actives": len(rest),
            }
        )
    return {"test": rows, "reference": reference, "skipped": skipped}
