"""Compare the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Both backends are imported directly, so one run times both and also checks
that they agree.
"""

import argparse
import json
import sys
import time

import numpy as np

from prot2mol import seqalign
from prot2mol._kernels import _pure

try:
    from prot2mol._kernels import _ext
except ImportError:
    _ext = None


def _best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def gotoh_case(length, n_pairs, seed):
    rng = np.random.default_rng(seed)
    mat = seqalign.blosum62()
    seqs = [rng.integers(20, size=length) for _ in range(2 * n_pairs)]
    pairs = list(zip(seqs[::2], seqs[1::2]))
    scores = np.ascontiguousarray(mat.scores, dtype=np.float64)

    def run(backend):
        return [backend.gotoh(a, b, scores, 10.0, 0.5) for a, b in pairs]

    return run


def tanimoto_case(n_rows, seed):
    rng = np.random.default_rng(seed)
    # sparse-ish rows, like 2048-bit Morgan fingerprints
    bits = rng.random((2 * n_rows, 2048)) < 0.03
    packed = np.packbits(bits, axis=1, bitorder="little").view(np.uint64)
    A = np.ascontiguousarray(packed[:n_rows])
    B = np.ascontiguousarray(packed[n_rows:])

    def run(backend):
        return backend.tanimoto_matrix(A, B)

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if _ext is None:
        print("compiled extension not built; run: python3 setup.py build_ext --inplace")
        return 1

    cases = [
        ("gotoh 100x100 (x20)", gotoh_case(100, 20, args.seed)),
        ("gotoh 300x300 (x5)", gotoh_case(300, 5, args.seed)),
        ("tanimoto 200x200", tanimoto_case(200, args.seed)),
        ("tanimoto 1000x1000", tanimoto_case(1000, args.seed)),
    ]
    rows = []
    print(f"{'case':<22}{'cython s':>12}{'python s':>12}{'speedup':>10}  agree")
    for name, run in cases:
        t_ext, out_ext = _best_of(lambda: run(_ext), args.repeat)
        t_pure, out_pure = _best_of(lambda: run(_pure), args.repeat)
        if isinstance(out_ext, np.ndarray):
            agree = bool(np.array_equal(out_ext, out_pure))
        else:
            agree = out_ext == out_pure
        rows.append({"case": name, "cython_s": t_ext, "python_s": t_pure,
                     "speedup": t_pure / t_ext, "agree": agree})
        print(f"{name:<22}{t_ext:>12.4f}{t_pure:>12.4f}{t_pure / t_ext:>9.1f}x  {agree}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
