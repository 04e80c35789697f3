"""Pure-Python/numpy kernels, used when the compiled extension is absent."""

import numpy as np

NEG_INF = float("-inf")


def _better(s1, m1, l1, s2, m2, l2):
    """Lexicographic (score high, matches high, length low) comparison."""
    if s1 != s2:
        return s1 > s2
    if m1 != m2:
        return m1 > m2
    return l1 < l2


def gotoh(a, b, matrix, gap_open, gap_extend):
    """Affine-gap global alignment.

    ``a`` and ``b`` are integer codes indexing ``matrix``. A gap of length k
    costs ``gap_open + (k - 1) * gap_extend``. Among co-optimal alignments
    the one with the most identities, then the shortest, is kept; returns
    (score, identities, alignment length).
    """
    m, n = len(a), len(b)
    mat = matrix.tolist()
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    # three states per cell, each a (score, matches, length) triple, rolling rows
    prevM = [(NEG_INF, 0, 0)] * (n + 1)
    prevX = [(NEG_INF, 0, 0)] * (n + 1)
    prevY = [(NEG_INF, 0, 0)] * (n + 1)
    prevM[0] = (0.0, 0, 0)
    # row 0: only Y (gap in a)
    for j in range(1, n + 1):
        prevY[j] = (-(gap_open + (j - 1) * gap_extend), 0, j)
    for i in range(1, m + 1):
        curM = [(NEG_INF, 0, 0)] * (n + 1)
        curX = [(NEG_INF, 0, 0)] * (n + 1)
        curY = [(NEG_INF, 0, 0)] * (n + 1)
        curX[0] = (-(gap_open + (i - 1) * gap_extend), 0, i)
        ai = a[i - 1]
        row = mat[ai]
        for j in range(1, n + 1):
            # match/mismatch from the diagonal
            best = prevM[j - 1]
            for cand in (prevX[j - 1], prevY[j - 1]):
                if _better(*cand, *best):
                    best = cand
            if best[0] != NEG_INF:
                bj = b[j - 1]
                curM[j] = (best[0] + row[bj], best[1] + (ai == bj), best[2] + 1)
            # gap in b (consume a_i)
            up_m, up_x, up_y = prevM[j], prevX[j], prevY[j]
            best = (up_m[0] - gap_open, up_m[1], up_m[2] + 1)
            for src, pen in ((up_x, gap_extend), (up_y, gap_open)):
                cand = (src[0] - pen, src[1], src[2] + 1)
                if _better(*cand, *best):
                    best = cand
            curX[j] = best
            # gap in a (consume b_j)
            lf_m, lf_x, lf_y = curM[j - 1], curX[j - 1], curY[j - 1]
            best = (lf_m[0] - gap_open, lf_m[1], lf_m[2] + 1)
            for src, pen in ((lf_y, gap_extend), (lf_x, gap_open)):
                cand = (src[0] - pen, src[1], src[2] + 1)
                if _better(*cand, *best):
                    best = cand
            curY[j] = best
        prevM, prevX, prevY = curM, curX, curY
    best = prevM[n]
    for cand in (prevX[n], prevY[n]):
        if _better(*cand, *best):
            best = cand
    return float(best[0]), int(best[1]), int(best[2])


def tanimoto_matrix(A, B):
    """Tanimoto similarity between rows of two packed uint64 bit matrices."""
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    if out.size == 0:
        return out
    pop_b = np.bitwise_count(B).sum(axis=1).astype(np.int64)
    for i in range(A.shape[0]):
        inter = np.bitwise_count(A[i] & B).sum(axis=1).astype(np.int64)
        pop_a = int(np.bitwise_count(A[i]).sum())
        union = pop_a + pop_b - inter
        with np.errstate(invalid="ignore", divide="ignore"):
            row = inter / union
        row[union == 0] = 1.0
        out[i] = row
    return out
