"""Independent reference implementations used to pin expected test values.

These deliberately avoid the library's own bookkeeping: EER comes from a
per-threshold counting sweep, cosine from math.fsum. Keep them dumb.
"""

import math

import numpy as np


def eer_sweep_oracle(same_scores, diff_scores):
    """Brute-force threshold sweep: count FAR/FRR at every candidate.

    Candidates are the score union plus a sentinel above the maximum; the
    crossing is taken at the first exact FAR==FRR point or linearly
    interpolated between the two points where FAR-FRR changes sign.
    Returns (eer, threshold).
    """
    same = np.sort(np.asarray(same_scores, dtype=float))
    diff = np.sort(np.asarray(diff_scores, dtype=float))
    cands = sorted(set(same.tolist()) | set(diff.tolist()))
    cands.append(cands[-1] + 1.0)
    points = []
    for t in cands:
        far = np.count_nonzero(diff < t) / diff.size
        frr = np.count_nonzero(same >= t) / same.size
        points.append((t, far, frr))
    for t, far, frr in points:
        if far == frr:
            return far, t
    prev = points[0]
    for cur in points[1:]:
        gap0 = prev[1] - prev[2]
        gap1 = cur[1] - cur[2]
        if gap0 < 0.0 < gap1:
            alpha = -gap0 / (gap1 - gap0)
            eer = prev[1] + alpha * (cur[1] - prev[1])
            thr = prev[0] + alpha * (cur[0] - prev[0])
            return eer, thr
        prev = cur
    raise AssertionError("FAR-FRR never crossed zero")


def cosine_distance_oracle(a, b):
    """1 - cosine via fsum, no normalization."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return 1.0 - dot / (na * nb)


def centered(v):
    v = [float(x) for x in v]
    mean = math.fsum(v) / len(v)
    return [x - mean for x in v]


def ratio_distance_oracle(a, b):
    """Direct evaluation of the min-ratio distance."""
    terms = [min(x / y, y / x) for x, y in zip(a, b)]
    return 1.0 - math.fsum(terms) / len(terms)
