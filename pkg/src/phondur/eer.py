"""Equal error rate computation and result grids.

Scores are distances (same-speaker trials expected smaller). A trial is
accepted at threshold t when its score is strictly below t, so:

    FAR(t) = fraction of different-speaker scores <  t
    FRR(t) = fraction of same-speaker scores      >= t

Thresholds sweep the sorted union of scores plus a sentinel above the
maximum. FAR - FRR is nondecreasing in t; the EER is read at the first exact
zero, or linearly interpolated between the two operating points where the
sign change happens. The strict/non-strict split above and the interpolation
rule are fixed for bit-reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence, TextIO

import numpy as np

from .corpus import Corpus
from .errors import PhondurError
from .metrics import MetricConfig
from .stats import ExpectedDurations, duration_matrix, expected_durations
from .trials import TrialSet, gen_diff_speaker, gen_same_speaker, score_trials


@dataclass(frozen=True)
class EerResult:
    eer: float        # in [0, 1]
    threshold: float  # score value at the EER operating point
    n_same: int
    n_diff: int


@dataclass
class EerGrid:
    """EER per (average utterances per trial, minimum instance threshold)."""

    m_values: list[int]
    min_instance_values: list  # ints, or [None] for the rate metric
    cells: dict                # (m, min_instances) -> EerResult
    n_excluded: dict           # (m, min_instances) -> excluded trial count
    metric: str
    seed: int


def compute_eer(same_scores, diff_scores) -> EerResult:
    """EER of distance scores via a threshold sweep over the score union."""
    same = np.sort(np.asarray(same_scores, dtype=float))
    diff = np.sort(np.asarray(diff_scores, dtype=float))
    if same.size == 0 or diff.size == 0:
        raise PhondurError("EER needs at least one score of each label")
    if not (np.all(np.isfinite(same)) and np.all(np.isfinite(diff))):
        raise PhondurError("scores must be finite")

    thresholds = np.unique(np.concatenate([same, diff]))
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)  # sentinel: FAR=1, FRR=0
    far = np.searchsorted(diff, thresholds, side="left") / diff.size
    frr = 1.0 - np.searchsorted(same, thresholds, side="left") / same.size
    gap = far - frr  # nondecreasing: -1 at the minimum score, +1 at the sentinel

    zero = np.nonzero(gap == 0.0)[0]
    if zero.size:
        i = int(zero[0])
        return EerResult(float(far[i]), float(thresholds[i]), same.size, diff.size)
    j = int(np.argmax(gap > 0.0))
    i = j - 1
    alpha = -gap[i] / (gap[j] - gap[i])
    eer = far[i] + alpha * (far[j] - far[i])
    threshold = thresholds[i] + alpha * (thresholds[j] - thresholds[i])
    return EerResult(float(eer), float(threshold), same.size, diff.size)


def build_grid(
    corpus: Corpus,
    base_config: MetricConfig,
    m_values: Sequence[int],
    min_instance_values: Sequence[int],
    seed: int,
    k_per_speaker: int,
    expected: ExpectedDurations | None = None,
) -> EerGrid:
    """Generate, score and summarize trials for every grid cell.

    Trial sets depend only on (corpus, m, seed, k), so each row's same- and
    different-speaker sets are generated once and shared across the
    minimum-instance columns; only side profiles are recomputed per column.
    The rate metric has no instance threshold, so its grid has one column.
    """
    m_values = sorted(set(int(m) for m in m_values))
    if base_config.kind == "rate":
        cols: list = [None]
        if expected is None:
            expected = expected_durations(corpus)
    else:
        cols = sorted(set(int(v) for v in min_instance_values))
        if not cols:
            raise ValueError("min_instance_values must be non-empty")
    if not m_values:
        raise ValueError("m_values must be non-empty")

    matrices = duration_matrix(corpus)
    cells: dict = {}
    n_excluded: dict = {}
    for m in m_values:
        same_set = TrialSet(gen_same_speaker(corpus, m, seed), m, seed)
        diff_set = TrialSet(gen_diff_speaker(corpus, m, k_per_speaker, seed), m, seed)
        for col in cols:
            config = replace(base_config, min_instances=col if col is not None else 1)
            try:
                res_same = score_trials(corpus, same_set, config, expected, matrices=matrices)
                res_diff = score_trials(corpus, diff_set, config, expected, matrices=matrices)
                same_scores = [s.score for s in res_same.scored]
                diff_scores = [s.score for s in res_diff.scored]
                cells[(m, col)] = compute_eer(same_scores, diff_scores)
                n_excluded[(m, col)] = res_same.n_excluded + res_diff.n_excluded
            except PhondurError as e:
                raise PhondurError(f"grid cell m={m} min_instances={col}: {e}") from e
    return EerGrid(m_values, cols, cells, n_excluded, base_config.kind, seed)


def write_grid_tsv(grid: EerGrid, out: TextIO, header: Sequence[str] = ()) -> None:
    """Percent EER with 1 decimal, m down the rows, thresholds across columns."""
    for line in header:
        out.write(f"# {line}\n")
    col_names = ["-" if c is None else str(c) for c in grid.min_instance_values]
    out.write("m\t" + "\t".join(col_names) + "\n")
    for m in grid.m_values:
        row = [f"{grid.cells[(m, c)].eer * 100:.1f}" for c in grid.min_instance_values]
        out.write(f"{m}\t" + "\t".join(row) + "\n")


def grid_to_json(grid: EerGrid, meta: dict | None = None) -> str:
    """Full-precision JSON variant with counts and exclusion totals."""
    cells = []
    for m in grid.m_values:
        for col in grid.min_instance_values:
            r = grid.cells[(m, col)]
            cells.append({
                "m": m,
                "min_instances": col,
                "eer": r.eer,
                "threshold": r.threshold,
                "n_same": r.n_same,
                "n_diff": r.n_diff,
                "n_excluded": grid.n_excluded.get((m, col), 0),
            })
    doc = {
        "meta": dict(meta or {}, metric=grid.metric, seed=grid.seed),
        "m_values": grid.m_values,
        "min_instance_values": grid.min_instance_values,
        "cells": cells,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
