"""Duration statistics: speaker profiles, expected durations, speech rate.

A duration profile holds the mean duration per phoneme class over a group of
utterances. Classes with fewer instances than a threshold fall back to the
global mean duration of all phones in that group, so profile vectors are
always fully populated and strictly positive.

Speech rate of an utterance is (sum of expected durations of its phones) /
(sum of actual durations): above 1 means faster than the reference corpus.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .corpus import Corpus, Utterance
from .errors import CacheVersionError, PhondurError
from .inventory import PhonemeInventory

STATS_CACHE_VERSION = 1


@dataclass
class DurationProfile:
    """Mean phone durations of one utterance group (one trial side)."""

    mu: np.ndarray           # (N,) mean seconds per class
    counts: np.ndarray       # (N,) instance counts
    global_mean: float       # mean duration over all instances in the group
    filled_mask: np.ndarray  # (N,) True where mu fell back to global_mean


@dataclass
class ExpectedDurations:
    """Corpus-level mean duration per class, plus the corpus mean speech rate."""

    labels: tuple[str, ...]
    lbar: np.ndarray
    overall_rate_mean: float


def duration_profile(
    utterances: Sequence[Utterance],
    inventory: PhonemeInventory,
    min_instances: int = 1,
) -> DurationProfile:
    """Profile an utterance group with the minimum-instance fallback rule.

    mu[k] is the mean duration of class k when the group holds at least
    ``min_instances`` instances of it; otherwise mu[k] is the global mean
    duration of all phones in the group and filled_mask[k] is set.
    """
    if min_instances < 1:
        raise ValueError(f"min_instances must be >= 1, got {min_instances}")
    if not utterances:
        raise PhondurError("cannot profile an empty utterance group")
    ids = np.concatenate([u.class_ids for u in utterances])
    durs = np.concatenate([u.durations for u in utterances])
    if ids.size == 0:
        raise PhondurError("utterance group has no mapped segments")
    n = inventory.size
    counts = np.bincount(ids, minlength=n)
    sums = np.bincount(ids, weights=durs, minlength=n)
    global_mean = float(durs.sum() / durs.size)
    filled = counts < min_instances
    mu = np.where(filled, global_mean, sums / np.maximum(counts, 1))
    return DurationProfile(mu, counts, global_mean, filled)


def mean_center(profile) -> np.ndarray:
    """Subtract the component mean; accepts a profile or a plain vector."""
    mu = np.asarray(getattr(profile, "mu", profile), dtype=float)
    return mu - mu.mean()


def duration_matrix(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    """Per-utterance class duration sums and instance counts.

    Rows follow ``corpus.utterances`` order. Shared by trial scoring so side
    profiles reduce to row sums.
    """
    n = corpus.n_classes
    n_utts = len(corpus.utterances)
    if n_utts == 0:
        return np.zeros((0, n)), np.zeros((0, n), dtype=np.int64)
    seg_counts = np.array([len(u) for u in corpus.utterances])
    rows = np.repeat(np.arange(n_utts), seg_counts)
    ids = np.concatenate([u.class_ids for u in corpus.utterances])
    durs = np.concatenate([u.durations for u in corpus.utterances])
    lin = rows * n + ids
    sums = np.bincount(lin, weights=durs, minlength=n_utts * n).reshape(n_utts, n)
    counts = np.bincount(lin, minlength=n_utts * n).reshape(n_utts, n)
    return sums, counts


def expected_durations(corpus: Corpus) -> ExpectedDurations:
    """Mean duration per class over the whole corpus, NaN where unobserved.

    ``overall_rate_mean`` is the unweighted mean of per-utterance speech
    rates against these expectations (close to 1 when computed on the same
    corpus, but not exactly 1: it is a mean of ratios).
    """
    if not corpus.utterances:
        raise PhondurError("cannot compute expected durations of an empty corpus")
    ids = np.concatenate([u.class_ids for u in corpus.utterances])
    durs = np.concatenate([u.durations for u in corpus.utterances])
    n = corpus.n_classes
    counts = np.bincount(ids, minlength=n)
    sums = np.bincount(ids, weights=durs, minlength=n)
    lbar = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    expected = ExpectedDurations(tuple(corpus.inventory.labels()), lbar, float("nan"))
    rates = speech_rates(corpus, expected)
    expected.overall_rate_mean = float(rates.mean())
    return expected


def aligned_lbar(inventory: PhonemeInventory, expected: ExpectedDurations) -> np.ndarray:
    """Expected durations reindexed to ``inventory`` class order.

    Allows expectations trained on one corpus to be applied to another as
    long as every class of the target corpus has a defined expectation.
    """
    index = {label: i for i, label in enumerate(expected.labels)}
    out = np.empty(inventory.size)
    for class_id, label in enumerate(inventory.labels()):
        j = index.get(label)
        if j is None or not np.isfinite(expected.lbar[j]):
            raise PhondurError(f"class {label!r} has no expected duration in the reference")
        out[class_id] = expected.lbar[j]
    return out


def speech_rate(utterance: Utterance, expected: ExpectedDurations) -> float:
    """Expected-over-actual total duration of the utterance's phone sequence.

    The utterance's class ids must be aligned with ``expected`` (same corpus
    inventory); use :func:`aligned_lbar` plus :func:`speech_rates` otherwise.
    """
    lbar = expected.lbar[utterance.class_ids]
    if not np.all(np.isfinite(lbar)):
        bad = sorted(set(utterance.class_ids[~np.isfinite(lbar)].tolist()))
        raise PhondurError(f"utterance {utterance.id!r} uses classes with no expected duration: {bad}")
    return float(lbar.sum() / utterance.durations.sum())


def speech_rates(corpus: Corpus, expected: ExpectedDurations) -> np.ndarray:
    """Per-utterance speech rates, in ``corpus.utterances`` order."""
    lbar = aligned_lbar(corpus.inventory, expected)
    out = np.empty(len(corpus.utterances))
    for i, utt in enumerate(corpus.utterances):
        out[i] = lbar[utt.class_ids].sum() / utt.durations.sum()
    return out


def normalize_speech_rate(
    corpus: Corpus,
    expected: ExpectedDurations,
    target: float | None = None,
) -> Corpus:
    """Scale every utterance by a constant factor so its rate hits ``target``.

    The default target is the reference corpus mean rate. Start times scale
    with durations, keeping segments contiguous and non-overlapping.
    """
    if target is None:
        target = expected.overall_rate_mean
    target = float(target)
    if not np.isfinite(target) or target <= 0:
        raise PhondurError(f"invalid speech-rate target {target}")
    lbar = aligned_lbar(corpus.inventory, expected)
    new_utterances = []
    for utt in corpus.utterances:
        rate = lbar[utt.class_ids].sum() / utt.durations.sum()
        factor = rate / target
        new_utterances.append(
            Utterance(utt.id, utt.speaker_id, utt.class_ids.copy(),
                      utt.starts * factor, utt.durations * factor)
        )
    speakers = {spk: list(ids) for spk, ids in corpus.speakers.items()}
    return Corpus(new_utterances, speakers, corpus.inventory, corpus.n_dropped_utterances)


def write_profile_tsv(
    profile: DurationProfile,
    inventory: PhonemeInventory,
    out: TextIO,
    header: Sequence[str] = (),
) -> None:
    """TSV report, one ``class<TAB>mean<TAB>count`` row per class."""
    for line in header:
        out.write(f"# {line}\n")
    for class_id, label in enumerate(inventory.labels()):
        out.write(f"{label}\t{profile.mu[class_id]:.9g}\t{int(profile.counts[class_id])}\n")


def write_expected_tsv(expected: ExpectedDurations, out: TextIO, header: Sequence[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    out.write(f"# overall_rate_mean\t{expected.overall_rate_mean:.9g}\n")
    for label, value in zip(expected.labels, expected.lbar):
        out.write(f"{label}\t{value:.9g}\n")


def save_profile(profile: DurationProfile, path: str | Path) -> None:
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.array(json.dumps({"cache_version": STATS_CACHE_VERSION}, sort_keys=True)),
        mu=profile.mu,
        counts=profile.counts,
        global_mean=np.array(profile.global_mean),
        filled_mask=profile.filled_mask,
    )
    Path(path).write_bytes(buf.getvalue())


def load_profile(path: str | Path) -> DurationProfile:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("cache_version") != STATS_CACHE_VERSION:
            raise CacheVersionError(
                f"{path}: cache version {meta.get('cache_version')} != {STATS_CACHE_VERSION}"
            )
        return DurationProfile(
            np.asarray(data["mu"], dtype=float),
            np.asarray(data["counts"]),
            float(data["global_mean"]),
            np.asarray(data["filled_mask"], dtype=bool),
        )


def save_expected(
    expected: ExpectedDurations, path: str | Path, extra_meta: dict | None = None
) -> None:
    meta = {"cache_version": STATS_CACHE_VERSION}
    if extra_meta:
        meta.update(extra_meta)
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.array(json.dumps(meta, sort_keys=True)),
        labels=np.array(list(expected.labels)),
        lbar=expected.lbar,
        overall_rate_mean=np.array(expected.overall_rate_mean),
    )
    Path(path).write_bytes(buf.getvalue())


def load_expected(path: str | Path) -> ExpectedDurations:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("cache_version") != STATS_CACHE_VERSION:
            raise CacheVersionError(
                f"{path}: cache version {meta.get('cache_version')} != {STATS_CACHE_VERSION}"
            )
        return ExpectedDurations(
            tuple(str(x) for x in data["labels"]),
            np.asarray(data["lbar"], dtype=float),
            float(data["overall_rate_mean"]),
        )
