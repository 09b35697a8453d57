"""Verification-trial generation and scoring.

Same-speaker trials pair disjoint seeded chunks of ``m`` utterances from one
speaker; different-speaker trials pair a seeded chunk of each of two
speakers, with a fixed number of sampled impostors per speaker. Each speaker
draws from its own RNG substream, so trial sets are reproducible regardless
of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .corpus import Corpus
from .errors import ParseError, PhondurError
from .metrics import MetricConfig, cosine_distance_rows, ratio_distance_rows
from .rng import substream
from .stats import ExpectedDurations, duration_matrix, speech_rates

SAME = "same"
DIFFERENT = "different"


@dataclass(frozen=True)
class Trial:
    side_a: tuple[str, ...]
    side_b: tuple[str, ...]
    label: str

    def __post_init__(self):
        if self.label not in (SAME, DIFFERENT):
            raise ValueError(f"trial label must be {SAME!r} or {DIFFERENT!r}, got {self.label!r}")


@dataclass
class TrialSet:
    trials: list[Trial]
    m: int      # target utterances per trial side
    seed: int


@dataclass(frozen=True)
class ScoredTrial:
    trial: Trial
    score: float


@dataclass
class ScoringResult:
    """Scores in trial order, minus trials excluded as unscorable."""

    scored: list[ScoredTrial]
    exclusions: list[tuple[int, str]]  # (trial index, reason)

    @property
    def n_excluded(self) -> int:
        return len(self.exclusions)

    def scores_by_label(self) -> tuple[np.ndarray, np.ndarray]:
        same = [s.score for s in self.scored if s.trial.label == SAME]
        diff = [s.score for s in self.scored if s.trial.label == DIFFERENT]
        return np.asarray(same), np.asarray(diff)


def gen_same_speaker(corpus: Corpus, m: int, seed: int) -> list[Trial]:
    """All unordered pairs of disjoint seeded m-utterance chunks per speaker.

    Utterances are permuted once per speaker and cut into consecutive chunks;
    a trailing partial chunk is dropped. Speakers with fewer than 2m
    utterances contribute nothing. With m=1 this enumerates all utterance
    pairs of each speaker.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    trials: list[Trial] = []
    for spk in corpus.speaker_ids:
        utts = corpus.speakers[spk]
        rng = substream(seed, "same", spk)
        perm = rng.permutation(len(utts))
        chunks = [
            tuple(utts[j] for j in perm[i * m:(i + 1) * m])
            for i in range(len(utts) // m)
        ]
        for i in range(len(chunks)):
            for j in range(i + 1, len(chunks)):
                trials.append(Trial(chunks[i], chunks[j], SAME))
    return trials


def gen_diff_speaker(corpus: Corpus, m: int, k_per_speaker: int, seed: int) -> list[Trial]:
    """k impostor trials per speaker: total is exactly k * number of speakers.

    For each (speaker, impostor) pair one trial is formed from a seeded random
    chunk of m utterances per side; speakers with fewer than m utterances use
    all of them.
    """
    if m < 1 or k_per_speaker < 1:
        raise ValueError("m and k_per_speaker must be >= 1")
    speakers = corpus.speaker_ids
    if len(speakers) < 2:
        raise PhondurError("different-speaker trials need at least 2 speakers")
    if k_per_speaker >= len(speakers):
        raise PhondurError(
            f"k_per_speaker={k_per_speaker} must be below the speaker count ({len(speakers)})"
        )
    trials: list[Trial] = []
    for spk in speakers:
        rng = substream(seed, "diff", spk)
        others = [s for s in speakers if s != spk]
        impostors = rng.choice(len(others), size=k_per_speaker, replace=False)
        for idx in impostors:
            side_a = _random_chunk(corpus.speakers[spk], m, rng)
            side_b = _random_chunk(corpus.speakers[others[idx]], m, rng)
            trials.append(Trial(side_a, side_b, DIFFERENT))
    return trials


def _random_chunk(utts: Sequence[str], m: int, rng: np.random.Generator) -> tuple[str, ...]:
    if len(utts) <= m:
        return tuple(utts)
    picked = rng.choice(len(utts), size=m, replace=False)
    return tuple(utts[i] for i in sorted(picked))


def score_trials(
    corpus: Corpus,
    trial_set: TrialSet,
    config: MetricConfig,
    expected: ExpectedDurations | None = None,
    *,
    matrices: tuple[np.ndarray, np.ndarray] | None = None,
) -> ScoringResult:
    """Score every trial with one duration profile (or mean rate) per side.

    Scoring is vectorized: side profiles are row-sum reductions over
    per-utterance class matrices (pass ``matrices`` to reuse them across
    calls). Trials whose profile degenerates under the metric's
    normalization are excluded and reported, never silently scored.
    """
    trials = trial_set.trials
    if config.kind == "rate" and expected is None:
        raise PhondurError("the rate metric needs expected durations")
    if not trials:
        return ScoringResult([], [])
    row = {utt.id: i for i, utt in enumerate(corpus.utterances)}
    try:
        flat = np.fromiter(
            (row[u] for t in trials for u in (*t.side_a, *t.side_b)),
            dtype=np.int64,
        )
    except KeyError as e:
        raise PhondurError(f"trial references unknown utterance {e.args[0]!r}") from None
    lengths = np.fromiter(
        (n for t in trials for n in (len(t.side_a), len(t.side_b))), dtype=np.int64
    )
    if np.any(lengths == 0):
        raise PhondurError("trial sides must be non-empty")
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])

    if config.kind == "rate":
        rates = speech_rates(corpus, expected)
        side_sum = np.add.reduceat(rates[flat], offsets)
        side_rate = (side_sum / lengths).reshape(-1, 2)
        ra, rb = side_rate[:, 0], side_rate[:, 1]
        scores = 1.0 - np.minimum(ra / rb, rb / ra)
        degenerate = np.zeros(len(trials), dtype=bool)  # rates are positive by construction
        reason = ""
    else:
        sums, counts = matrices if matrices is not None else duration_matrix(corpus)
        side_sums = np.add.reduceat(sums[flat], offsets, axis=0)
        side_counts = np.add.reduceat(counts[flat], offsets, axis=0)
        total_cnt = side_counts.sum(axis=1)
        global_mean = side_sums.sum(axis=1) / total_cnt
        mu = np.where(
            side_counts < config.min_instances,
            global_mean[:, None],
            side_sums / np.maximum(side_counts, 1),
        )
        mu_a, mu_b = mu[0::2], mu[1::2]
        if config.kind == "cosine":
            scores, degenerate = cosine_distance_rows(mu_a, mu_b, config.norm)
            reason = "degenerate profile: zero vector after normalization"
        else:
            scores = ratio_distance_rows(mu_a, mu_b)
            degenerate = np.zeros(len(trials), dtype=bool)
            reason = ""

    scored: list[ScoredTrial] = []
    exclusions: list[tuple[int, str]] = []
    for i, trial in enumerate(trials):
        if degenerate[i]:
            exclusions.append((i, reason))
        else:
            scored.append(ScoredTrial(trial, float(scores[i])))
    return ScoringResult(scored, exclusions)


def write_trials(trials: Iterable[Trial], out: TextIO, header: Sequence[str] = ()) -> None:
    """One ``label<TAB>side_a<TAB>side_b`` line per trial, ids comma-joined."""
    for line in header:
        out.write(f"# {line}\n")
    for t in trials:
        out.write(f"{t.label}\t{','.join(t.side_a)}\t{','.join(t.side_b)}\n")


def read_trials(stream: Iterable[str], source: str = "<trials>") -> list[Trial]:
    trials = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", source, lineno)
        label, a, b = fields
        if label not in (SAME, DIFFERENT):
            raise ParseError(f"bad trial label {label!r}", source, lineno)
        side_a = tuple(a.split(","))
        side_b = tuple(b.split(","))
        if not all(side_a) or not all(side_b):
            raise ParseError("empty utterance id in trial side", source, lineno)
        if set(side_a) & set(side_b):
            raise ParseError("trial sides overlap", source, lineno)
        trials.append(Trial(side_a, side_b, label))
    return trials


def write_scores(scored: Iterable[ScoredTrial], out: TextIO, header: Sequence[str] = ()) -> None:
    """Trial lines with the score appended as a fourth column."""
    for line in header:
        out.write(f"# {line}\n")
    for s in scored:
        t = s.trial
        out.write(f"{t.label}\t{','.join(t.side_a)}\t{','.join(t.side_b)}\t{s.score:.17g}\n")
