"""Synthetic alignment corpora with controllable speaker duration signatures.

Speakers draw phone durations from per-class log-normal distributions whose
medians carry a per-speaker multiplicative signature; ``signature_strength``
scales the inter-speaker spread of those medians (0 = identical speakers), a
per-speaker ``rate_factor`` uniformly stretches all durations. These corpora
give every pipeline property a desk-scale ground truth with known answers.

Two surrogates mimic how voice anonymization systems treat timing:
``duration_preserving_surrogate`` (re-synthesis that keeps phone durations
intact) and ``duration_replacing_surrogate`` (recognition+synthesis cascades
that replace them with speaker-independent ones).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Utterance, assemble
from .inventory import PhonemeInventory, base_inventory
from .rng import substream

# Population-level constants: class-median spread, per-speaker signature
# spread at strength 1, and the median phone duration in seconds.
CLASS_MEDIAN_SPREAD = 0.35
SIGNATURE_SPREAD = 0.3
BASE_MEDIAN_S = 0.08


@dataclass
class SpeakerModel:
    """Generating distribution of one synthetic speaker."""

    speaker_id: str
    medians: np.ndarray   # (N,) per-class median duration, seconds
    log_stds: np.ndarray  # (N,) log-domain standard deviations
    rate_factor: float    # uniform multiplier on all durations
    usage: np.ndarray     # (N,) phone-class frequency distribution, sums to 1


def build_speaker_models(
    n_speakers: int,
    n_classes: int,
    signature_strength: float,
    seed: int,
    log_std: float = 0.25,
    rate_spread: float = 0.0,
) -> list[SpeakerModel]:
    """Per-speaker duration models around a shared seeded population model."""
    if not 0.0 <= signature_strength <= 1.0:
        raise ValueError(f"signature_strength must be in [0, 1], got {signature_strength}")
    if n_speakers < 1 or n_classes < 1:
        raise ValueError("n_speakers and n_classes must be >= 1")
    pop = substream(seed, "population")
    base_medians = BASE_MEDIAN_S * np.exp(pop.normal(0.0, CLASS_MEDIAN_SPREAD, size=n_classes))
    weights = np.exp(pop.normal(0.0, 0.2, size=n_classes))
    usage = weights / weights.sum()
    models = []
    for s in range(n_speakers):
        spk = f"s{s:03d}"
        rng = substream(seed, "speaker-model", spk)
        deltas = rng.normal(0.0, SIGNATURE_SPREAD, size=n_classes)
        medians = base_medians * np.exp(signature_strength * deltas)
        rate_factor = float(np.exp(rate_spread * rng.normal()))
        models.append(SpeakerModel(spk, medians, np.full(n_classes, float(log_std)), rate_factor, usage))
    return models


def gen_corpus(
    n_speakers: int,
    utts_per_speaker: int,
    phones_per_utt: int,
    signature_strength: float,
    seed: int,
    *,
    log_std: float = 0.25,
    rate_spread: float = 0.0,
    inventory: PhonemeInventory | None = None,
    min_class_occurrences: int = 0,
) -> Corpus:
    """Deterministic seeded corpus in the standard Corpus type.

    Segments are contiguous from time zero. ``min_class_occurrences`` forces
    that many tokens of every class into each utterance (useful to guarantee
    full profile coverage); the rest are drawn from the usage distribution.
    """
    if utts_per_speaker < 1 or phones_per_utt < 1:
        raise ValueError("utts_per_speaker and phones_per_utt must be >= 1")
    if inventory is None:
        inventory = base_inventory()
    n = inventory.size
    if min_class_occurrences * n > phones_per_utt:
        raise ValueError(
            f"phones_per_utt={phones_per_utt} cannot hold {min_class_occurrences} occurrence(s) "
            f"of each of {n} classes"
        )
    models = build_speaker_models(
        n_speakers, n, signature_strength, seed, log_std=log_std, rate_spread=rate_spread
    )
    coverage = np.repeat(np.arange(n, dtype=np.int64), min_class_occurrences)
    utterances = []
    for model in models:
        rng = substream(seed, "speaker-utts", model.speaker_id)
        for u in range(utts_per_speaker):
            n_random = phones_per_utt - coverage.size
            tokens = np.concatenate([coverage, rng.choice(n, size=n_random, p=model.usage)])
            rng.shuffle(tokens)
            z = rng.standard_normal(phones_per_utt)
            durations = model.rate_factor * model.medians[tokens] * np.exp(model.log_stds[tokens] * z)
            starts = np.concatenate([[0.0], np.cumsum(durations)[:-1]])
            utterances.append(
                Utterance(f"{model.speaker_id}-u{u:04d}", model.speaker_id,
                          tokens.astype(np.int32), starts, durations)
            )
    return assemble(utterances, inventory)


def duration_preserving_surrogate(corpus: Corpus, seed: int) -> Corpus:
    """Anonymization stand-in that keeps all phone durations bit-identical.

    Only utterance ids are relabeled (with an order-preserving seeded tag),
    mirroring systems that synthesize a new voice over the original timing.
    Downstream duration statistics, and therefore EER grids, are unchanged.
    """
    tag = int(substream(seed, "relabel").integers(0, 16 ** 6))
    prefix = f"anon{tag:06x}"
    utterances = [
        Utterance(f"{prefix}-{u.id}", u.speaker_id, u.class_ids.copy(),
                  u.starts.copy(), u.durations.copy())
        for u in corpus.utterances
    ]
    speakers = {
        spk: [f"{prefix}-{uid}" for uid in ids] for spk, ids in corpus.speakers.items()
    }
    return Corpus(utterances, speakers, corpus.inventory, corpus.n_dropped_utterances)


def duration_replacing_surrogate(corpus: Corpus, residual_strength: float, seed: int) -> Corpus:
    """Anonymization stand-in that resamples durations from a shared model.

    Durations are geometrically blended between a speaker-independent
    log-normal fit of the whole corpus and the originals:
    ``residual_strength=0`` leaves no speaker signal in timing, 1 returns the
    corpus unchanged. Start times are rebuilt to keep segments contiguous.
    """
    if not 0.0 <= residual_strength <= 1.0:
        raise ValueError(f"residual_strength must be in [0, 1], got {residual_strength}")
    if residual_strength == 1.0:
        return corpus

    n = corpus.n_classes
    ids = np.concatenate([u.class_ids for u in corpus.utterances])
    log_durs = np.log(np.concatenate([u.durations for u in corpus.utterances]))
    counts = np.maximum(np.bincount(ids, minlength=n), 1)
    mean_log = np.bincount(ids, weights=log_durs, minlength=n) / counts
    var_log = np.bincount(ids, weights=log_durs ** 2, minlength=n) / counts - mean_log ** 2
    std_log = np.sqrt(np.maximum(var_log, 0.0))

    r = residual_strength
    utterances = []
    for u in corpus.utterances:
        rng = substream(seed, "replace-durations", u.id)
        z = rng.standard_normal(len(u))
        shared = np.exp(mean_log[u.class_ids] + std_log[u.class_ids] * z)
        durations = u.durations ** r * shared ** (1.0 - r)
        start0 = float(u.starts[0]) if len(u) else 0.0
        starts = start0 + np.concatenate([[0.0], np.cumsum(durations)[:-1]])
        utterances.append(Utterance(u.id, u.speaker_id, u.class_ids.copy(), starts, durations))
    speakers = {spk: list(v) for spk, v in corpus.speakers.items()}
    return Corpus(utterances, speakers, corpus.inventory, corpus.n_dropped_utterances)
