"""Shared corpus-construction and scoring shortcuts for the test suite."""

import numpy as np

from phondur.corpus import Utterance, assemble
from phondur.eer import compute_eer
from phondur.inventory import ARPABET_PHONEMES, PhonemeClass, PhonemeInventory
from phondur.metrics import MetricConfig
from phondur.trials import TrialSet, gen_diff_speaker, gen_same_speaker, score_trials


def small_inventory(n: int) -> PhonemeInventory:
    classes = tuple(PhonemeClass(i, ARPABET_PHONEMES[i]) for i in range(n))
    return PhonemeInventory("base", classes)


def utt(utt_id, speaker, class_ids, durations, start0=0.0):
    durations = np.asarray(durations, dtype=float)
    starts = start0 + np.concatenate([[0.0], np.cumsum(durations)[:-1]])
    return Utterance(utt_id, speaker, np.asarray(class_ids, dtype=np.int32), starts, durations)


def make_corpus(utterances, inventory):
    return assemble(list(utterances), inventory)


def pipeline_eer(corpus, m, min_instances, seed, k_per_speaker, kind="ratio", expected=None):
    """Generate trials, score with the given metric, return the EER result."""
    same = gen_same_speaker(corpus, m, seed)
    diff = gen_diff_speaker(corpus, m, k_per_speaker, seed)
    config = MetricConfig(kind=kind, min_instances=min_instances)
    res_same = score_trials(corpus, TrialSet(same, m, seed), config, expected)
    res_diff = score_trials(corpus, TrialSet(diff, m, seed), config, expected)
    return compute_eer(
        [s.score for s in res_same.scored], [s.score for s in res_diff.scored]
    )
