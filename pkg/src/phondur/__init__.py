"""phondur: speaker-verification analytics over phoneme durations.

Builds per-speaker phoneme-duration profiles from forced-alignment files,
scores verification trials with duration-based distances, and assembles
equal-error-rate grids over trial size and instance thresholds, for original
as well as anonymized speech.
"""

from .corpus import Corpus, Segment, Utterance, load_cache, save_cache
from .eer import EerGrid, EerResult, build_grid, compute_eer
from .errors import (
    CacheVersionError,
    ConfigError,
    DegenerateProfileError,
    ParseError,
    PhondurError,
    UnknownLabelError,
)
from .ingest import build_corpus, parse_ctm, parse_textgrid, parse_utt2spk
from .inventory import PhonemeClass, PhonemeInventory, base_inventory, extended_inventory
from .metrics import MetricConfig, cosine_distance, rate_distance, ratio_distance
from .stats import (
    DurationProfile,
    ExpectedDurations,
    duration_profile,
    expected_durations,
    mean_center,
    normalize_speech_rate,
    speech_rate,
    speech_rates,
)
from .synth import (
    SpeakerModel,
    duration_preserving_surrogate,
    duration_replacing_surrogate,
    gen_corpus,
)
from .trials import (
    ScoredTrial,
    ScoringResult,
    Trial,
    TrialSet,
    gen_diff_speaker,
    gen_same_speaker,
    score_trials,
)

__version__ = "0.1.0"
