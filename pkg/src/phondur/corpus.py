"""In-memory corpus model and its versioned binary cache.

A Corpus is immutable by convention once built: operations that change
durations (rate normalization, anonymization surrogates) return new corpora.
Per-utterance phone data lives in parallel numpy arrays, which keeps trial
scoring over large corpora cheap.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CacheVersionError, PhondurError
from .inventory import PhonemeClass, PhonemeInventory

CACHE_VERSION = 1


@dataclass(frozen=True)
class Segment:
    """One aligned phone as read from an alignment file (label not yet mapped)."""

    utterance_id: str
    phone_raw: str
    start: float
    duration: float


@dataclass
class Utterance:
    """Class-mapped phone sequence of one utterance, sorted by start time."""

    id: str
    speaker_id: str
    class_ids: np.ndarray  # (n,) int32
    starts: np.ndarray     # (n,) float64
    durations: np.ndarray  # (n,) float64

    def __len__(self) -> int:
        return len(self.class_ids)


@dataclass
class Corpus:
    utterances: list[Utterance]            # sorted by utterance id
    speakers: dict[str, list[str]]         # speaker id -> sorted utterance ids
    inventory: PhonemeInventory
    n_dropped_utterances: int = 0

    @property
    def n_classes(self) -> int:
        return self.inventory.size

    @property
    def speaker_ids(self) -> list[str]:
        return sorted(self.speakers)

    @cached_property
    def _by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances}

    def utterance(self, utt_id: str) -> Utterance:
        try:
            return self._by_id[utt_id]
        except KeyError:
            raise PhondurError(f"utterance {utt_id!r} not in corpus") from None

    def group(self, utt_ids) -> list[Utterance]:
        return [self.utterance(u) for u in utt_ids]

    @property
    def n_segments(self) -> int:
        return sum(len(u) for u in self.utterances)


def assemble(utterances: list[Utterance], inventory: PhonemeInventory, n_dropped: int = 0) -> Corpus:
    """Canonicalize utterances into a corpus: sort, restrict the inventory to
    observed classes, remap class ids, build the speaker map."""
    utterances = sorted(utterances, key=lambda u: u.id)
    seen = set()
    for u in utterances:
        if u.id in seen:
            raise PhondurError(f"duplicate utterance id {u.id!r}")
        seen.add(u.id)
    observed = sorted(set(int(c) for u in utterances for c in np.unique(u.class_ids)))
    restricted = inventory.restrict(observed)
    remap = np.full(inventory.size, -1, dtype=np.int32)
    remap[observed] = np.arange(len(observed), dtype=np.int32)
    speakers: dict[str, list[str]] = {}
    for u in utterances:
        u.class_ids = remap[u.class_ids]
        speakers.setdefault(u.speaker_id, []).append(u.id)
    for ids in speakers.values():
        ids.sort()
    return Corpus(utterances, speakers, restricted, n_dropped)


def _inventory_to_meta(inv: PhonemeInventory) -> dict:
    return {
        "mode": inv.mode,
        "classes": [[c.base_label, c.stress, c.word_position] for c in inv.classes],
        "excluded": sorted(inv.excluded_labels),
    }


def _inventory_from_meta(meta: dict) -> PhonemeInventory:
    classes = tuple(
        PhonemeClass(i, base, stress, pos)
        for i, (base, stress, pos) in enumerate(meta["classes"])
    )
    return PhonemeInventory(meta["mode"], classes, frozenset(meta["excluded"]))


def save_cache(corpus: Corpus, path: str | Path, extra_meta: dict | None = None) -> None:
    """Write a corpus to a single-file binary cache (npz, version-stamped)."""
    meta = {
        "cache_version": CACHE_VERSION,
        "inventory": _inventory_to_meta(corpus.inventory),
        "n_dropped_utterances": corpus.n_dropped_utterances,
    }
    if extra_meta:
        meta.update(extra_meta)
    utts = corpus.utterances
    seg_counts = np.array([len(u) for u in utts], dtype=np.int64)
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.array(json.dumps(meta, sort_keys=True)),
        utt_ids=np.array([u.id for u in utts]),
        utt_speakers=np.array([u.speaker_id for u in utts]),
        seg_counts=seg_counts,
        seg_class=np.concatenate([u.class_ids for u in utts]) if utts else np.zeros(0, np.int32),
        seg_start=np.concatenate([u.starts for u in utts]) if utts else np.zeros(0),
        seg_dur=np.concatenate([u.durations for u in utts]) if utts else np.zeros(0),
    )
    Path(path).write_bytes(buf.getvalue())


def load_cache(path: str | Path) -> Corpus:
    """Load a corpus cache, refusing caches written under another version."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        version = meta.get("cache_version")
        if version != CACHE_VERSION:
            raise CacheVersionError(
                f"{path}: cache version {version} != {CACHE_VERSION}; re-run ingest"
            )
        inv = _inventory_from_meta(meta["inventory"])
        utt_ids = [str(x) for x in data["utt_ids"]]
        utt_speakers = [str(x) for x in data["utt_speakers"]]
        bounds = np.cumsum(data["seg_counts"])[:-1]
        classes = np.split(data["seg_class"], bounds)
        starts = np.split(data["seg_start"], bounds)
        durs = np.split(data["seg_dur"], bounds)
    utterances = [
        Utterance(uid, spk, c.astype(np.int32), s.astype(float), d.astype(float))
        for uid, spk, c, s, d in zip(utt_ids, utt_speakers, classes, starts, durs)
    ]
    speakers: dict[str, list[str]] = {}
    for u in utterances:
        speakers.setdefault(u.speaker_id, []).append(u.id)
    for ids in speakers.values():
        ids.sort()
    return Corpus(utterances, speakers, inv, meta.get("n_dropped_utterances", 0))
