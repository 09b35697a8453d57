"""Parsers for alignment inputs and assembly of the in-memory corpus.

Supported inputs:

* CTM: ``<utt-id> <channel> <start> <duration> <phone>`` per line, ``;;``
  comments ignored. Times are seconds.
* Praat TextGrid (long and short text forms), one file per utterance, phones
  read from a named interval tier.
* utt2spk: ``<utt-id> <spk-id>`` per line.

Parsing fails fast: malformed lines, non-positive durations and unknown phone
labels are errors, never silently dropped.
"""

from __future__ import annotations

import re
from typing import Iterable, TextIO

import numpy as np

from .corpus import Corpus, Segment, Utterance, assemble
from .errors import ParseError, PhondurError
from .inventory import PhonemeInventory

# Alignment files round times (CTM writes 6 decimals), so consecutive phones
# can appear to overlap by a few microseconds; real overlaps are >= 1 ms.
OVERLAP_TOLERANCE = 1e-5


def parse_ctm(stream: Iterable[str], source: str = "<ctm>") -> list[Segment]:
    """Read one Segment per non-comment CTM line."""
    segments = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith(";;"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", source, lineno)
        utt_id, _channel, start_s, dur_s, label = fields
        try:
            start = float(start_s)
            duration = float(dur_s)
        except ValueError:
            raise ParseError(f"bad time field in {line!r}", source, lineno) from None
        if start < 0:
            raise ParseError(f"negative start time {start}", source, lineno)
        if duration <= 0:
            raise ParseError(f"non-positive duration {duration}", source, lineno)
        segments.append(Segment(utt_id, label, start, duration))
    return segments


def write_ctm(segments: Iterable[Segment], out: TextIO, channel: str = "1") -> None:
    """Write segments in CTM format; times carry 6 decimals (1e-6 s round trip)."""
    for seg in segments:
        out.write(f"{seg.utterance_id} {channel} {seg.start:.6f} {seg.duration:.6f} {seg.phone_raw}\n")


def parse_utt2spk(stream: Iterable[str], source: str = "<utt2spk>") -> dict[str, str]:
    """Read the utterance-to-speaker map; conflicting duplicates are errors."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", source, lineno)
        utt_id, spk_id = fields
        if utt_id in mapping and mapping[utt_id] != spk_id:
            raise ParseError(
                f"utterance {utt_id!r} mapped to both {mapping[utt_id]!r} and {spk_id!r}",
                source, lineno,
            )
        mapping[utt_id] = spk_id
    return mapping


def write_utt2spk(mapping: dict[str, str], out: TextIO) -> None:
    for utt_id in sorted(mapping):
        out.write(f"{utt_id} {mapping[utt_id]}\n")


# `item []:` containers, `item [1]:` tier headers, `intervals [1]:` blocks.
_ITEM_HEADER_RE = re.compile(r"^\s*item\s*\[\d*\]\s*:?\s*$")
_BLOCK_HEADER_RE = re.compile(r"^\s*(intervals|points)\s*\[\d+\]\s*:?\s*$")


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value.startswith('"') and value.endswith('"'):
        value = value[1:-1]
    return value.replace('""', '"')


class _Cursor:
    """Sequential reader over non-blank TextGrid lines, long or short form."""

    def __init__(self, lines: list[str], source: str):
        self.lines = lines
        self.source = source
        self.pos = 0

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line
        raise ParseError("unexpected end of TextGrid", self.source, self.pos)

    def skip_headers(self, pattern: re.Pattern) -> None:
        while True:
            save = self.pos
            try:
                line = self.next_line()
            except ParseError:
                return
            if not pattern.match(line):
                self.pos = save
                return

    def next_value(self) -> str:
        """Right side of a ``key = value`` line, or the bare line (short form)."""
        line = self.next_line().strip()
        if not line.startswith('"') and "=" in line:
            return line.split("=", 1)[1].strip()
        return line

    def next_number(self) -> float:
        value = self.next_value()
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"expected a number, got {value!r}", self.source, self.pos) from None

    def next_text(self) -> str:
        return _unquote(self.next_value())


def parse_textgrid(
    stream: Iterable[str],
    tier_name: str,
    utterance_id: str,
    source: str = "<textgrid>",
) -> list[Segment]:
    """Read non-empty intervals of one tier; duration is xmax - xmin.

    Handles both the long (``xmin = 0``) and short (bare values) text forms.
    TextGrids carry no utterance id, so the caller supplies one (by
    convention the file stem).
    """
    lines = list(stream)
    if not any("TextGrid" in line for line in lines[:4]):
        raise ParseError("not a TextGrid file", source)
    cursor = _Cursor(lines, source)
    cursor.next_line()  # File type
    cursor.next_line()  # Object class
    cursor.next_number()  # file xmin
    cursor.next_number()  # file xmax
    cursor.next_line()  # tiers? <exists>
    n_tiers = int(cursor.next_number())

    segments: list[Segment] = []
    seen_tiers: list[str] = []
    for _ in range(n_tiers):
        cursor.skip_headers(_ITEM_HEADER_RE)
        tier_class = cursor.next_text()
        name = cursor.next_text()
        cursor.next_number()  # tier xmin
        cursor.next_number()  # tier xmax
        size = int(cursor.next_number())
        seen_tiers.append(name)
        is_target = tier_class == "IntervalTier" and name == tier_name
        for index in range(1, size + 1):
            cursor.skip_headers(_BLOCK_HEADER_RE)
            if tier_class == "IntervalTier":
                xmin = cursor.next_number()
                xmax = cursor.next_number()
                text = cursor.next_text()
                if is_target:
                    if xmax <= xmin:
                        raise ParseError(
                            f"interval {index} of tier {name!r} has xmax <= xmin", source
                        )
                    if text:
                        segments.append(Segment(utterance_id, text, xmin, xmax - xmin))
            else:  # point tier: <time, mark> pairs, never a phone tier
                cursor.next_number()
                cursor.next_text()
    if tier_name not in seen_tiers:
        raise ParseError(
            f"no interval tier named {tier_name!r}; available tiers: {', '.join(seen_tiers)}",
            source,
        )
    return segments


def build_corpus(
    segments: Iterable[Segment],
    utt2spk: dict[str, str],
    inventory: PhonemeInventory,
) -> Corpus:
    """Group segments into utterances, map labels, drop excluded phones.

    Utterances whose phones are all excluded are dropped and counted in
    ``Corpus.n_dropped_utterances``. The corpus inventory is restricted to the
    classes actually observed, so vector dimensionality is data-driven. The
    result is canonical (sorted) regardless of input segment order.
    """
    by_utt: dict[str, list[Segment]] = {}
    for seg in segments:
        by_utt.setdefault(seg.utterance_id, []).append(seg)

    missing = sorted(u for u in by_utt if u not in utt2spk)
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise PhondurError(f"{len(missing)} utterance(s) missing from utt2spk: {shown}")

    utterances: list[Utterance] = []
    n_dropped = 0
    for utt_id in sorted(by_utt):
        segs = sorted(by_utt[utt_id], key=lambda s: s.start)
        class_ids, starts, durations = [], [], []
        for seg in segs:
            if seg.duration <= 0:
                raise PhondurError(f"utterance {utt_id!r}: non-positive duration {seg.duration}")
            class_id = inventory.map_label(seg.phone_raw)
            if class_id is None:
                continue
            class_ids.append(class_id)
            starts.append(seg.start)
            durations.append(seg.duration)
        if not class_ids:
            n_dropped += 1
            continue
        starts_a = np.asarray(starts, dtype=float)
        durs_a = np.asarray(durations, dtype=float)
        if np.any(starts_a[1:] < starts_a[:-1] + durs_a[:-1] - OVERLAP_TOLERANCE):
            raise PhondurError(f"utterance {utt_id!r}: overlapping segments")
        utterances.append(
            Utterance(utt_id, utt2spk[utt_id], np.asarray(class_ids, dtype=np.int32), starts_a, durs_a)
        )

    return assemble(utterances, inventory, n_dropped)


def corpus_to_segments(corpus: Corpus) -> list[Segment]:
    """Render a corpus back to raw segments with canonical class labels."""
    out = []
    for utt in corpus.utterances:
        for class_id, start, dur in zip(utt.class_ids, utt.starts, utt.durations):
            out.append(Segment(utt.id, corpus.inventory.class_label(int(class_id)), float(start), float(dur)))
    return out


def corpus_utt2spk(corpus: Corpus) -> dict[str, str]:
    return {u.id: u.speaker_id for u in corpus.utterances}
