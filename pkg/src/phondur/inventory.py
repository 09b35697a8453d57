"""Phoneme class inventories and raw-label mapping.

Two inventory modes are supported:

* ``base``     -- ARPAbet phonemes with stress digits and Kaldi word-position
                  suffixes stripped (at most 39 classes).
* ``extended`` -- classes keyed by (phoneme, stress, word position), the full
                  generated set has 336 entries: 15 vowels x 4 stress variants
                  (none/0/1/2) x 4 positions plus 24 consonants x 4 positions.

Unknown labels raise instead of being dropped; only labels listed in
``excluded_labels`` (silence and noise markers by default) map to nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

from .errors import ParseError, UnknownLabelError

# CMU pronouncing dictionary symbol set, stress not counted.
ARPABET_PHONEMES = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH",
    "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH",
    "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)

ARPABET_VOWELS = frozenset({
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY",
    "IH", "IY", "OW", "OY", "UH", "UW",
})

# Kaldi-style silence/noise phones; excluded from duration statistics by default.
DEFAULT_EXCLUDED = frozenset({"SIL", "SPN", "NSN"})

WORD_POSITIONS = ("B", "I", "E", "S")  # begin, internal, end, singleton


@dataclass(frozen=True)
class PhonemeClass:
    """One phoneme class: index, ARPAbet symbol, optional stress and position."""

    id: int
    base_label: str
    stress: Optional[int] = None
    word_position: Optional[str] = None

    @property
    def label(self) -> str:
        """Canonical rendering, e.g. ``AH``, ``AH0_B``, ``K_E``."""
        out = self.base_label
        if self.stress is not None:
            out += str(self.stress)
        if self.word_position is not None:
            out += "_" + self.word_position
        return out


def split_label(raw: str) -> tuple[str, Optional[int], Optional[str]]:
    """Split a Kaldi-convention phone label into (base, stress, position).

    ``AH0_B`` -> ("AH", 0, "B"); ``K_E`` -> ("K", None, "E"); ``SIL`` -> ("SIL", None, None).
    """
    base = raw
    position = None
    if len(base) > 2 and base[-2] == "_" and base[-1] in WORD_POSITIONS:
        position = base[-1]
        base = base[:-2]
    stress = None
    if len(base) > 1 and base[-1] in "012":
        stress = int(base[-1])
        base = base[:-1]
    return base, stress, position


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered phoneme classes plus the raw-label resolution rules."""

    mode: str  # "base" | "extended"
    classes: tuple[PhonemeClass, ...]
    excluded_labels: frozenset[str] = DEFAULT_EXCLUDED

    def __post_init__(self):
        if self.mode not in ("base", "extended"):
            raise ValueError(f"unknown inventory mode {self.mode!r}")
        ids = [c.id for c in self.classes]
        if ids != list(range(len(ids))):
            raise ValueError("class ids must be consecutive from 0")

    @property
    def size(self) -> int:
        return len(self.classes)

    @cached_property
    def _lookup(self) -> dict:
        if self.mode == "base":
            return {c.base_label: c.id for c in self.classes}
        return {(c.base_label, c.stress, c.word_position): c.id for c in self.classes}

    def map_label(self, raw: str) -> Optional[int]:
        """Resolve a raw phone label to a class id, or None if excluded.

        Exclusion matches the raw label or its stripped base form, so
        ``SPN_S`` is excluded whenever ``SPN`` is. Unmapped, non-excluded
        labels raise UnknownLabelError.
        """
        base, stress, position = split_label(raw)
        if raw in self.excluded_labels or base in self.excluded_labels:
            return None
        if self.mode == "base":
            class_id = self._lookup.get(base)
        else:
            class_id = self._lookup.get((base, stress, position))
        if class_id is None:
            raise UnknownLabelError(
                f"label {raw!r} is not in the {self.mode} inventory and is not excluded"
            )
        return class_id

    def class_label(self, class_id: int) -> str:
        return self.classes[class_id].label

    def labels(self) -> list[str]:
        return [c.label for c in self.classes]

    def restrict(self, observed_ids: Iterable[int]) -> "PhonemeInventory":
        """Drop classes not in ``observed_ids`` and reindex, preserving order.

        The class count of downstream duration vectors is data-driven: it is
        the number of classes actually observed in a corpus, not the size of
        the stock inventory.
        """
        keep = set(observed_ids)
        kept = [c for c in self.classes if c.id in keep]
        classes = tuple(
            PhonemeClass(i, c.base_label, c.stress, c.word_position)
            for i, c in enumerate(kept)
        )
        return PhonemeInventory(self.mode, classes, self.excluded_labels)


def base_inventory(excluded: Iterable[str] = DEFAULT_EXCLUDED) -> PhonemeInventory:
    """The 39-phoneme ARPAbet inventory, silence/noise labels excluded."""
    classes = tuple(PhonemeClass(i, p) for i, p in enumerate(ARPABET_PHONEMES))
    return PhonemeInventory("base", classes, frozenset(excluded))


def extended_inventory(excluded: Iterable[str] = DEFAULT_EXCLUDED) -> PhonemeInventory:
    """The 336-class inventory: position-dependent phones, stress on vowels.

    Vowels contribute a stressless variant alongside stresses 0-2 because
    position-dependent Kaldi phone sets list both forms.
    """
    classes = []
    for base in ARPABET_PHONEMES:
        stresses = (None, 0, 1, 2) if base in ARPABET_VOWELS else (None,)
        for stress in stresses:
            for position in WORD_POSITIONS:
                classes.append(PhonemeClass(len(classes), base, stress, position))
    return PhonemeInventory("extended", tuple(classes), frozenset(excluded))


def load_inventory(lines: Iterable[str], mode: str, source: str = "<inventory>") -> PhonemeInventory:
    """Parse an inventory file: one class per line, plus ``!exclude`` directives.

    Class lines are ``<base> [stress] [position]`` with stress in 0-2 and
    position one of B/I/E/S; token order after the base symbol is free.
    """
    classes: list[PhonemeClass] = []
    excluded: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "!exclude":
            if len(tokens) != 2:
                raise ParseError("!exclude takes exactly one label", source, lineno)
            excluded.add(tokens[1])
            continue
        base, tail = tokens[0], tokens[1:]
        stress = position = None
        for tok in tail:
            if tok in ("0", "1", "2") and stress is None:
                stress = int(tok)
            elif tok in WORD_POSITIONS and position is None:
                position = tok
            else:
                raise ParseError(f"unrecognized token {tok!r}", source, lineno)
        if mode == "base" and (stress is not None or position is not None):
            raise ParseError("base-mode classes take no stress/position", source, lineno)
        classes.append(PhonemeClass(len(classes), base, stress, position))
    if not classes:
        raise ParseError("inventory defines no classes", source)
    return PhonemeInventory(mode, tuple(classes), frozenset(excluded or DEFAULT_EXCLUDED))


def dump_inventory(inv: PhonemeInventory) -> str:
    """Serialize an inventory to the file format accepted by load_inventory."""
    out = []
    for c in inv.classes:
        parts = [c.base_label]
        if c.stress is not None:
            parts.append(str(c.stress))
        if c.word_position is not None:
            parts.append(c.word_position)
        out.append(" ".join(parts))
    for label in sorted(inv.excluded_labels):
        out.append(f"!exclude {label}")
    return "\n".join(out) + "\n"
