import io

import pytest

from phondur.errors import ParseError, UnknownLabelError
from phondur.inventory import (
    ARPABET_PHONEMES,
    base_inventory,
    dump_inventory,
    extended_inventory,
    load_inventory,
    split_label,
)


def test_base_inventory_has_39_phonemes():
    inv = base_inventory()
    assert inv.size == 39
    assert inv.labels() == list(ARPABET_PHONEMES)


def test_extended_inventory_has_336_classes():
    inv = extended_inventory()
    assert inv.size == 336
    # 15 vowels x 4 stress variants x 4 positions + 24 consonants x 4 positions
    assert len({c.label for c in inv.classes}) == 336


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("AH0_B", ("AH", 0, "B")),
        ("K_E", ("K", None, "E")),
        ("SIL", ("SIL", None, None)),
        ("AH1", ("AH", 1, None)),
        ("ZH_S", ("ZH", None, "S")),
    ],
)
def test_split_label(raw, expected):
    assert split_label(raw) == expected


def test_base_mode_strips_stress_and_position():
    inv = base_inventory()
    assert inv.map_label("AH0_B") == inv.map_label("AH")
    assert inv.class_label(inv.map_label("AH0_B")) == "AH"
    assert inv.class_label(inv.map_label("K_E")) == "K"


def test_extended_mode_keeps_stress_and_position():
    inv = extended_inventory()
    class_id = inv.map_label("AH0_B")
    cls = inv.classes[class_id]
    assert (cls.base_label, cls.stress, cls.word_position) == ("AH", 0, "B")
    # distinct from other stress/position variants
    assert inv.map_label("AH1_B") != class_id
    assert inv.map_label("AH0_E") != class_id


def test_excluded_labels_map_to_none():
    inv = base_inventory()
    assert inv.map_label("SIL") is None
    assert inv.map_label("SPN") is None
    assert inv.map_label("SPN_S") is None  # exclusion also matches the stripped base


def test_unknown_label_raises():
    inv = base_inventory()
    with pytest.raises(UnknownLabelError, match="QQ"):
        inv.map_label("QQ")


def test_extended_mode_requires_position_markers():
    inv = extended_inventory()
    with pytest.raises(UnknownLabelError):
        inv.map_label("AH0")  # no _B/_I/_E/_S suffix


def test_restrict_reindexes_in_order():
    inv = base_inventory()
    sub = inv.restrict([3, 17, 20])
    assert sub.size == 3
    assert [c.id for c in sub.classes] == [0, 1, 2]
    assert sub.labels() == [ARPABET_PHONEMES[3], ARPABET_PHONEMES[17], ARPABET_PHONEMES[20]]


def test_inventory_file_round_trip():
    inv = extended_inventory()
    text = dump_inventory(inv)
    again = load_inventory(io.StringIO(text), "extended")
    assert again.size == inv.size
    assert again.labels() == inv.labels()
    assert again.excluded_labels == inv.excluded_labels


def test_inventory_file_exclude_directive():
    inv = load_inventory(io.StringIO("AH\nK\n!exclude SIL\n!exclude NSE\n"), "base")
    assert inv.size == 2
    assert inv.map_label("NSE") is None
    assert inv.map_label("AH2") == 0


def test_inventory_file_rejects_garbage():
    with pytest.raises(ParseError):
        load_inventory(io.StringIO("AH bogus\n"), "base")
    with pytest.raises(ParseError):
        load_inventory(io.StringIO("AH 1\n"), "base")  # stress not allowed in base mode
    with pytest.raises(ParseError):
        load_inventory(io.StringIO("# only comments\n"), "base")
