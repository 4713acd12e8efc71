import json

import pytest
from hypothesis import given, strategies as st

from kittylab.genome import (
    Cattribute,
    CattributeRegistry,
    GeneArray,
    GeneFormatError,
    cattributes,
    decode_gene,
    default_registry,
    encode_gene,
)

ZERO_HEX = "0" * 60
genes = st.lists(st.integers(0, 31), min_size=48, max_size=48).map(lambda c: GeneArray(tuple(c)))


def test_zero_hex_decodes_to_zero_cells():
    assert decode_gene(ZERO_HEX).cells == (0,) * 48


def test_low_bits_fill_cell_zero_first():
    g = decode_gene(format(0x2F, "060x"))
    assert g[0] == 15 and g[1] == 1
    assert all(c == 0 for c in g.cells[2:])


def test_encode_examples():
    assert encode_gene(GeneArray.zeros()) == ZERO_HEX
    assert encode_gene(GeneArray.zeros().replace(c0=15)).endswith("00f")
    top = encode_gene(GeneArray.zeros().replace(c47=31))
    assert top == "f8" + "0" * 58


@pytest.mark.parametrize("bad", ["0" * 59, "0" * 61, "g" + "0" * 59, "", "0x" + "0" * 58])
def test_malformed_hex_is_rejected(bad):
    with pytest.raises(GeneFormatError):
        decode_gene(bad)


def test_gene_array_invariants():
    with pytest.raises(GeneFormatError):
        GeneArray((0,) * 47)
    with pytest.raises(GeneFormatError):
        GeneArray((32,) + (0,) * 47)


@given(genes)
def test_encode_decode_round_trip(g):
    text = encode_gene(g)
    assert len(text) == 60 and text == text.lower()
    assert decode_gene(text) == g
    assert encode_gene(decode_gene(text)) == text


@given(st.integers(0, (1 << 240) - 1))
def test_cells_are_five_bit_slices(value):
    g = GeneArray.from_int(value)
    assert all(g[i] == (value >> (5 * i)) & 31 for i in range(48))
    assert g.to_int() == value


def test_named_cattributes():
    reg = default_registry()
    driver = GeneArray.zeros().replace(c0=15, c36=23)
    dominator = GeneArray.zeros().replace(c0=28, c28=23)
    assert "driver" in cattributes(driver, reg)
    assert "dominator" in cattributes(dominator, reg)
    assert cattributes(GeneArray.zeros(), reg) == set()


def test_registry_rejects_duplicates_and_bad_entries():
    reg = CattributeRegistry([Cattribute("a", frozenset({(0, 1)}))])
    with pytest.raises(ValueError):
        reg.add(Cattribute("a", frozenset({(1, 1)})))
    with pytest.raises(ValueError):
        Cattribute("empty", frozenset())
    with pytest.raises(ValueError):
        Cattribute("clash", frozenset({(0, 1), (0, 2)}))
    with pytest.raises(ValueError):
        Cattribute("range", frozenset({(48, 1)}))


def test_registry_file_round_trip(tmp_path):
    reg = default_registry()
    path = tmp_path / "reg.json"
    reg.save(path)
    data = json.loads(path.read_text())
    assert all(set(e) == {"name", "constraints"} for e in data)
    assert CattributeRegistry.load(path).names == reg.names


@given(genes, st.sampled_from(default_registry().names))
def test_removing_an_entry_never_adds_a_name(g, name):
    reg = default_registry()
    assert cattributes(g, reg.without(name)) <= cattributes(g, reg)
