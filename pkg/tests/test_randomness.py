import hashlib
import random

import pytest

from kittylab.chain import SimChain
from kittylab.genome import GeneArray
from kittylab.randomness import (
    CheaterIdentified,
    JointRandomSource,
    ProtocolIncomplete,
    commit,
    make_source,
    reveal_and_combine,
    run_protocol,
    transcript_json,
)


def test_commit_digest():
    assert commit(0, 0).digest.hex() == "17b0761f87b081d5cf10757ccc89f12be355c70e2e29df288b65b30710dcbcd1"
    assert commit(5, 1).digest == commit(5, 1).digest != commit(5, 2).digest


def test_single_value_combines_to_its_hash():
    v = 123456789
    assert reveal_and_combine([commit(v, 9).reveal(v, 9)]) == hashlib.sha256(v.to_bytes(32, "big")).digest()


def test_sum_wraps_modulo_2_256():
    a, b = (1 << 256) - 1, 1
    out = reveal_and_combine([commit(a, 1, "a").reveal(a, 1), commit(b, 2, "b").reveal(b, 2)])
    assert out.hex() == "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925"


def test_tampered_reveal_names_the_cheater():
    cs = [commit(1, 1, "a").reveal(1, 1), commit(2, 2, "b").reveal(3, 2), commit(4, 4, "c").reveal(4, 4)]
    with pytest.raises(CheaterIdentified) as e:
        reveal_and_combine(cs)
    assert e.value.participant == "b"


def test_missing_reveal_aborts():
    with pytest.raises(ProtocolIncomplete):
        reveal_and_combine([commit(1, 1, "a").reveal(1, 1), commit(2, 2, "b")])


def test_commit_ranges():
    with pytest.raises(ValueError):
        commit(1 << 256, 0)
    with pytest.raises(ValueError):
        commit(0, 1 << 128)


def test_transcript_format():
    _, cs = run_protocol({"a": 1, "b": 2}, random.Random(0))
    text = transcript_json(cs)
    assert '"commit_hex"' in text and '"value_hex"' in text and '"nonce_hex"' in text


def test_joint_source_drives_births_and_cannot_be_forecast():
    src = JointRandomSource(["a", "b"], seed=3)
    c = SimChain(entropy=src)
    c.deposit("a", 1)
    m = c.create_gen0(GeneArray.filled(6), "a")
    s = c.create_gen0(GeneArray.filled(7), "a")
    p = c.breed(m.id, s.id)
    assert src.forecast(c, p.target_block) is None
    c.advance_to(p.target_block)
    c.give_birth(p)
    assert p.digest != c.block_digest(p.target_block)
    assert len(src.transcripts) == 1 and all(x.verify() for x in src.transcripts[0])


def test_block_hash_forecast_is_the_future_digest():
    src = make_source("block_hash")
    c = SimChain(entropy=src)
    target = 50
    forecast = src.forecast(c, target)
    c.advance_to(target)
    assert forecast == c.block_digest(target)


def test_unknown_source():
    with pytest.raises(ValueError):
        make_source("coin")
