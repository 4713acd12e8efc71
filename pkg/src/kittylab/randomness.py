"""Entropy sources for breeding: the target block hash, or a joint commit-reveal sum."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Iterable, Optional

MOD = 1 << 256


class ProtocolIncomplete(RuntimeError):
    pass


class CheaterIdentified(RuntimeError):
    def __init__(self, participant):
        super().__init__(f"reveal from participant {participant!r} does not match its commitment")
        self.participant = participant


def _preimage(value: int, nonce: int) -> bytes:
    return (value % MOD).to_bytes(32, "big") + nonce.to_bytes(16, "big")


@dataclass
class Commitment:
    participant: object
    digest: bytes
    value: Optional[int] = None
    nonce: Optional[int] = None

    @property
    def revealed(self) -> bool:
        return self.value is not None

    def reveal(self, value: int, nonce: int) -> Commitment:
        self.value, self.nonce = value, nonce
        return self

    def verify(self) -> bool:
        return self.revealed and hashlib.sha256(_preimage(self.value, self.nonce)).digest() == self.digest

    def to_json(self) -> dict:
        return {
            "participant": self.participant,
            "commit_hex": self.digest.hex(),
            "value_hex": None if self.value is None else format(self.value, "064x"),
            "nonce_hex": None if self.nonce is None else format(self.nonce, "032x"),
        }


def commit(value: int, nonce: int, participant=None) -> Commitment:
    if not 0 <= value < MOD or not 0 <= nonce < 1 << 128:
        raise ValueError("value must fit 256 bits and nonce 128 bits")
    return Commitment(participant, hashlib.sha256(_preimage(value, nonce)).digest())


def reveal_and_combine(commitments: Iterable[Commitment]) -> bytes:
    """SHA-256 of the sum of all revealed values mod 2**256, after checking every reveal."""
    total = 0
    for c in commitments:
        if not c.revealed:
            raise ProtocolIncomplete(f"participant {c.participant!r} has not revealed")
        if not c.verify():
            raise CheaterIdentified(c.participant)
        total = (total + c.value) % MOD
    return hashlib.sha256(total.to_bytes(32, "big")).digest()


def transcript_json(commitments: Iterable[Commitment]) -> str:
    return json.dumps([c.to_json() for c in commitments], indent=2)


def run_protocol(contributions: dict, rng: random.Random) -> tuple[bytes, list[Commitment]]:
    """Commit to each ``{participant: value}``, reveal, and combine. Nonces come from ``rng``."""
    commitments = []
    for who, value in contributions.items():
        nonce = rng.getrandbits(128)
        commitments.append(commit(value, nonce, participant=who).reveal(value, nonce))
    return reveal_and_combine(commitments), commitments


class BlockHashSource:
    """The attackable source: the digest of the pregnancy's target block."""

    kind = "block_hash"

    def digest(self, chain, pregnancy) -> bytes:
        return chain.block_digest(pregnancy.target_block)

    def forecast(self, chain, target_block: int) -> bytes:
        # Block digests are a public function of the chain seed, so anyone who
        # bothers to compute them knows the target block's hash in advance.
        return chain.digest_formula(target_block)


class JointRandomSource:
    """Joint commit-reveal randomness; each participant draws its value from its own seeded RNG."""

    kind = "joint_random"

    def __init__(self, participants: Iterable, seed: int = 0):
        self.participants = list(participants)
        if not self.participants:
            raise ValueError("joint randomness needs at least one participant")
        self._rngs = {p: random.Random(f"{seed}:{p}") for p in self.participants}
        self._nonce_rng = random.Random(f"{seed}:nonces")
        self.transcripts: list[list[Commitment]] = []

    def digest(self, chain, pregnancy) -> bytes:
        values = {p: self._rngs[p].getrandbits(256) for p in self.participants}
        out, commitments = run_protocol(values, self._nonce_rng)
        self.transcripts.append(commitments)
        return out

    def forecast(self, chain, target_block: int) -> None:
        return None


def make_source(kind: str, participants: Iterable = (), seed: int = 0):
    if kind == "block_hash":
        return BlockHashSource()
    if kind in ("joint", "joint_random"):
        return JointRandomSource(participants, seed)
    raise ValueError(f"unknown entropy source {kind!r}")
