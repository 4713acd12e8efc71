"""Simulated chain: block clock, kitty registry, Eth ledger, breeding and births."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional, Sequence

from .genescience import as_digest, mix_genes
from .genome import GeneArray, decode_gene
from .randomness import BlockHashSource

DEFAULT_COOLDOWNS = (
    60, 120, 300, 600, 1800,
    3600, 2 * 3600, 4 * 3600, 8 * 3600, 16 * 3600,
    86400, 2 * 86400, 7 * 86400, 14 * 86400,
)
MAX_COOLDOWN_INDEX = len(DEFAULT_COOLDOWNS) - 1
BREEDING_FEE = Decimal("0.008")
COOLDOWN_ENV = "KITTYLAB_COOLDOWN_TABLE"


class ChainError(Exception):
    pass


class FutureBlock(ChainError):
    pass


class InsufficientFunds(ChainError):
    pass


class CoolingDown(ChainError):
    pass


class SelfBreeding(ChainError):
    pass


class EarlyBirth(ChainError):
    pass


def check_cooldown_table(table: Sequence[int]) -> tuple[int, ...]:
    table = tuple(int(t) for t in table)
    if len(table) != len(DEFAULT_COOLDOWNS):
        raise ValueError(f"cooldown table needs {len(DEFAULT_COOLDOWNS)} entries, got {len(table)}")
    if any(t <= 0 for t in table) or any(a >= b for a, b in zip(table, table[1:])):
        raise ValueError("cooldown table must be positive and strictly increasing")
    return table


def load_cooldown_table(path: str | Path) -> tuple[int, ...]:
    """Read a 14-entry table: a JSON list, or whitespace/comma separated seconds."""
    text = Path(path).read_text()
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = text.replace(",", " ").split()
    return check_cooldown_table(values)


def env_cooldown_table() -> Optional[tuple[int, ...]]:
    path = os.environ.get(COOLDOWN_ENV)
    return load_cooldown_table(path) if path else None


def cooldown_duration(index: int, table: Sequence[int] = DEFAULT_COOLDOWNS) -> int:
    if not 0 <= index < len(table):
        raise IndexError(f"cooldown index {index} outside [0, {len(table) - 1}]")
    return table[index]


def initial_cooldown_index(generation: int) -> int:
    return min(generation // 2, MAX_COOLDOWN_INDEX)


@dataclass
class Kitty:
    id: int
    gene: GeneArray
    generation: int
    cooldown_index: int
    cooldown_end_block: int
    owner: object
    matron_id: Optional[int] = None
    sire_id: Optional[int] = None
    birth_block: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["gene"] = self.gene.hex
        return d


@dataclass
class Pregnancy:
    matron_id: int
    sire_id: int
    target_block: int
    breed_block: int
    payer: object = None
    digest: Optional[bytes] = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = asdict(self)
        d["digest"] = None if self.digest is None else self.digest.hex()
        return d


class SimChain:
    def __init__(
        self,
        chain_seed=bytes(32),
        seconds_per_block: int = 15,
        cooldown_table: Sequence[int] = DEFAULT_COOLDOWNS,
        entropy=None,
        sire_cooldown: bool = False,
        breeding_fee: Decimal = BREEDING_FEE,
    ):
        if seconds_per_block <= 0:
            raise ValueError("seconds_per_block must be positive")
        self.chain_seed = as_digest(chain_seed)
        self.seconds_per_block = int(seconds_per_block)
        self.cooldown_table = check_cooldown_table(cooldown_table)
        self.entropy = BlockHashSource() if entropy is None else entropy
        self.sire_cooldown = sire_cooldown
        self.breeding_fee = Decimal(breeding_fee)
        self.height = 0
        self.kitties: dict[int, Kitty] = {}
        self.pregnancies: list[Pregnancy] = []
        self.balances: dict[object, Decimal] = {}
        self.fees_collected = Decimal(0)

    # -- clock and digests

    def advance(self, blocks: int = 1) -> int:
        if blocks < 0:
            raise ValueError("the chain never runs backwards")
        self.height += blocks
        return self.height

    def advance_to(self, block: int) -> int:
        return self.advance(max(0, block - self.height))

    def digest_formula(self, n: int) -> bytes:
        return hashlib.sha256(self.chain_seed + int(n).to_bytes(8, "big")).digest()

    def block_digest(self, n: int) -> bytes:
        if n > self.height:
            raise FutureBlock(f"block {n} is not mined yet (height {self.height})")
        if n < 0:
            raise ValueError("negative block number")
        return self.digest_formula(n)

    def cooldown_duration(self, index: int) -> int:
        return cooldown_duration(index, self.cooldown_table)

    def cooldown_blocks(self, index: int) -> int:
        return -(-self.cooldown_duration(index) // self.seconds_per_block)

    # -- ledger

    def deposit(self, who, amount) -> None:
        self.balances[who] = self.balances.get(who, Decimal(0)) + Decimal(amount)

    def balance(self, who) -> Decimal:
        return self.balances.get(who, Decimal(0))

    def transfer(self, src, dst, amount) -> None:
        amount = Decimal(amount)
        if amount < 0:
            raise ValueError("negative transfer")
        if self.balance(src) < amount:
            raise InsufficientFunds(f"{src!r} holds {self.balance(src)} Eth, needs {amount}")
        self.balances[src] -= amount
        self.deposit(dst, amount)

    # -- kitties

    def _next_id(self) -> int:
        return len(self.kitties) + 1

    def create_gen0(self, gene: GeneArray, owner) -> Kitty:
        k = Kitty(self._next_id(), gene, 0, initial_cooldown_index(0), self.height, owner, birth_block=self.height)
        self.kitties[k.id] = k
        return k

    def kitty(self, kitty_id: int) -> Kitty:
        return self.kitties[kitty_id]

    def owned_by(self, owner) -> list[Kitty]:
        return [k for k in self.kitties.values() if k.owner == owner]

    def is_pregnant(self, kitty_id: int) -> bool:
        return any(p.matron_id == kitty_id for p in self.pregnancies)

    def can_breed(self, matron_id: int) -> bool:
        m = self.kitties[matron_id]
        return m.cooldown_end_block <= self.height and not self.is_pregnant(matron_id)

    def target_block_for(self, matron_id: int) -> int:
        return self.height + self.cooldown_blocks(self.kitties[matron_id].cooldown_index)

    def breed(self, matron_id: int, sire_id: int, payer=None) -> Pregnancy:
        if matron_id == sire_id:
            raise SelfBreeding("a kitty cannot breed with itself")
        matron, sire = self.kitties[matron_id], self.kitties[sire_id]
        payer = matron.owner if payer is None else payer
        if not self.can_breed(matron_id):
            raise CoolingDown(f"matron {matron_id} is cooling down until block {matron.cooldown_end_block}")
        if self.balance(payer) < self.breeding_fee:
            raise InsufficientFunds(f"{payer!r} cannot pay the {self.breeding_fee} Eth breeding fee")
        self.balances[payer] -= self.breeding_fee
        self.fees_collected += self.breeding_fee
        target = self.target_block_for(matron_id)
        matron.cooldown_end_block = target
        matron.cooldown_index = min(matron.cooldown_index + 1, MAX_COOLDOWN_INDEX)
        if self.sire_cooldown:
            sire.cooldown_end_block = self.height + self.cooldown_blocks(sire.cooldown_index)
            sire.cooldown_index = min(sire.cooldown_index + 1, MAX_COOLDOWN_INDEX)
        p = Pregnancy(matron_id, sire_id, target, self.height, payer)
        self.pregnancies.append(p)
        return p

    def due(self) -> list[Pregnancy]:
        return [p for p in self.pregnancies if p.target_block <= self.height]

    def give_birth(self, p: Pregnancy, owner=None) -> Kitty:
        if self.height < p.target_block:
            raise EarlyBirth(f"target block {p.target_block} not reached (height {self.height})")
        matron, sire = self.kitties[p.matron_id], self.kitties[p.sire_id]
        p.digest = self.entropy.digest(self, p)
        gene = mix_genes(matron.gene, sire.gene, p.digest)
        generation = max(matron.generation, sire.generation) + 1
        child = Kitty(
            self._next_id(), gene, generation, initial_cooldown_index(generation), self.height,
            matron.owner if owner is None else owner, p.matron_id, p.sire_id, self.height,
        )
        self.kitties[child.id] = child
        self.pregnancies.remove(p)
        return child

    # -- export

    def snapshot(self) -> dict:
        return {
            "height": self.height,
            "kitties": [k.to_json() for k in self.kitties.values()],
            "pregnancies": [p.to_json() for p in self.pregnancies],
            "balances": {str(k): str(v) for k, v in self.balances.items()},
            "fees_collected": str(self.fees_collected),
        }

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), indent=2)

    @staticmethod
    def kitty_from_json(d: dict) -> Kitty:
        d = dict(d)
        d["gene"] = decode_gene(d["gene"])
        return Kitty(**d)
