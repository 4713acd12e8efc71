"""Economy model: Family Jewels, pricing rules, agent strategies and fairness evaluation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .auction import AuctionHouse
from .chain import BREEDING_FEE, DEFAULT_COOLDOWNS, Kitty, SimChain, check_cooldown_table
from .genescience import mix_genes
from .genome import GROUP_SIZE, N_CELLS, CattributeRegistry, GeneArray, default_registry
from .prediction import cattribute_probability
from .randomness import make_source


@dataclass(frozen=True)
class JewelTier:
    tier: str
    min_price: Decimal


DIAMOND = JewelTier("Diamond", Decimal("5"))
GILDED = JewelTier("Gilded", Decimal("0.5"))
AMETHYST = JewelTier("Amethyst", Decimal("0.07"))
LAPIS = JewelTier("Lapis", Decimal("0.009"))
TIERS = (DIAMOND, GILDED, AMETHYST, LAPIS)
FLOOR_PRICE = Decimal("0.004")


def assign_jewel(rank: int) -> JewelTier:
    """Tier for the ``rank``-th kitty (1-based) to carry a Cattribute."""
    if rank < 1:
        raise ValueError("ranks start at 1")
    if rank == 1:
        return DIAMOND
    if rank <= 10:
        return GILDED
    if rank <= 100:
        return AMETHYST
    return LAPIS


def kitty_price(jewels: Union[JewelTier, Iterable[JewelTier], None] = None, producible_value=0) -> Decimal:
    """max(best jewel minimum, half of what the kitty can produce, market floor)."""
    if isinstance(jewels, JewelTier):
        jewels = [jewels]
    producible_value = Decimal(producible_value)
    if producible_value < 0:
        raise ValueError("producible value must be non-negative")
    best = max((j.min_price for j in jewels or ()), default=Decimal(0))
    return max(best, producible_value / 2, FLOOR_PRICE)


class JewelBook:
    """Birth-order ranks per Cattribute."""

    def __init__(self):
        self.counts: dict[str, int] = {}
        self.jewels: dict[int, list[tuple[str, JewelTier]]] = {}

    def next_tier(self, name: str) -> JewelTier:
        return assign_jewel(self.counts.get(name, 0) + 1)

    def award(self, kitty_id: int, names: Iterable[str]) -> list[tuple[str, JewelTier]]:
        got = []
        for name in sorted(names):
            tier = self.next_tier(name)
            self.counts[name] = self.counts.get(name, 0) + 1
            got.append((name, tier))
        if got:
            self.jewels[kitty_id] = got
        return got

    def tiers_of(self, kitty_id: int) -> list[JewelTier]:
        return [t for _, t in self.jewels.get(kitty_id, [])]

    def tier_counts(self, name: Optional[str] = None) -> dict[str, int]:
        counts = {t.tier: 0 for t in TIERS}
        for got in self.jewels.values():
            for n, t in got:
                if name is None or n == name:
                    counts[t.tier] += 1
        return counts


@dataclass
class DiamondScenario:
    n_children: int
    gross: Decimal
    fees: Decimal
    tier_counts: dict[str, int]

    @property
    def net(self) -> Decimal:
        return self.gross - self.fees


def diamond_scenario(n_children: int = 499, registry: Optional[CattributeRegistry] = None,
                     cattribute: str = "driver") -> DiamondScenario:
    """Breed ``n_children`` heirs of a Diamond kitty on a SimChain and price them at jewel minimums.

    Both parents carry the Cattribute's cells in every slot of the affected
    groups, so no swap or mutation can lose it. Fees are reported, not
    subtracted from the gross.
    """
    if n_children < 0:
        raise ValueError("n_children must be non-negative")
    registry = default_registry() if registry is None else registry
    c = registry[cattribute]
    cells = [0] * N_CELLS
    for g, offsets in c.groups().items():
        value = offsets[min(offsets)]
        if len(set(offsets.values())) > 1:
            raise ValueError("Cattribute needs distinct values in one group; cannot guarantee inheritance")
        cells[GROUP_SIZE * g : GROUP_SIZE * g + GROUP_SIZE] = [value] * GROUP_SIZE
    gene = GeneArray(tuple(cells))
    assert c.matches(gene)

    chain = SimChain(hashlib.sha256(b"diamond-scenario").digest())
    owner = "breeder"
    chain.deposit(owner, chain.breeding_fee * n_children)
    book = JewelBook()
    diamond = chain.create_gen0(gene, owner)
    partner = chain.create_gen0(gene, owner)
    book.award(diamond.id, [c.name])
    gross = Decimal(0)
    for _ in range(n_children):
        chain.advance_to(diamond.cooldown_end_block)
        p = chain.breed(diamond.id, partner.id)
        chain.advance_to(p.target_block)
        child = chain.give_birth(p)
        names = [c.name] if c.matches(child.gene) else []
        gross += kitty_price(t for _, t in book.award(child.id, names))
    counts = {k: v for k, v in book.tier_counts(c.name).items()}
    counts[DIAMOND.tier] -= 1  # the parent, not a sale
    return DiamondScenario(n_children, gross, chain.fees_collected, counts)


def gini(values) -> float:
    """Gini coefficient of non-negative values; 0 for perfect equality (and for all zeros)."""
    x = np.sort(np.asarray(list(values), dtype=float))
    if x.size == 0:
        raise ValueError("gini of an empty list")
    if (x < 0).any():
        raise ValueError("gini needs non-negative values")
    total = x.sum()
    if total == 0:
        return 0.0
    n = x.size
    ranks = np.arange(1, n + 1)
    return float((2 * np.sum(ranks * x) - (n + 1) * total) / (n * total))


# -- scenario simulation

AGENT_CLASSES = ("rich_informed", "rich_naive", "poor_informed", "poor_naive")
DEFAULT_THRESHOLDS = {
    "return_gap": 0.02,
    "profit_ratio": 1.05,
    "market_share": 0.5,
    "instant_sale_share": 0.5,
    "instant_sale_blocks": 1,
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    agents: dict[str, int]
    budgets: dict[str, Decimal] = field(default_factory=lambda: {"rich": Decimal(100), "poor": Decimal(1)})
    horizon_blocks: int = 1200
    entropy: str = "block_hash"
    bid_delay_blocks: int = 0
    seconds_per_block: int = 15
    cooldown_table: Optional[list[int]] = None
    registry_path: Optional[str] = None
    seed: int = 0
    step_blocks: int = 20
    gen0_per_agent: int = 4
    auction_duration_blocks: int = 240
    max_candidates: int = 6
    keep_kitties: int = 6
    sire_cooldown: bool = False
    thresholds: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    scenario_id: str = "scenario"

    def __post_init__(self):
        if not isinstance(self.agents, dict) or not self.agents:
            raise ConfigError("agents must map agent classes to counts")
        for cls, n in self.agents.items():
            if cls not in AGENT_CLASSES:
                raise ConfigError(f"unknown agent class {cls!r}")
            if not isinstance(n, int) or n < 0:
                raise ConfigError(f"agent count for {cls} must be a non-negative integer")
        try:
            self.budgets = {k: Decimal(str(v)) for k, v in self.budgets.items()}
        except Exception as e:
            raise ConfigError(f"bad budgets: {e}") from e
        for need in {c.split("_")[0] for c, n in self.agents.items() if n}:
            if need not in self.budgets or self.budgets[need] < 0:
                raise ConfigError(f"missing or negative budget for {need!r} agents")
        if self.entropy not in ("block_hash", "joint", "joint_random"):
            raise ConfigError(f"entropy must be 'block_hash' or 'joint', got {self.entropy!r}")
        for name in ("horizon_blocks", "seconds_per_block", "step_blocks", "auction_duration_blocks",
                     "max_candidates"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("bid_delay_blocks", "gen0_per_agent", "seed", "keep_kitties"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 0:
                raise ConfigError(f"{name} must be a non-negative integer")
        if self.cooldown_table is not None:
            try:
                self.cooldown_table = list(check_cooldown_table(self.cooldown_table))
            except (TypeError, ValueError) as e:
                raise ConfigError(str(e)) from e
        self.thresholds = {**DEFAULT_THRESHOLDS, **self.thresholds}

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "agents" not in data:
            raise ConfigError("config needs an 'agents' entry")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> ScenarioConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read scenario config {path}: {e}") from e
        cfg = cls.from_dict(data)
        if cfg.registry_path and not Path(cfg.registry_path).is_absolute():
            cfg.registry_path = str(Path(path).parent / cfg.registry_path)
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["budgets"] = {k: str(v) for k, v in self.budgets.items()}
        return d


@dataclass
class Agent:
    id: int
    cls: str
    budget: Decimal

    @property
    def informed(self) -> bool:
        return self.cls.endswith("_informed")

    @property
    def rich(self) -> bool:
        return self.cls.startswith("rich")


@dataclass
class Trade:
    block: int
    listing_id: int
    kitty_id: int
    seller: int
    buyer: int
    price: Decimal
    listed_block: int


FLAG_NAMES = (
    "protects_low_budget",
    "protects_non_readers",
    "instant_price_information",
    "small_participants",
    "equal_opportunity",
)


@dataclass
class FairnessReport:
    scenario_id: str
    rng_seed: int
    entropy: str
    class_profit: dict[str, Decimal]
    class_mean_profit: dict[str, Decimal]
    class_mean_return: dict[str, float]
    agent_wealth: dict[int, Decimal]
    gini: float
    condition_flags: dict[str, bool]
    heuristic_flags: tuple[str, ...]
    informed_advantage: Optional[float]
    fees_collected: Decimal
    births: int
    trades: list[Trade]
    jewel_counts: dict[str, dict[str, int]]
    config: dict

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "rng_seed": self.rng_seed,
            "entropy": self.entropy,
            "class_profit": {k: str(v) for k, v in self.class_profit.items()},
            "class_mean_profit": {k: str(v) for k, v in self.class_mean_profit.items()},
            "class_mean_return": self.class_mean_return,
            "agent_wealth": {str(k): str(v) for k, v in self.agent_wealth.items()},
            "gini": self.gini,
            "condition_flags": self.condition_flags,
            "heuristic_flags": list(self.heuristic_flags),
            "informed_advantage": self.informed_advantage,
            "fees_collected": str(self.fees_collected),
            "births": self.births,
            "trade_count": len(self.trades),
            "jewel_counts": self.jewel_counts,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trades_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "listing_id", "kitty_id", "seller", "buyer", "price", "listed_block"])
        for t in self.trades:
            w.writerow([t.block, t.listing_id, t.kitty_id, t.seller, t.buyer, t.price, t.listed_block])
        return buf.getvalue()

    def write(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json() + "\n")
        (out / "trades.csv").write_text(self.trades_csv())


def gen0_pools(registry: CattributeRegistry, rng: random.Random, size: int = 4) -> list[list[int]]:
    """Per-cell value pools for generation-0 genes.

    Cells no Cattribute reads get a single world-wide value. Cattribute values
    reachable by mutation at a group head (16 and up) are left out and replaced
    by the even/odd precursor pair that mutates into them, so those Cattributes
    have to be bred.
    """
    pools: list[list[int]] = []
    for i in range(N_CELLS):
        pool: list[int] = []
        for c in registry:
            for cell, v in sorted(c.constraints):
                if cell != i:
                    continue
                wanted = [2 * (v - 16), 2 * (v - 16) + 1] if i % GROUP_SIZE == 0 and v >= 16 else [v]
                pool.extend(x for x in wanted if x not in pool)
        target = size if pool else 1
        while len(pool) < target:
            x = rng.randrange(32)
            if x not in pool:
                pool.append(x)
        pools.append(pool)
    return pools


class Valuer:
    """Prices kitties from jewels and one-step breeding lookahead over the registry."""

    def __init__(self, registry: CattributeRegistry, book: JewelBook):
        self.registry = registry
        self.book = book
        self._probs: dict[tuple[int, int], np.ndarray] = {}

    def pair_probs(self, m: Kitty, s: Kitty) -> np.ndarray:
        key = (min(m.id, s.id), max(m.id, s.id))
        if key not in self._probs:
            self._probs[key] = np.array([cattribute_probability(m.gene, s.gene, c) for c in self.registry])
        return self._probs[key]

    def _next_values(self) -> np.ndarray:
        return np.array([float(self.book.next_tier(c.name).min_price) for c in self.registry])

    def expected_child_value(self, m: Kitty, s: Kitty) -> Decimal:
        p = self.pair_probs(m, s)
        ev = float(p @ self._next_values()) + float(FLOOR_PRICE) * max(0.0, 1.0 - float(p.sum()))
        return Decimal(repr(round(ev, 12)))

    def child_value(self, gene: GeneArray) -> Decimal:
        hits = [self.book.next_tier(c.name).min_price for c in self.registry if c.matches(gene)]
        return max(hits, default=FLOOR_PRICE)

    def producible_value(self, k: Kitty, partners: Iterable[Kitty]) -> Decimal:
        return max((self.expected_child_value(k, p) for p in partners if p.id != k.id), default=Decimal(0))

    def value(self, k: Kitty, partners: Iterable[Kitty] = ()) -> Decimal:
        return kitty_price(self.book.tiers_of(k.id), self.producible_value(k, partners))

    def naive_value(self, k: Kitty) -> Decimal:
        return kitty_price(self.book.tiers_of(k.id))


class Simulation:
    def __init__(self, config: ScenarioConfig, cooldown_override: Optional[Iterable[int]] = None):
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.registry = (
            CattributeRegistry.load(config.registry_path) if config.registry_path else default_registry()
        )
        table = config.cooldown_table or (list(cooldown_override) if cooldown_override else DEFAULT_COOLDOWNS)
        self.agents = self._make_agents()
        self.source = make_source(config.entropy, [a.id for a in self.agents], config.seed)
        self.chain = SimChain(
            hashlib.sha256(f"kittylab-chain:{config.seed}".encode()).digest(),
            seconds_per_block=config.seconds_per_block,
            cooldown_table=table,
            entropy=self.source,
            sire_cooldown=config.sire_cooldown,
        )
        self.house = AuctionHouse(self.chain, config.bid_delay_blocks)
        self.book = JewelBook()
        self.valuer = Valuer(self.registry, self.book)
        self.trades: list[Trade] = []
        self.births = 0
        pools = gen0_pools(self.registry, self.rng)
        for a in self.agents:
            self.chain.deposit(a.id, a.budget)
            for _ in range(config.gen0_per_agent):
                gene = GeneArray(tuple(self.rng.choice(pool) for pool in pools))
                self.chain.create_gen0(gene, a.id)
        self.initial_eth = sum(self.chain.balances.values())

    def _make_agents(self) -> list[Agent]:
        slots = [cls for cls in AGENT_CLASSES for _ in range(self.cfg.agents.get(cls, 0))]
        ids = list(range(1, len(slots) + 1))
        self.rng.shuffle(ids)
        agents = [Agent(i, cls, self.cfg.budgets[cls.split("_")[0]]) for i, cls in zip(ids, slots)]
        return sorted(agents, key=lambda a: a.id)

    # -- helpers

    def holdings(self, agent: Agent) -> list[Kitty]:
        return [k for k in self.chain.owned_by(agent.id) if not self.house.listed(k.id)]

    def candidates(self, agent: Agent) -> list[Kitty]:
        return self.holdings(agent)[-self.cfg.max_candidates :]

    def eth_in_system(self) -> Decimal:
        return sum(self.chain.balances.values()) + self.chain.fees_collected

    # -- per-round phases

    def _births(self) -> None:
        for p in sorted(self.chain.due(), key=lambda p: (p.target_block, p.matron_id)):
            child = self.chain.give_birth(p)
            names = [c.name for c in self.registry if c.matches(child.gene)]
            self.book.award(child.id, names)
            self.births += 1

    def _auctions(self) -> None:
        height = self.chain.height
        for l in sorted(self.house.open_listings(), key=lambda l: l.listing_id):
            if height >= l.start_block + l.duration_blocks:
                self.house.cancel(l.listing_id)
                continue
            if height < l.opens_at:
                continue
            price = l.current_price(height)
            kitty = self.chain.kitty(l.kitty_id)
            for a in self.agents:  # ascending id: ties go to the lowest id
                if a.id == l.seller or self.chain.balance(a.id) < price:
                    continue
                if a.informed:
                    worth = self.valuer.value(kitty, self.candidates(a))
                else:
                    worth = self.valuer.naive_value(kitty)
                if worth >= price:
                    sale = self.house.bid(l.listing_id, a.id)
                    self.trades.append(Trade(height, l.listing_id, l.kitty_id, l.seller, a.id, sale.price,
                                             l.start_block))
                    break

    def _breed(self, a: Agent) -> None:
        if self.chain.balance(a.id) < self.chain.breeding_fee:
            return
        kitties = self.candidates(a)
        matrons = [k for k in kitties if self.chain.can_breed(k.id)]
        horizon = self.cfg.horizon_blocks
        matrons = [k for k in matrons if self.chain.target_block_for(k.id) < horizon]
        if not matrons or len(kitties) < 2:
            return
        if not a.informed:
            m = self.rng.choice(matrons)
            s = self.rng.choice([k for k in kitties if k.id != m.id])
            self.chain.breed(m.id, s.id, a.id)
            return
        best, best_value = None, self.chain.breeding_fee
        for m in matrons:
            digest = self.source.forecast(self.chain, self.chain.target_block_for(m.id))
            for s in kitties:
                if s.id == m.id:
                    continue
                if digest is not None:
                    v = self.valuer.child_value(mix_genes(m.gene, s.gene, digest))
                else:
                    v = self.valuer.expected_child_value(m, s)
                if v > best_value:
                    best, best_value = (m, s), v
        if best is not None:
            self.chain.breed(best[0].id, best[1].id, a.id)

    def _list(self, a: Agent) -> None:
        if any(l.seller == a.id for l in self.house.open_listings()):
            return
        mine = [k for k in self.holdings(a) if not self.chain.is_pregnant(k.id)]
        if len(mine) <= self.cfg.keep_kitties:
            return
        if a.informed:
            worth = {k.id: self.valuer.value(k, self.candidates(a)) for k in mine}
            k = min(mine, key=lambda k: (worth[k.id], k.id))
            ask = worth[k.id]
        else:
            k = self.rng.choice(mine)
            ask = self.valuer.naive_value(k)
        self.house.list(k.id, 2 * ask, ask, self.cfg.auction_duration_blocks)

    def step(self) -> None:
        self._births()
        self._auctions()
        order = list(self.agents)
        self.rng.shuffle(order)
        for a in order:
            self._breed(a)
            self._list(a)

    def run(self) -> FairnessReport:
        for block in range(0, self.cfg.horizon_blocks, self.cfg.step_blocks):
            self.chain.advance_to(block)
            self.step()
        self.chain.advance_to(self.cfg.horizon_blocks)
        self._births()
        return self.report()

    # -- evaluation

    def wealth(self, a: Agent) -> Decimal:
        owned = self.chain.owned_by(a.id)
        partners = owned[-self.cfg.max_candidates :]
        return self.chain.balance(a.id) + sum((self.valuer.value(k, partners) for k in owned), Decimal(0))

    def report(self) -> FairnessReport:
        cfg, th = self.cfg, self.cfg.thresholds
        wealth = {a.id: self.wealth(a) for a in self.agents}
        profit = {a.id: wealth[a.id] - a.budget for a in self.agents}
        ret = {a.id: float(profit[a.id] / a.budget) if a.budget else 0.0 for a in self.agents}
        present = [c for c in AGENT_CLASSES if cfg.agents.get(c, 0)]
        members = {c: [a for a in self.agents if a.cls == c] for c in present}
        class_profit = {c: sum((profit[a.id] for a in members[c]), Decimal(0)) for c in present}
        class_mean = {c: class_profit[c] / len(members[c]) for c in present}
        class_ret = {c: float(np.mean([ret[a.id] for a in members[c]])) for c in present}

        def mean_of(pred) -> Optional[float]:
            xs = [ret[a.id] for a in self.agents if pred(a)]
            return float(np.mean(xs)) if xs else None

        informed, naive = mean_of(lambda a: a.informed), mean_of(lambda a: not a.informed)
        rich, poor = mean_of(lambda a: a.rich), mean_of(lambda a: not a.rich)
        advantage = None
        if informed is not None and naive is not None:
            pi = [float(profit[a.id]) for a in self.agents if a.informed]
            pn = [float(profit[a.id]) for a in self.agents if not a.informed]
            advantage = float(np.mean(pi) - np.mean(pn))

        flags = {}
        flags["protects_low_budget"] = rich is None or poor is None or poor >= rich - th["return_gap"]
        flags["protects_non_readers"] = informed is None or naive is None or naive >= informed - th["return_gap"]
        quick = [t for t in self.trades if t.block - t.listed_block <= th["instant_sale_blocks"]]
        flags["instant_price_information"] = (
            not self.trades or len(quick) / len(self.trades) <= th["instant_sale_share"]
        )
        share = 0.0
        if self.trades:
            per_agent: dict[int, int] = {}
            for t in self.trades:
                per_agent[t.seller] = per_agent.get(t.seller, 0) + 1
                per_agent[t.buyer] = per_agent.get(t.buyer, 0) + 1
            share = max(per_agent.values()) / (2 * len(self.trades))
        flags["small_participants"] = share <= th["market_share"]
        flags["equal_opportunity"] = (
            informed is None or naive is None or (1 + informed) <= th["profit_ratio"] * (1 + naive)
        )
        jewel_counts = {c.name: self.book.tier_counts(c.name) for c in self.registry}
        return FairnessReport(
            scenario_id=cfg.scenario_id,
            rng_seed=cfg.seed,
            entropy=self.source.kind,
            class_profit=class_profit,
            class_mean_profit=class_mean,
            class_mean_return=class_ret,
            agent_wealth=wealth,
            gini=gini(float(w) for w in wealth.values()),
            condition_flags=flags,
            heuristic_flags=("instant_price_information", "small_participants"),
            informed_advantage=advantage,
            fees_collected=self.chain.fees_collected,
            births=self.births,
            trades=list(self.trades),
            jewel_counts=jewel_counts,
            config=cfg.to_dict(),
        )


def run_simulation(config: Union[ScenarioConfig, dict], seed: Optional[int] = None,
                   cooldown_override: Optional[Iterable[int]] = None) -> FairnessReport:
    if isinstance(config, dict):
        config = ScenarioConfig.from_dict(config)
    if seed is not None:
        config = ScenarioConfig.from_dict({**config.to_dict(), "seed": seed})
    return Simulation(config, cooldown_override).run()
