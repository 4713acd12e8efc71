"""Dutch auctions (standard and siring), the colluding-bidder experiment, and bid delays."""

from __future__ import annotations

import csv
import heapq
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy.stats import binom

from .chain import ChainError, Pregnancy, SimChain

WEI = Decimal("1e-18")
STANDARD, SIRING = "standard", "siring"


class AuctionError(Exception):
    pass


class NotStarted(AuctionError):
    pass


class BeforeDelayWindow(AuctionError):
    pass


class InsufficientFunds(AuctionError):
    pass


class AlreadySold(AuctionError):
    pass


class Cancelled(AuctionError):
    pass


def linear_curve(progress: Fraction) -> Fraction:
    return progress


def to_eth(x: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 80
        return (Decimal(x.numerator) / Decimal(x.denominator)).quantize(WEI, rounding=ROUND_HALF_EVEN)


@dataclass
class Sale:
    buyer: object
    price: Decimal
    block: int


@dataclass
class Listing:
    kitty_id: int
    seller: object
    start_price: Decimal
    end_price: Decimal
    start_block: int
    duration_blocks: int
    kind: str = STANDARD
    bid_delay_blocks: int = 0
    listing_id: int = 0
    curve: Callable[[Fraction], Fraction] = field(default=linear_curve, repr=False)
    state: str = "open"
    sale: Optional[Sale] = None

    def __post_init__(self):
        self.start_price = Decimal(self.start_price)
        self.end_price = Decimal(self.end_price)
        if self.end_price < 0 or self.start_price < self.end_price:
            raise ValueError("a Dutch auction needs start_price >= end_price >= 0")
        if self.duration_blocks <= 0:
            raise ValueError("duration_blocks must be positive")
        if self.bid_delay_blocks < 0:
            raise ValueError("bid_delay_blocks must be non-negative")
        if self.kind not in (STANDARD, SIRING):
            raise ValueError(f"unknown auction kind {self.kind!r}")

    @property
    def opens_at(self) -> int:
        return self.start_block + self.bid_delay_blocks

    def current_price(self, block: int) -> Decimal:
        return current_price(self, block)


def current_price(l: Listing, block: int) -> Decimal:
    if block < l.start_block:
        raise NotStarted(f"listing starts at block {l.start_block}")
    progress = Fraction(min(block - l.start_block, l.duration_blocks), l.duration_blocks)
    start, end = Fraction(l.start_price), Fraction(l.end_price)
    return to_eth(start + (end - start) * l.curve(progress))


def bid(l: Listing, bidder, block: int, funds) -> Sale:
    """Validate a bid and mark the listing sold. Moving Eth and kitties is the caller's job."""
    if l.state == "sold":
        raise AlreadySold(f"listing {l.listing_id} already sold")
    if l.state == "cancelled":
        raise Cancelled(f"listing {l.listing_id} was cancelled")
    if block < l.opens_at:
        raise BeforeDelayWindow(f"bidding opens at block {l.opens_at}")
    price = current_price(l, block)
    if Decimal(funds) < price:
        raise InsufficientFunds(f"bid needs {price} Eth, bidder has {funds}")
    l.state = "sold"
    l.sale = Sale(bidder, price, block)
    return l.sale


class AuctionHouse:
    """Listings settled against a SimChain ledger; no auction fee, so sales conserve Eth."""

    def __init__(self, chain: SimChain, bid_delay_blocks: int = 0):
        self.chain = chain
        self.bid_delay_blocks = bid_delay_blocks
        self.listings: dict[int, Listing] = {}
        self._open: dict[int, Listing] = {}  # by kitty id
        self._siring_used: set[int] = set()

    def list(self, kitty_id: int, start_price, end_price, duration_blocks: int, kind: str = STANDARD) -> Listing:
        if self.listed(kitty_id):
            raise AuctionError(f"kitty {kitty_id} is already on auction")
        l = Listing(
            kitty_id, self.chain.kitty(kitty_id).owner, start_price, end_price, self.chain.height,
            duration_blocks, kind, self.bid_delay_blocks, listing_id=len(self.listings) + 1,
        )
        self.listings[l.listing_id] = l
        self._open[kitty_id] = l
        return l

    def listed(self, kitty_id: int) -> bool:
        return kitty_id in self._open

    def open_listings(self) -> list[Listing]:
        return sorted(self._open.values(), key=lambda l: l.listing_id)

    def cancel(self, listing_id: int) -> None:
        l = self.listings[listing_id]
        if l.state != "open":
            raise AlreadySold(f"listing {listing_id} is closed")
        l.state = "cancelled"
        del self._open[l.kitty_id]

    def bid(self, listing_id: int, bidder) -> Sale:
        l = self.listings[listing_id]
        if bidder == l.seller:
            raise AuctionError("sellers cannot bid on their own listing")
        sale = bid(l, bidder, self.chain.height, self.chain.balance(bidder))
        del self._open[l.kitty_id]
        self.chain.transfer(bidder, l.seller, sale.price)
        if l.kind == STANDARD:
            self.chain.kitty(l.kitty_id).owner = bidder
        return sale

    def breed_with_right(self, listing_id: int, matron_id: int) -> Pregnancy:
        """Spend a won siring right: the listed kitty sires the winner's matron and stays with its owner."""
        l = self.listings[listing_id]
        if l.kind != SIRING or l.state != "sold":
            raise AuctionError("no siring right won on this listing")
        if listing_id in self._siring_used:
            raise AuctionError("siring right already used")
        if self.chain.kitty(matron_id).owner != l.sale.buyer:
            raise ChainError("the matron must belong to the winner of the siring auction")
        p = self.chain.breed(matron_id, l.kitty_id, payer=l.sale.buyer)
        self._siring_used.add(listing_id)
        return p


# -- collusion experiment

COLLUDER, PUBLIC = "colluder", "public"


@dataclass
class CollusionReport:
    n_auctions: int
    delay_blocks: int
    discovery_mean_blocks: float
    colluder_wins: int
    public_wins: int
    mean_price: Decimal
    rows: list[tuple[int, str, Decimal, int]]

    @property
    def colluder_rate(self) -> float:
        return self.colluder_wins / self.n_auctions if self.n_auctions else 0.0

    @property
    def public_share(self) -> float:
        return self.public_wins / self.n_auctions if self.n_auctions else 0.0

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["auction_id", "winner_class", "price", "block"])
        for row in self.rows:
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def collusion_experiment(
    n_auctions: int,
    delay_blocks: int,
    discovery_mean_blocks: float,
    rng_seed: int = 0,
    n_public: int = 3,
    start_price=Decimal(1),
    end_price=Decimal(0),
    duration_blocks: int = 5760,
) -> CollusionReport:
    """Seller tips off a colluder who bids the moment bidding opens.

    Each public bidder notices the listing after a geometric number of blocks
    (support 1, 2, ...) and bids then, or as soon as the delay window opens if
    it noticed earlier. Bids landing in the same block are ordered by account
    id; ids are shuffled per auction, so nobody is systematically first.
    Random draws do not depend on ``delay_blocks``, so runs that differ only in
    the delay see the same bidders.
    """
    if n_auctions < 0 or delay_blocks < 0 or n_public < 0:
        raise ValueError("counts and delays must be non-negative")
    if discovery_mean_blocks < 1:
        raise ValueError("discovery_mean_blocks must be at least 1")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    rows = []
    total = Decimal(0)
    wins = {COLLUDER: 0, PUBLIC: 0}
    for auction_id in range(1, n_auctions + 1):
        discovery = rng.geometric(1.0 / discovery_mean_blocks, size=n_public)
        ids = rng.permutation(n_public + 1)
        l = Listing(auction_id, "seller", start_price, end_price, 0, duration_blocks, bid_delay_blocks=delay_blocks,
                    listing_id=auction_id)
        queue = [(l.opens_at, int(ids[0]), COLLUDER)]
        queue += [(int(d), int(who), PUBLIC) for d, who in zip(discovery, ids[1:])]
        heapq.heapify(queue)
        while queue:
            block, who, cls = heapq.heappop(queue)
            try:
                sale = bid(l, who, block, start_price)
            except BeforeDelayWindow:
                heapq.heappush(queue, (l.opens_at, who, cls))
                continue
            wins[cls] += 1
            total += sale.price
            rows.append((auction_id, cls, sale.price, sale.block))
            break
    mean = total / n_auctions if n_auctions else Decimal(0)
    return CollusionReport(n_auctions, delay_blocks, discovery_mean_blocks, wins[COLLUDER], wins[PUBLIC], mean, rows)


def expected_public_share(delay_blocks: int, discovery_mean_blocks: float, n_public: int) -> float:
    """Closed form: public wins only by tying the colluder at the opening block, then by id order."""
    if n_public == 0 or delay_blocks == 0:
        return 0.0
    q = 1.0 - (1.0 - 1.0 / discovery_mean_blocks) ** delay_blocks
    k = np.arange(n_public + 1)
    return float(np.sum(binom.pmf(k, n_public, q) * k / (k + 1)))
