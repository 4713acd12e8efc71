import math
from decimal import Decimal
from fractions import Fraction

import pytest

from kittylab.auction import (
    SIRING,
    AlreadySold,
    AuctionError,
    AuctionHouse,
    BeforeDelayWindow,
    Cancelled,
    InsufficientFunds,
    Listing,
    NotStarted,
    bid,
    collusion_experiment,
    current_price,
    expected_public_share,
)
from kittylab.chain import SimChain
from kittylab.genome import GeneArray


def listing(**kw):
    args = dict(kitty_id=1, seller="alice", start_price=Decimal(1), end_price=Decimal(0), start_block=0,
                duration_blocks=100)
    args.update(kw)
    return Listing(**args)


def test_price_path():
    l = listing()
    assert current_price(l, 0) == Decimal(1)
    assert current_price(l, 50) == Decimal("0.5")
    assert current_price(l, 100) == Decimal(0) == current_price(l, 10_000)
    prices = [current_price(l, b) for b in range(0, 120)]
    assert prices == sorted(prices, reverse=True)
    with pytest.raises(NotStarted):
        current_price(listing(start_block=5), 4)


def test_price_rounds_to_wei():
    l = listing(start_price=Decimal(1), duration_blocks=3)
    assert current_price(l, 1) == Decimal("0.666666666666666667")


def test_custom_curve_hook():
    l = listing(curve=lambda x: x * x)
    assert current_price(l, 50) == Decimal("0.75")


def test_listing_validation():
    with pytest.raises(ValueError):
        listing(start_price=Decimal(0), end_price=Decimal(1))
    with pytest.raises(ValueError):
        listing(duration_blocks=0)
    with pytest.raises(ValueError):
        listing(bid_delay_blocks=-1)


def test_colluder_bidding_at_start_pays_start_price():
    sale = bid(listing(), "bob", 0, Decimal(5))
    assert sale.price == Decimal(1) and sale.buyer == "bob"


def test_bid_delay_window():
    l = listing(bid_delay_blocks=240, duration_blocks=1000)
    with pytest.raises(BeforeDelayWindow):
        bid(l, "bob", 100, Decimal(5))
    assert bid(l, "bob", 240, Decimal(5)).block == 240


def test_bid_errors():
    l = listing()
    with pytest.raises(InsufficientFunds):
        bid(l, "bob", 0, Decimal("0.5"))
    bid(l, "bob", 0, Decimal(1))
    with pytest.raises(AlreadySold):
        bid(l, "carol", 1, Decimal(1))
    c = listing()
    c.state = "cancelled"
    with pytest.raises(Cancelled):
        bid(c, "bob", 0, Decimal(1))


@pytest.fixture
def house():
    chain = SimChain()
    for who, eth in (("alice", 1), ("bob", 3), ("carol", 2)):
        chain.deposit(who, eth)
    chain.create_gen0(GeneArray.filled(6), "alice")
    chain.create_gen0(GeneArray.filled(7), "bob")
    return AuctionHouse(chain)


def test_standard_sale_moves_kitty_and_conserves_eth(house):
    chain = house.chain
    total = sum(chain.balances.values())
    l = house.list(1, Decimal(2), Decimal(1), 10)
    assert house.listed(1)
    with pytest.raises(AuctionError):
        house.list(1, Decimal(2), Decimal(1), 10)
    with pytest.raises(AuctionError):
        house.bid(l.listing_id, "alice")
    chain.advance(5)
    sale = house.bid(l.listing_id, "bob")
    assert sale.price == Decimal("1.5")
    assert chain.kitty(1).owner == "bob" and not house.listed(1)
    assert chain.balance("alice") == Decimal("2.5") and chain.balance("bob") == Decimal("1.5")
    assert sum(chain.balances.values()) == total


def test_siring_right_leaves_ownership_unchanged(house):
    chain = house.chain
    l = house.list(1, Decimal("0.5"), Decimal("0.1"), 10, kind=SIRING)
    house.bid(l.listing_id, "bob")
    assert chain.kitty(1).owner == "alice"
    p = house.breed_with_right(l.listing_id, 2)
    assert p.sire_id == 1 and p.payer == "bob"
    chain.advance_to(p.target_block)
    child = chain.give_birth(p)
    assert child.owner == "bob" and chain.kitty(1).owner == "alice"
    with pytest.raises(AuctionError):
        house.breed_with_right(l.listing_id, 2)


def test_cancel(house):
    l = house.list(1, Decimal(1), Decimal(1), 10)
    house.cancel(l.listing_id)
    assert not house.listed(1) and house.open_listings() == []
    with pytest.raises(AlreadySold):
        house.cancel(l.listing_id)


def test_no_delay_means_colluder_always_wins():
    r = collusion_experiment(2000, 0, 60, rng_seed=1)
    assert r.colluder_rate == 1.0 and r.mean_price == Decimal(1)


def test_no_public_bidders():
    for d in (0, 240, 960):
        assert collusion_experiment(200, d, 60, n_public=0).colluder_rate == 1.0


def _closed_form(delay, mean, n):
    # independent restatement: some k of n notice within the window, then id order decides
    q = 1 - (1 - 1 / mean) ** delay
    return sum(math.comb(n, k) * q**k * (1 - q) ** (n - k) * Fraction(k, k + 1) for k in range(n + 1))


@pytest.mark.parametrize("delay", [0, 1, 60, 240, 960])
def test_closed_form(delay):
    assert expected_public_share(delay, 60, 3) == pytest.approx(float(_closed_form(delay, 60, 3)), abs=1e-12)


def test_delay_window_gives_the_public_a_chance():
    r = collusion_experiment(20_000, 240, 60, rng_seed=2)
    assert r.public_share > 0
    sd = math.sqrt(0.25 / r.n_auctions)
    assert abs(r.public_share - expected_public_share(240, 60, 3)) < 4 * sd


def test_public_share_is_monotone_in_delay():
    for seed in range(5):
        shares = [collusion_experiment(2000, d, 60, rng_seed=seed).public_share for d in (0, 60, 240, 960)]
        assert shares == sorted(shares)


def test_report_csv():
    r = collusion_experiment(5, 60, 60)
    lines = r.to_csv().splitlines()
    assert lines[0] == "auction_id,winner_class,price,block"
    assert len(lines) == 6


def test_experiment_argument_checks():
    with pytest.raises(ValueError):
        collusion_experiment(1, -1, 60)
    with pytest.raises(ValueError):
        collusion_experiment(1, 0, 0.5)
