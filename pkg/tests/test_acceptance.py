"""Acceptance criteria, one test each. Every test records a single PASS/FAIL line."""

import io
import json
import math
import random
import time
from decimal import Decimal

import numpy as np

from kittylab.auction import collusion_experiment, expected_public_share
from kittylab.chain import SimChain
from kittylab.cli import main
from kittylab.genescience import MUTATION_THRESHOLD, BitStream, MutationContext, mutation_result, read_bits
from kittylab.genome import GeneArray
from kittylab.market import run_simulation
from kittylab.prediction import (
    gene_probability,
    monte_carlo_distribution,
    most_likely_child,
    predict_child,
    trait_distribution,
)
from kittylab.randomness import run_protocol

N_SEEDS = 20


def test_criterion_1_diamond_scenario(verdict):
    t0 = time.perf_counter()
    out = io.StringIO()
    code = main(["jewel-scenario", "--children", "499"], out=out)
    elapsed = time.perf_counter() - t0
    values = dict(line.split() for line in out.getvalue().splitlines())
    gross = Decimal(values["gross_eth"])
    tiers = (int(values["Gilded"]), int(values["Amethyst"]), int(values["Lapis"]))
    ok = code == 0 and abs(gross - Decimal("14.4")) <= Decimal("1e-9") and tiers == (9, 90, 400) and elapsed < 1
    verdict(1, ok, f"gross {gross} Eth, tiers {tiers}, fees {values['fees_eth']} Eth, {elapsed:.3f}s")


def _stream(low3: int) -> BitStream:
    return BitStream((((1 << 256) - 1) >> 3 << 3) | low3)


def test_criterion_2_mutation_law(verdict):
    t0 = time.perf_counter()
    bad = []
    for index in range(4):
        for a in range(32):
            for b in range(32):
                small = min(a, b)
                for low3 in range(8):
                    s = _stream(low3)
                    got = mutation_result(MutationContext(a, b, index), s)
                    cond12 = index % 4 == 0 and abs(a - b) == 1 and small % 2 == 0
                    cond3 = low3 <= 1 if small < MUTATION_THRESHOLD else low3 == 0
                    want = small // 2 + 16 if cond12 and cond3 else None
                    consumed = 3 if want is not None else 0
                    if got != want or s.cursor != consumed:
                        bad.append((index, a, b, low3, got))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1
    verdict(2, ok, f"{4 * 32 * 32 * 8} cases, {len(bad)} mismatches, {elapsed:.3f}s")


def test_criterion_3_prediction_attack(verdict):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    chain = SimChain(bytes(range(32)))
    chain.deposit("attacker", 1000)
    pool = list(range(32))
    matches = 0
    for _ in range(1000):
        m = chain.create_gen0(GeneArray(tuple(rng.choice(pool) for _ in range(48))), "attacker")
        s = chain.create_gen0(GeneArray(tuple(rng.choice(pool) for _ in range(48))), "attacker")
        p = chain.breed(m.id, s.id)
        chain.advance_to(p.target_block)
        child = chain.give_birth(p)
        matches += predict_child(m.gene, s.gene, p.digest) == child.gene
        chain.advance(rng.randrange(3))
    elapsed = time.perf_counter() - t0
    verdict(3, matches == 1000 and elapsed < 5, f"{matches}/1000 exact predictions, {elapsed:.2f}s")


def test_criterion_4_oracle_agreement(verdict):
    t0 = time.perf_counter()
    rng = random.Random(4)
    worst = 0.0
    for pair in range(50):
        # half the pairs draw from values that make group heads mutation-eligible
        pool = [4, 5, 6, 7, 20, 21, 22, 23, 30, 31] if pair % 2 else list(range(32))
        m = GeneArray(tuple(rng.choice(pool) for _ in range(48)))
        s = GeneArray(tuple(rng.choice(pool) for _ in range(48)))
        mc = monte_carlo_distribution(m, s, 1_000_000, rng_seed=pair)
        worst = max(worst, trait_distribution(m, s).max_abs_error(mc))
    elapsed = time.perf_counter() - t0
    verdict(4, worst <= 0.005 and elapsed < 120, f"max abs error {worst:.5f} over 50 pairs, {elapsed:.1f}s")


def test_criterion_5_probability_constants(verdict):
    n = 1_000_000
    rng = random.Random(5)
    swaps = mut_low = mut_high = 0
    for _ in range(n):
        x = rng.getrandbits(256)
        swaps += read_bits(BitStream(x), 2) == 0
        mut_low += mutation_result(MutationContext(6, 7, 0), BitStream(x)) is not None
        mut_high += mutation_result(MutationContext(22, 23, 0), BitStream(x)) is not None
    p_swap, p_low, p_high = swaps / n, mut_low / n, mut_high / n
    ok = abs(p_swap - 0.25) <= 0.005 and abs(p_low - 0.25) <= 0.005 and abs(p_high - 0.125) <= 0.005
    verdict(5, ok, f"swap {p_swap:.4f}, mutation smallT<22 {p_low:.4f}, smallT>=22 {p_high:.4f}")


def test_criterion_6_countermeasure(verdict):
    trials = 10_000
    details, ok = [], True
    pairs = [((6, 6, 6, 6), (7, 7, 7, 7)), ((6, 9, 22, 3), (7, 9, 23, 3))]
    rng = random.Random(6)
    for mg, sg in pairs:
        m, s = GeneArray(mg + (9,) * 44), GeneArray(sg + (9,) * 44)
        guess = most_likely_child(m, s)
        baseline = gene_probability(m, s, guess)
        fixed = {f"adversary{i}": rng.getrandbits(256) for i in range(4)}
        hits = 0
        for _ in range(trials):
            digest, _ = run_protocol({**fixed, "honest": rng.getrandbits(256)}, rng)
            hits += predict_child(m, s, digest) == guess
        rate = hits / trials
        noise = 4 * math.sqrt(baseline * (1 - baseline) / trials)
        ok &= abs(rate - baseline) <= noise
        details.append(f"joint {rate:.4f} vs baseline {baseline:.4f} (+-{noise:.4f})")
        if mg == (6, 6, 6, 6):
            per_cell = float(trait_distribution(m, s).probs.max(axis=1).prod())
            ok &= rate <= per_cell + 0.01

    chain = SimChain(bytes(range(1, 33)))
    chain.deposit("a", 100)
    hits = 0
    for _ in range(1000):
        m = chain.create_gen0(GeneArray(tuple(rng.randrange(32) for _ in range(48))), "a")
        s = chain.create_gen0(GeneArray(tuple(rng.randrange(32) for _ in range(48))), "a")
        p = chain.breed(m.id, s.id)
        forecast = predict_child(m.gene, s.gene, chain.digest_formula(p.target_block))
        chain.advance_to(p.target_block)
        hits += chain.give_birth(p).gene == forecast
    block_rate = hits / 1000
    ok &= block_rate == 1.0
    verdict(6, ok, "; ".join(details) + f"; block_hash {block_rate:.3f}")


def test_criterion_7_collusion_and_delay(verdict):
    delays = (0, 60, 240, 960)
    reports = {d: collusion_experiment(10_000, d, 60, rng_seed=7) for d in delays}
    shares = [reports[d].public_share for d in delays]
    ok = reports[0].colluder_rate == 1.0 and reports[240].public_share > 0 and shares == sorted(shares)
    expected = [expected_public_share(d, 60, 3) for d in delays]
    detail = ", ".join(f"d={d}: {s:.3f} (closed form {e:.3f})" for d, s, e in zip(delays, shares, expected))
    verdict(7, ok, f"colluder rate at d=0 {reports[0].colluder_rate:.3f}; public share {detail}")


def test_criterion_8_determinism(verdict, tmp_path):
    cfg = tmp_path / "scenario.json"
    identical = []
    for entropy in ("block_hash", "joint"):
        cfg.write_text(json.dumps({"agents": {"rich_informed": 2, "poor_naive": 2}, "entropy": entropy,
                                   "horizon_blocks": 600}))
        outs = []
        for run in ("a", "b"):
            d = tmp_path / f"{entropy}-{run}"
            assert main(["market-sim", "--config", str(cfg), "--seed", "11", "--out", str(d)], out=io.StringIO()) == 0
            outs.append(tuple((d / f).read_bytes() for f in ("report.json", "trades.csv")))
        identical.append(outs[0] == outs[1])
    verdict(8, all(identical), f"byte-identical reports for block_hash and joint: {identical}")


def test_criterion_9_directional_fairness(verdict):
    config = {"agents": {"rich_informed": 3, "rich_naive": 3}}
    gap = {}
    informed_ahead = {}
    for entropy in ("block_hash", "joint"):
        reports = [run_simulation({**config, "entropy": entropy}, seed=seed) for seed in range(N_SEEDS)]
        informed = np.mean([float(r.class_mean_profit["rich_informed"]) for r in reports])
        naive = np.mean([float(r.class_mean_profit["rich_naive"]) for r in reports])
        gap[entropy] = informed - naive
        informed_ahead[entropy] = informed > naive
    ok = informed_ahead["block_hash"] and gap["joint"] < gap["block_hash"]
    verdict(9, ok, f"{N_SEEDS} seeds: informed-naive profit gap {gap['block_hash']:.3f} Eth under block_hash, "
                   f"{gap['joint']:.3f} Eth under joint")
