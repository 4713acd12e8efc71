"""Child prediction: exact child for a known digest, exact and sampled trait laws otherwise.

The exact law treats every digest bit as an independent fair coin, which is the
natural model for a block that has not been mined yet. Groups of four cells are
independent of each other (swaps stay inside a group and every group reads its
own bits), but cells within a group are correlated, so joint laws are kept per
group.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np

from .genescience import MUTATION_THRESHOLD, digests_to_bits, mix_genes, mix_genes_batch
from .genome import CELL_MAX, GROUP_SIZE, N_CELLS, N_GROUPS, Cattribute, GeneArray

N_VALUES = CELL_MAX + 1
P_SWAP = 0.25


def predict_child(matron: GeneArray, sire: GeneArray, target_digest) -> GeneArray:
    """What the target block's hash makes the child; identical to mix_genes by construction."""
    return mix_genes(matron, sire, target_digest)


def _swap_outcomes() -> list[tuple[tuple[int, ...], float]]:
    # The three decisions apply to positions (2,3), (1,2), (0,1) in that order.
    out: dict[tuple[int, ...], float] = {}
    for decisions in product((True, False), repeat=3):
        order = [0, 1, 2, 3]
        w = 1.0
        for j, swap in zip((2, 1, 0), decisions):
            if swap:
                order[j], order[j + 1] = order[j + 1], order[j]
                w *= P_SWAP
            else:
                w *= 1 - P_SWAP
        out[tuple(order)] = out.get(tuple(order), 0.0) + w
    return sorted(out.items())


SWAP_OUTCOMES = _swap_outcomes()


def _inheritance_labels(eligible: bool, high: bool) -> list[tuple[tuple[str, ...], float]]:
    """Per-cell sources ('M' matron, 'S' sire, 'X' mutant) over six fresh fair bits.

    A failed mutation test leaves the cursor in place, so the head's inheritance
    coin is the lowest of the three inspected bits and the next cells reuse the
    other two. Enumerating raw bits keeps those correlations exact.
    """
    out: dict[tuple[str, ...], float] = {}
    for b in product((0, 1), repeat=6):
        pos = 0
        labels = []
        for cell in range(GROUP_SIZE):
            if cell == 0 and eligible:
                three = b[pos] + 2 * b[pos + 1] + 4 * b[pos + 2]
                if (three == 0) if high else (three <= 1):
                    labels.append("X")
                    pos += 3
                    continue
            labels.append("M" if b[pos] == 1 else "S")
            pos += 1
        key = tuple(labels)
        out[key] = out.get(key, 0.0) + 1 / 64
    return sorted(out.items())


def _label_table(eligible: bool, high: bool) -> tuple[np.ndarray, np.ndarray]:
    code = {"M": 0, "S": 1, "X": 2}
    rows = _inheritance_labels(eligible, high)
    codes = np.array([[code[x] for x in labels] for labels, _ in rows], dtype=np.uint8)
    weights = np.array([w for _, w in rows])
    return codes, weights


def _stack_tables() -> tuple[np.ndarray, np.ndarray]:
    # index 0: head not eligible, 1: eligible with smallT < 22, 2: eligible with smallT >= 22
    tables = [_label_table(False, False), _label_table(True, False), _label_table(True, True)]
    width = max(len(w) for _, w in tables)
    codes = np.zeros((3, width, GROUP_SIZE), dtype=np.uint8)
    weights = np.zeros((3, width))
    for t, (c, w) in enumerate(tables):
        codes[t, : len(w)] = c
        weights[t, : len(w)] = w
    return codes, weights


_CODES, _CODE_WEIGHTS = _stack_tables()
_ORDERS = np.array([order for order, _ in SWAP_OUTCOMES], dtype=np.intp)
_ORDER_WEIGHTS = np.array([w for _, w in SWAP_OUTCOMES])


@lru_cache(maxsize=1 << 14)
def group_outcomes(matron_group: tuple[int, ...], sire_group: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Every weighted outcome of one child group: ((k, 4) cell values, (k,) probabilities).

    Rows cover each pair of swap results (one per parent) combined with each
    inheritance/mutation labelling; rows may repeat values.
    """
    m = np.asarray(matron_group, dtype=np.int16)[_ORDERS]  # (8, 4)
    s = np.asarray(sire_group, dtype=np.int16)[_ORDERS]
    mh, sh = m[:, 0][:, None], s[:, 0][None, :]
    small = np.minimum(mh, sh)  # (8, 8)
    eligible = (np.abs(mh - sh) == 1) & (small % 2 == 0)
    table = np.where(eligible, np.where(small >= MUTATION_THRESHOLD, 2, 1), 0)
    codes = _CODES[table]  # (8, 8, L, 4)
    mutant = (small // 2 + 16)[:, :, None, None]
    values = np.where(codes == 0, m[:, None, None, :], np.where(codes == 1, s[None, :, None, :], mutant))
    weights = _ORDER_WEIGHTS[:, None, None] * _ORDER_WEIGHTS[None, :, None] * _CODE_WEIGHTS[table]
    values, weights = values.reshape(-1, GROUP_SIZE), weights.reshape(-1)
    keep = weights > 0
    values, weights = values[keep], weights[keep]
    values.flags.writeable = False
    weights.flags.writeable = False
    return values, weights


def group_law(matron_group: tuple[int, ...], sire_group: tuple[int, ...]) -> dict[tuple[int, ...], float]:
    """Exact joint law of one child group given the two parents' groups."""
    values, weights = group_outcomes(tuple(matron_group), tuple(sire_group))
    v = values.astype(np.int64)
    keys = v[:, 0] | v[:, 1] << 5 | v[:, 2] << 10 | v[:, 3] << 15
    uniq, inverse = np.unique(keys, return_inverse=True)
    probs = np.bincount(inverse.ravel(), weights=weights)
    return {tuple(int(k) >> (5 * c) & 31 for c in range(GROUP_SIZE)): float(p) for k, p in zip(uniq, probs)}


@dataclass
class TraitDistribution:
    probs: np.ndarray  # (48, 32)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (N_CELLS, N_VALUES):
            raise ValueError(f"expected a {N_CELLS}x{N_VALUES} matrix")

    def row(self, cell: int) -> np.ndarray:
        return self.probs[cell]

    def support(self, cell: int) -> set[int]:
        return set(np.flatnonzero(self.probs[cell] > 0).tolist())

    def mode(self) -> GeneArray:
        return GeneArray(tuple(int(v) for v in self.probs.argmax(axis=1)))

    def max_abs_error(self, other: TraitDistribution) -> float:
        return float(np.abs(self.probs - other.probs).max())

    def tv_distance(self, other: TraitDistribution) -> np.ndarray:
        """Total-variation distance per cell row."""
        return 0.5 * np.abs(self.probs - other.probs).sum(axis=1)

    def to_csv(self, path=None, monte_carlo: Optional[TraitDistribution] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell", "value", "probability"] + (["monte_carlo"] if monte_carlo is not None else []))
        for i in range(N_CELLS):
            for v in range(N_VALUES):
                row = [i, v, repr(float(self.probs[i, v]))]
                if monte_carlo is not None:
                    row.append(repr(float(monte_carlo.probs[i, v])))
                w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str, column: str = "probability") -> TraitDistribution:
        probs = np.zeros((N_CELLS, N_VALUES))
        for row in csv.DictReader(io.StringIO(text)):
            probs[int(row["cell"]), int(row["value"])] = float(row[column])
        return cls(probs)


def trait_distribution(matron: GeneArray, sire: GeneArray) -> TraitDistribution:
    probs = np.zeros((N_CELLS, N_VALUES))
    for g in range(N_GROUPS):
        values, weights = group_outcomes(matron.group(g), sire.group(g))
        for offset in range(GROUP_SIZE):
            probs[GROUP_SIZE * g + offset] = np.bincount(values[:, offset], weights=weights, minlength=N_VALUES)
    return TraitDistribution(probs)


def gene_probability(matron: GeneArray, sire: GeneArray, child: GeneArray) -> float:
    """Exact probability that a uniform digest yields exactly ``child``."""
    p = 1.0
    for g in range(N_GROUPS):
        p *= group_law(matron.group(g), sire.group(g)).get(child.group(g), 0.0)
        if p == 0.0:
            break
    return p


def most_likely_child(matron: GeneArray, sire: GeneArray) -> GeneArray:
    """Joint mode: the best single guess for the whole gene."""
    cells: list[int] = []
    for g in range(N_GROUPS):
        law = group_law(matron.group(g), sire.group(g))
        cells.extend(max(sorted(law), key=law.__getitem__))
    return GeneArray(tuple(cells))


def constraint_probability(matron: GeneArray, sire: GeneArray, constraints: dict[int, int]) -> float:
    """P(child.cells[i] == v for every (i, v)); product over groups of within-group joint sums."""
    by_group: dict[int, dict[int, int]] = {}
    for i, v in constraints.items():
        by_group.setdefault(i // GROUP_SIZE, {})[i % GROUP_SIZE] = v
    p = 1.0
    for g, wanted in by_group.items():
        p *= _group_match(matron.group(g), sire.group(g), tuple(sorted(wanted.items())))
        if p == 0.0:
            break
    return p


@lru_cache(maxsize=1 << 18)
def _group_match(mg: tuple[int, ...], sg: tuple[int, ...], wanted: tuple[tuple[int, int], ...]) -> float:
    # Same sum as over group_outcomes, without materializing every outcome:
    # when the head cannot mutate, the four inheritance coins are independent.
    offsets = [o for o, _ in wanted]
    vals = np.array([v for _, v in wanted])
    m = np.asarray(mg)[_ORDERS]
    s = np.asarray(sg)[_ORDERS]
    m_ok = m[:, offsets] == vals  # (8, w)
    s_ok = s[:, offsets] == vals
    p = np.prod((m_ok[:, None, :].astype(float) + s_ok[None, :, :]) * 0.5, axis=2)  # (8, 8)
    mh, sh = m[:, 0][:, None], s[:, 0][None, :]
    small = np.minimum(mh, sh)
    eligible = (np.abs(mh - sh) == 1) & (small % 2 == 0)
    if eligible.any():
        a, b = np.nonzero(eligible)
        sm = small[a, b]
        t = np.where(sm >= MUTATION_THRESHOLD, 2, 1)
        codes = _CODES[t][:, :, offsets]  # (e, L, w)
        mut_ok = ((sm // 2 + 16)[:, None] == vals)[:, None, :]
        ok = np.where(codes == 0, m_ok[a][:, None, :], np.where(codes == 1, s_ok[b][:, None, :], mut_ok))
        p[a, b] = (ok.all(axis=2) * _CODE_WEIGHTS[t]).sum(axis=1)
    return float(_ORDER_WEIGHTS @ p @ _ORDER_WEIGHTS)


def cattribute_probability(matron: GeneArray, sire: GeneArray, c: Cattribute) -> float:
    return constraint_probability(matron, sire, dict(c.constraints))


# -- Monte Carlo oracle


def random_digests(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform 32-byte digests from raw 64-bit draws; chunking does not change the stream."""
    words = rng.bit_generator.random_raw((n, 4)).astype(">u8")
    return words.view(np.uint8).reshape(n, 32)


def sample_counts(matron: GeneArray, sire: GeneArray, digests: np.ndarray) -> np.ndarray:
    """(48, 32) child-cell counts over a batch of digests. Counts from batches add."""
    child = mix_genes_batch(matron, sire, digests_to_bits(digests))
    counts = np.zeros((N_CELLS, N_VALUES), dtype=np.int64)
    for i in range(N_CELLS):
        counts[i] = np.bincount(child[:, i], minlength=N_VALUES)
    return counts


def monte_carlo_distribution(
    matron: GeneArray, sire: GeneArray, samples: int, rng_seed: int = 0, chunk: int = 1 << 16
) -> TraitDistribution:
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    counts = np.zeros((N_CELLS, N_VALUES), dtype=np.int64)
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        counts += sample_counts(matron, sire, random_digests(rng, n))
        done += n
    return TraitDistribution(counts / samples)
