"""Gene determination: swap phase, mutation and inheritance driven by a hash bitstream.

The digest is read as a 256-bit big-endian integer and consumed from bit 0
(least significant) upwards. Group 0 therefore uses the lowest six bits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .genome import GROUP_SIZE, N_CELLS, N_GROUPS, GeneArray

SWAP_BITS = 2 * 3 * N_GROUPS  # per parent
MUTATION_THRESHOLD = 22


def as_digest(seed) -> bytes:
    """Accept 32 raw bytes, a 64-char hex string or a non-negative int < 2**256."""
    if isinstance(seed, (bytes, bytearray)):
        if len(seed) != 32:
            raise ValueError("digest must be 32 bytes")
        return bytes(seed)
    if isinstance(seed, str):
        text = seed[2:] if seed.startswith(("0x", "0X")) else seed
        if len(text) != 64:
            raise ValueError("digest hex must be 64 characters")
        return bytes.fromhex(text)
    if isinstance(seed, int):
        if not 0 <= seed < 1 << 256:
            raise ValueError("digest integer must fit in 256 bits")
        return seed.to_bytes(32, "big")
    raise TypeError(f"cannot interpret {type(seed).__name__} as a digest")


@dataclass
class BitStream:
    """Sequential LSB-first reader over a digest, extended by iterated SHA-256."""

    seed: bytes
    cursor: int = 0
    extension_digests: list[bytes] = field(default_factory=list)

    def __post_init__(self):
        self.seed = as_digest(self.seed)
        self._value = int.from_bytes(self.seed, "big")
        self._nbits = 256
        for d in self.extension_digests:
            self._value |= int.from_bytes(d, "big") << self._nbits
            self._nbits += 256

    def _extend(self) -> None:
        prev = self.extension_digests[-1] if self.extension_digests else self.seed
        d = hashlib.sha256(prev).digest()
        self.extension_digests.append(d)
        self._value |= int.from_bytes(d, "big") << self._nbits
        self._nbits += 256

    def peek(self, n: int) -> int:
        if not 1 <= n <= 8:
            raise ValueError("can read between 1 and 8 bits at a time")
        while self.cursor + n > self._nbits:
            self._extend()
        return (self._value >> self.cursor) & ((1 << n) - 1)

    def read(self, n: int) -> int:
        out = self.peek(n)
        self.cursor += n
        return out

    def skip(self, n: int) -> None:
        self.cursor += n


def read_bits(s: BitStream, n: int) -> int:
    return s.read(n)


def swap_phase(parent: GeneArray, s: BitStream) -> GeneArray:
    cells = list(parent.cells)
    for i in range(N_GROUPS):
        for j in (2, 1, 0):
            if s.read(2) == 0:
                a = GROUP_SIZE * i + j
                cells[a], cells[a + 1] = cells[a + 1], cells[a]
    return GeneArray(tuple(cells))


@dataclass(frozen=True)
class MutationContext:
    matron_cell: int
    sire_cell: int
    cell_index: int

    @property
    def small(self) -> int:
        return min(self.matron_cell, self.sire_cell)

    @property
    def eligible(self) -> bool:
        return (
            self.cell_index % GROUP_SIZE == 0
            and abs(self.matron_cell - self.sire_cell) == 1
            and self.small % 2 == 0
        )


def mutation_result(ctx: MutationContext, s: BitStream) -> Optional[int]:
    """Mutated cell value, or None. Bits are consumed only when the mutation fires."""
    if not ctx.eligible:
        return None
    bits = s.peek(3)
    hit = bits <= 1 if ctx.small < MUTATION_THRESHOLD else bits == 0
    if not hit:
        return None
    s.skip(3)
    return ctx.small // 2 + 16


def mix_from_stream(matron: GeneArray, sire: GeneArray, s: BitStream) -> GeneArray:
    m = swap_phase(matron, s)
    p = swap_phase(sire, s)
    child = []
    for i in range(N_CELLS):
        mutated = mutation_result(MutationContext(m[i], p[i], i), s)
        if mutated is not None:
            child.append(mutated)
        else:
            child.append(m[i] if s.read(1) == 1 else p[i])
    return GeneArray(tuple(child))


def mix_genes(matron: GeneArray, sire: GeneArray, seed) -> GeneArray:
    """Same result as mix_from_stream on a fresh BitStream, on plain ints.

    At most MAX_BITS_USED (216) bits are ever read, so the digest alone suffices.
    """
    x = int.from_bytes(as_digest(seed), "big")
    m, p = list(matron.cells), list(sire.cells)
    for cells in (m, p):
        for i in range(0, N_CELLS, GROUP_SIZE):
            for j in (2, 1, 0):
                if x & 3 == 0:
                    cells[i + j], cells[i + j + 1] = cells[i + j + 1], cells[i + j]
                x >>= 2
    child = []
    for i in range(N_CELLS):
        a, b = m[i], p[i]
        if i % GROUP_SIZE == 0 and (a ^ b) == 1:
            small = a & ~1  # the even one of the pair
            three = x & 7
            if three == 0 or (three == 1 and small < MUTATION_THRESHOLD):
                child.append(small // 2 + 16)
                x >>= 3
                continue
        child.append(a if x & 1 else b)
        x >>= 1
    return GeneArray(tuple(child))


# Vectorized kernel. Worst case consumption is 144 + 12*3 + 36 = 216 bits, so a
# batch never needs the SHA-256 extension and a plain (n, 256) bit matrix suffices.
MAX_BITS_USED = 2 * SWAP_BITS + N_GROUPS * 3 + (N_CELLS - N_GROUPS)


def digests_to_bits(digests: np.ndarray) -> np.ndarray:
    """(n, 32) big-endian digest bytes -> (256, n) uint8 bits; row k holds bit k (from the LSB) of every digest."""
    digests = np.asarray(digests, dtype=np.uint8)
    lsb_first = np.ascontiguousarray(digests.T[::-1])  # (32, n), byte 0 = least significant
    shifts = np.arange(8, dtype=np.uint8)[None, :, None]
    return ((lsb_first[:, None, :] >> shifts) & 1).reshape(256, -1)


def _group_orders() -> np.ndarray:
    """(8, 4) cell orders indexed by the packed swap decisions d2 | d1 << 1 | d0 << 2."""
    orders = np.empty((8, GROUP_SIZE), dtype=np.intp)
    for code in range(8):
        order = list(range(GROUP_SIZE))
        for bit, j in enumerate((2, 1, 0)):
            if code >> bit & 1:
                order[j], order[j + 1] = order[j + 1], order[j]
        orders[code] = order
    return orders


_GROUP_ORDERS = _group_orders()


def _swap_batch(parent: GeneArray, bits: np.ndarray, offset: int) -> np.ndarray:
    zero = (bits[offset : offset + SWAP_BITS : 2] | bits[offset + 1 : offset + SWAP_BITS : 2]) == 0  # (36, n)
    cells = np.empty((N_CELLS, bits.shape[1]), dtype=np.uint8)
    for g in range(N_GROUPS):
        d = zero[3 * g : 3 * g + 3]
        code = d[0] | (d[1].astype(np.uint8) << 1) | (d[2].astype(np.uint8) << 2)
        lut = np.asarray(parent.group(g), dtype=np.uint8)[_GROUP_ORDERS]  # (8, 4)
        for c in range(GROUP_SIZE):
            cells[GROUP_SIZE * g + c] = lut[:, c][code]
    return cells


def mix_genes_batch(matron: GeneArray, sire: GeneArray, bits: np.ndarray) -> np.ndarray:
    """Run the algorithm over a (256, n) bit matrix from digests_to_bits; returns (n, 48) child cells."""
    n = bits.shape[1]
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    m = _swap_batch(matron, bits, 0)
    p = _swap_batch(sire, bits, SWAP_BITS)
    flat = bits.ravel()
    child = np.empty((N_CELLS, n), dtype=np.uint8)
    # bit k of sample r sits at flat index k * n + r; until a mutation fires the
    # cursor is the same for every sample, so plain row slices suffice
    k = 2 * SWAP_BITS
    pos = None
    for i in range(N_CELLS):
        mi, pi = m[i], p[i]
        coin = bits[k] if pos is None else flat[pos]
        if i % GROUP_SIZE == 0:
            small = np.minimum(mi, pi)
            eligible = ((mi ^ pi) == 1) & (small % 2 == 0)
            if eligible.any():
                if pos is None:
                    pos = np.arange(k * n, (k + 1) * n, dtype=np.intp)
                b1, b2 = flat[pos + n], flat[pos + 2 * n]
                hit = eligible & (b1 == 0) & (b2 == 0) & ((small < MUTATION_THRESHOLD) | (coin == 0))
                child[i] = np.where(hit, small // 2 + 16, np.where(coin == 1, mi, pi))
                pos += n + 2 * n * hit
                k += 1
                continue
        child[i] = np.where(coin == 1, mi, pi)
        k += 1
        if pos is not None:
            pos += n
    return child.T
