"""Gene representation: 240-bit genes as 48 five-bit cells, plus Cattribute lookup."""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

N_CELLS = 48
CELL_BITS = 5
CELL_MAX = 31
GENE_BITS = N_CELLS * CELL_BITS
HEX_LEN = GENE_BITS // 4
GROUP_SIZE = 4
N_GROUPS = N_CELLS // GROUP_SIZE

_HEXDIGITS = set(string.hexdigits)


class GeneFormatError(ValueError):
    """Raised for malformed gene hex strings or out-of-range cells."""


@dataclass(frozen=True)
class GeneArray:
    cells: tuple[int, ...]

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        if len(cells) != N_CELLS:
            raise GeneFormatError(f"gene needs {N_CELLS} cells, got {len(cells)}")
        for i, c in enumerate(cells):
            if not 0 <= c <= CELL_MAX:
                raise GeneFormatError(f"cell {i} = {c} outside [0, {CELL_MAX}]")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def zeros(cls) -> GeneArray:
        return cls((0,) * N_CELLS)

    @classmethod
    def filled(cls, value: int) -> GeneArray:
        return cls((value,) * N_CELLS)

    @classmethod
    def from_hex(cls, text: str) -> GeneArray:
        return decode_gene(text)

    @classmethod
    def from_int(cls, value: int) -> GeneArray:
        if not 0 <= value < 1 << GENE_BITS:
            raise GeneFormatError("gene integer must fit in 240 bits")
        return cls(tuple((value >> (CELL_BITS * i)) & CELL_MAX for i in range(N_CELLS)))

    def to_int(self) -> int:
        out = 0
        for i, c in enumerate(self.cells):
            out |= c << (CELL_BITS * i)
        return out

    @property
    def hex(self) -> str:
        return encode_gene(self)

    def group(self, g: int) -> tuple[int, ...]:
        return self.cells[GROUP_SIZE * g : GROUP_SIZE * g + GROUP_SIZE]

    def replace(self, **cells: int) -> GeneArray:
        """Copy with selected cells changed, e.g. ``g.replace(c0=15, c36=23)``."""
        new = list(self.cells)
        for key, value in cells.items():
            new[int(key.lstrip("c"))] = value
        return GeneArray(tuple(new))

    def __getitem__(self, i):
        return self.cells[i]

    def __len__(self) -> int:
        return N_CELLS

    def __iter__(self) -> Iterator[int]:
        return iter(self.cells)


def decode_gene(text: str) -> GeneArray:
    """Parse a 60-character hex gene; cell ``i`` holds bits ``[5i, 5i+5)`` counted from the LSB."""
    if not isinstance(text, str) or len(text) != HEX_LEN or not set(text) <= _HEXDIGITS:
        raise GeneFormatError(f"gene must be exactly {HEX_LEN} hex characters")
    return GeneArray.from_int(int(text, 16))


def encode_gene(g: GeneArray) -> str:
    return format(g.to_int(), f"0{HEX_LEN}x")


@dataclass(frozen=True)
class Cattribute:
    name: str
    constraints: frozenset[tuple[int, int]]

    def __post_init__(self):
        cons = frozenset((int(i), int(v)) for i, v in self.constraints)
        if not cons:
            raise ValueError(f"Cattribute {self.name!r} has no constraints")
        cells = [i for i, _ in cons]
        if len(set(cells)) != len(cells):
            raise ValueError(f"Cattribute {self.name!r} constrains a cell twice")
        for i, v in cons:
            if not (0 <= i < N_CELLS and 0 <= v <= CELL_MAX):
                raise ValueError(f"Cattribute {self.name!r}: bad constraint ({i}, {v})")
        object.__setattr__(self, "constraints", cons)

    def matches(self, g: GeneArray) -> bool:
        return all(g.cells[i] == v for i, v in self.constraints)

    def groups(self) -> dict[int, dict[int, int]]:
        """Constraints bucketed by cell group: ``{group: {offset: value}}``."""
        out: dict[int, dict[int, int]] = {}
        for i, v in sorted(self.constraints):
            out.setdefault(i // GROUP_SIZE, {})[i % GROUP_SIZE] = v
        return out


class CattributeRegistry:
    def __init__(self, entries: Iterable[Cattribute] = ()):
        self.entries: list[Cattribute] = []
        self._by_name: dict[str, Cattribute] = {}
        for c in entries:
            self.add(c)

    def add(self, c: Cattribute) -> None:
        if c.name in self._by_name:
            raise ValueError(f"duplicate Cattribute name {c.name!r}")
        self.entries.append(c)
        self._by_name[c.name] = c

    def without(self, name: str) -> CattributeRegistry:
        return CattributeRegistry(c for c in self.entries if c.name != name)

    def __getitem__(self, name: str) -> Cattribute:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[Cattribute]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.entries]

    @classmethod
    def from_json(cls, data: list[dict]) -> CattributeRegistry:
        return cls(Cattribute(d["name"], frozenset(tuple(p) for p in d["constraints"])) for d in data)

    def to_json(self) -> list[dict]:
        return [{"name": c.name, "constraints": [list(p) for p in sorted(c.constraints)]} for c in self.entries]

    @classmethod
    def load(cls, path: str | Path) -> CattributeRegistry:
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def default_registry() -> CattributeRegistry:
    """The bundled registry: "driver", "dominator" and a few synthetic entries."""
    text = resources.files("kittylab.data").joinpath("cattributes.json").read_text()
    return CattributeRegistry.from_json(json.loads(text))


def cattributes(g: GeneArray, reg: CattributeRegistry | None = None) -> set[str]:
    reg = default_registry() if reg is None else reg
    return {c.name for c in reg if c.matches(g)}
