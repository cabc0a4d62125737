"""Train/test partitioning over soundings, cruises, or fixed-length chunks.

Three unit shapes are supported: every sounding on its own (the classic
random split), whole cruises, and non-overlapping chunks of consecutive
soundings within a cruise (default length 100000), with a short final
remainder kept as its own unit.  Each unit lands in TEST independently
with probability ``test_fraction``; the decision for unit ``i`` is a pure
function of (seed, i) so parallel evaluation cannot change the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .corpus import Cruise

TRAIN = "TRAIN"
TEST = "TEST"


class Strategy(Enum):
    PER_EXAMPLE = "per-example"
    PER_CRUISE = "per-cruise"
    CHUNK = "chunk"


@dataclass(frozen=True)
class SplitSpec:
    strategy: Strategy
    test_fraction: float
    seed: int
    chunk_length: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0,1)")
        if self.strategy is Strategy.CHUNK:
            if self.chunk_length is None:
                object.__setattr__(self, "chunk_length", 100000)
            if self.chunk_length < 1:
                raise ValueError("chunk_length must be positive")
        elif self.chunk_length is not None:
            raise ValueError("chunk_length only applies to the CHUNK strategy")


@dataclass(frozen=True)
class Unit:
    """One atomic assignment unit: an inclusive seq range of a cruise."""

    cruise_id: str
    seq_start: int
    seq_end: int

    def __len__(self) -> int:
        return self.seq_end - self.seq_start + 1


@dataclass(frozen=True)
class SplitResult:
    train: frozenset[tuple[str, int]]
    test: frozenset[tuple[str, int]]
    unit_assignments: tuple[tuple[Unit, str], ...]


@dataclass(frozen=True)
class SplitStats:
    train_count: int
    test_count: int
    train_units: int
    test_units: int
    realized_test_fraction: float
    degenerate: bool


def _split_uniform(seed: int, index: np.ndarray) -> np.ndarray:
    """Uniform(0,1) per unit index via a splitmix64-style hash of (seed, i)."""
    z = (np.uint64(seed) + index.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15))
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _units(cruises: list[Cruise], spec: SplitSpec) -> list[Unit]:
    units: list[Unit] = []
    for cruise in sorted(cruises, key=lambda c: c.cruise_id):
        n = len(cruise)
        if spec.strategy is Strategy.PER_EXAMPLE:
            units.extend(Unit(cruise.cruise_id, i, i) for i in range(n))
        elif spec.strategy is Strategy.PER_CRUISE:
            units.append(Unit(cruise.cruise_id, 0, n - 1))
        else:
            length = spec.chunk_length or 100000
            for start in range(0, n, length):
                units.append(Unit(cruise.cruise_id, start, min(start + length, n) - 1))
    return units


def split(cruises: list[Cruise], spec: SplitSpec) -> SplitResult:
    """Assign every sounding to exactly one of TRAIN or TEST."""
    if not cruises:
        raise ValueError("cannot split an empty corpus")
    units = _units(cruises, spec)
    draws = _split_uniform(spec.seed, np.arange(len(units)))
    sides = np.where(draws < spec.test_fraction, TEST, TRAIN)
    train: list[tuple[str, int]] = []
    test: list[tuple[str, int]] = []
    for unit, side in zip(units, sides):
        members = [(unit.cruise_id, seq) for seq in range(unit.seq_start, unit.seq_end + 1)]
        (test if side == TEST else train).extend(members)
    return SplitResult(
        train=frozenset(train),
        test=frozenset(test),
        unit_assignments=tuple(zip(units, (str(s) for s in sides))),
    )


def split_stats(result: SplitResult) -> SplitStats:
    """Exact counts and the realized test fraction of a split."""
    n_train, n_test = len(result.train), len(result.test)
    units_train = sum(1 for _, side in result.unit_assignments if side == TRAIN)
    units_test = len(result.unit_assignments) - units_train
    return SplitStats(
        train_count=n_train,
        test_count=n_test,
        train_units=units_train,
        test_units=units_test,
        realized_test_fraction=n_test / (n_train + n_test),
        degenerate=n_train == 0 or n_test == 0,
    )


def save_split(result: SplitResult, path: str | Path) -> None:
    """Write the unit map as `cruise_id,seq_start,seq_end,side` rows."""
    lines = ["cruise_id,seq_start,seq_end,side"]
    ordered = sorted(result.unit_assignments, key=lambda u: (u[0].cruise_id, u[0].seq_start))
    for unit, side in ordered:
        lines.append(f"{unit.cruise_id},{unit.seq_start},{unit.seq_end},{side}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_split(path: str | Path) -> SplitResult:
    """Read a unit map back into a SplitResult."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "cruise_id,seq_start,seq_end,side":
        raise ValueError(f"{path}: not a split file")
    train: list[tuple[str, int]] = []
    test: list[tuple[str, int]] = []
    assignments: list[tuple[Unit, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4 or parts[3] not in (TRAIN, TEST):
            raise ValueError(f"{path} line {lineno}: malformed unit row")
        unit = Unit(parts[0], int(parts[1]), int(parts[2]))
        assignments.append((unit, parts[3]))
        members = [(unit.cruise_id, seq) for seq in range(unit.seq_start, unit.seq_end + 1)]
        (test if parts[3] == TEST else train).extend(members)
    return SplitResult(
        train=frozenset(train), test=frozenset(test), unit_assignments=tuple(assignments)
    )


def side_masks(cruises: list[Cruise], result: SplitResult) -> np.ndarray:
    """Boolean TEST mask aligned with soundings iterated cruise by cruise.

    Cruises iterate in the given order; True marks TEST membership.
    """
    test = result.test
    mask = np.empty(sum(len(c) for c in cruises), dtype=bool)
    pos = 0
    for cruise in cruises:
        for s in cruise.soundings:
            mask[pos] = (cruise.cruise_id, s.seq) in test
            pos += 1
    return mask
