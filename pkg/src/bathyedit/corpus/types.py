"""Core data model for ship-track sounding corpora."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

GOOD = "G"
BAD = "B"
LABELS = (GOOD, BAD)


class CorpusError(ValueError):
    """A corpus value violates one of its structural invariants."""


@dataclass(frozen=True, slots=True)
class Sounding:
    """One echo-sounder measurement along a ship track.

    ``seq`` is the 0-based position along the track, ``time`` seconds since
    epoch, ``depth`` meters positive downward.  ``features`` is the
    fixed-length input vector for the classifier and ``label`` is ``"G"``
    (good) or ``"B"`` (bad).
    """

    cruise_id: str
    seq: int
    time: float
    lat: float
    lon: float
    depth: float
    features: tuple[float, ...]
    label: str

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise CorpusError(f"seq must be non-negative, got {self.seq}")
        if not -90.0 <= self.lat <= 90.0:
            raise CorpusError(f"lat out of range: {self.lat}")
        if not -180.0 <= self.lon < 180.0:
            raise CorpusError(f"lon out of range: {self.lon}")
        if self.label not in LABELS:
            raise CorpusError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True, slots=True)
class Cruise:
    """An ordered, gap-free sequence of soundings from one ship track."""

    cruise_id: str
    region_id: str
    soundings: tuple[Sounding, ...]

    def __len__(self) -> int:
        return len(self.soundings)


@dataclass(frozen=True, slots=True)
class Region:
    """Per-region summary: which cruises it owns and its bad-label fraction."""

    region_id: str
    cruise_ids: frozenset[str]
    bad_fraction: float


@dataclass(frozen=True)
class GenSpec:
    """Parameters for the synthetic corpus generator.

    ``bad_fraction_per_region`` and ``noise_scale_per_region`` must have one
    entry per region.  ``mean_bad_run_length`` controls how long stretches of
    consecutive bad labels are on average.
    """

    region_count: int
    cruises_per_region: int
    cruise_length: int
    bad_fraction_per_region: tuple[float, ...]
    mean_bad_run_length: float
    noise_scale_per_region: tuple[float, ...]
    seed: int

    def __post_init__(self) -> None:
        if self.region_count < 1:
            raise CorpusError("region_count must be >= 1")
        if self.cruises_per_region < 1:
            raise CorpusError("cruises_per_region must be >= 1")
        if self.cruise_length < 1:
            raise CorpusError("cruise_length must be >= 1")
        if self.mean_bad_run_length <= 0:
            raise CorpusError("mean_bad_run_length must be positive")
        if not 0 <= self.seed < 2**64:
            raise CorpusError("seed must be a 64-bit unsigned integer")
        object.__setattr__(
            self, "bad_fraction_per_region", tuple(self.bad_fraction_per_region)
        )
        object.__setattr__(
            self, "noise_scale_per_region", tuple(self.noise_scale_per_region)
        )
        for name in ("bad_fraction_per_region", "noise_scale_per_region"):
            values = getattr(self, name)
            if len(values) != self.region_count:
                raise CorpusError(f"{name} must have length region_count")
        for f in self.bad_fraction_per_region:
            if not 0.0 <= f <= 1.0:
                raise CorpusError(f"bad fraction out of [0,1]: {f}")
        for s in self.noise_scale_per_region:
            if s <= 0:
                raise CorpusError(f"noise scale must be positive: {s}")


def feature_count(cruises: list[Cruise]) -> int:
    """Feature-vector length shared by every sounding, 0 for an empty corpus."""
    for cruise in cruises:
        if cruise.soundings:
            return len(cruise.soundings[0].features)
    return 0


def validate_corpus(cruises: list[Cruise]) -> None:
    """Check every Sounding/Cruise invariant; raise CorpusError on violation."""
    f_count = feature_count(cruises)
    seen_ids: set[str] = set()
    for cruise in cruises:
        if not cruise.soundings:
            raise CorpusError(f"cruise {cruise.cruise_id!r} is empty")
        if cruise.cruise_id in seen_ids:
            raise CorpusError(f"duplicate cruise_id {cruise.cruise_id!r}")
        seen_ids.add(cruise.cruise_id)
        prev_time = -math.inf
        for i, s in enumerate(cruise.soundings):
            if s.cruise_id != cruise.cruise_id:
                raise CorpusError(
                    f"sounding in cruise {cruise.cruise_id!r} carries "
                    f"cruise_id {s.cruise_id!r}"
                )
            if s.seq != i:
                raise CorpusError(
                    f"cruise {cruise.cruise_id!r}: expected seq {i}, got {s.seq}"
                )
            if s.time < prev_time:
                raise CorpusError(
                    f"cruise {cruise.cruise_id!r}: time regresses at seq {s.seq}"
                )
            prev_time = s.time
            if len(s.features) != f_count:
                raise CorpusError(
                    f"cruise {cruise.cruise_id!r} seq {s.seq}: feature count "
                    f"{len(s.features)} != {f_count}"
                )


def region_stats(cruises: list[Cruise]) -> list[Region]:
    """One Region per distinct region_id with its exact bad fraction."""
    totals: dict[str, int] = {}
    bads: dict[str, int] = {}
    members: dict[str, set[str]] = {}
    for cruise in cruises:
        members.setdefault(cruise.region_id, set()).add(cruise.cruise_id)
        totals[cruise.region_id] = totals.get(cruise.region_id, 0) + len(cruise)
        bads[cruise.region_id] = bads.get(cruise.region_id, 0) + sum(
            1 for s in cruise.soundings if s.label == BAD
        )
    return [
        Region(
            region_id=rid,
            cruise_ids=frozenset(members[rid]),
            bad_fraction=bads[rid] / totals[rid],
        )
        for rid in sorted(totals)
    ]
