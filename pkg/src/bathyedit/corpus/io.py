"""Reading and writing the sounding interchange file.

Format: UTF-8 text, LF line endings.  One header line

    cruise_id,region_id,seq,time,lat,lon,depth,f0,...,f{F-1},label

followed by one comma-separated row per sounding, sorted by
(cruise_id, seq).  Floats are serialized as shortest round-trip decimals,
labels are ``G`` or ``B``.  This file is the interchange contract between
the generator, the splitter, the trainer and the service.
"""

from __future__ import annotations

import re
from pathlib import Path

from .types import Cruise, CorpusError, LABELS, Sounding, feature_count, validate_corpus

_FIXED_COLUMNS = ("cruise_id", "region_id", "seq", "time", "lat", "lon", "depth")


class CorpusFormatError(ValueError):
    """A sounding file is malformed; carries the offending 1-based line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _header(f_count: int) -> str:
    names = list(_FIXED_COLUMNS) + [f"f{i}" for i in range(f_count)] + ["label"]
    return ",".join(names)


def save_corpus(cruises: list[Cruise], path: str | Path) -> None:
    """Write a corpus file; same corpus always yields identical bytes."""
    validate_corpus(cruises)
    f_count = feature_count(cruises)
    lines = [_header(f_count)]
    for cruise in sorted(cruises, key=lambda c: c.cruise_id):
        for s in cruise.soundings:
            parts = [
                cruise.cruise_id,
                cruise.region_id,
                str(s.seq),
                repr(s.time),
                repr(s.lat),
                repr(s.lon),
                repr(s.depth),
            ]
            parts.extend(repr(v) for v in s.features)
            parts.append(s.label)
            lines.append(",".join(parts))
    data = "\n".join(lines) + "\n"
    Path(path).write_text(data, encoding="utf-8", newline="\n")


def _parse_header(line: str) -> int:
    cols = line.split(",")
    if tuple(cols[: len(_FIXED_COLUMNS)]) != _FIXED_COLUMNS or cols[-1] != "label":
        raise CorpusFormatError(f"unrecognized header {line!r}", line=1)
    f_cols = cols[len(_FIXED_COLUMNS) : -1]
    for i, name in enumerate(f_cols):
        if not re.fullmatch(rf"f{i}", name):
            raise CorpusFormatError(f"unexpected feature column {name!r}", line=1)
    return len(f_cols)


def load_corpus(path: str | Path) -> list[Cruise]:
    """Read a corpus file back into cruises, validating every invariant.

    Raises CorpusFormatError naming the offending line for malformed rows,
    seq gaps or duplicates, time regressions, inconsistent feature counts
    and out-of-order rows.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusFormatError("empty file: missing header", line=1)
    f_count = _parse_header(lines[0])
    n_cols = len(_FIXED_COLUMNS) + f_count + 1

    cruises: list[Cruise] = []
    done_ids: set[str] = set()
    current: list[Sounding] = []
    current_id: str | None = None
    current_region: str | None = None

    def finish() -> None:
        if current_id is not None:
            cruises.append(
                Cruise(
                    cruise_id=current_id,
                    region_id=current_region or "",
                    soundings=tuple(current),
                )
            )
            done_ids.add(current_id)

    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != n_cols:
            raise CorpusFormatError(
                f"expected {n_cols} columns, got {len(parts)}", line=lineno
            )
        cruise_id, region_id = parts[0], parts[1]
        try:
            seq = int(parts[2])
            time = float(parts[3])
            lat, lon, depth = (float(v) for v in parts[4:7])
            features = tuple(float(v) for v in parts[7 : 7 + f_count])
        except ValueError as exc:
            raise CorpusFormatError(f"unparseable value ({exc})", line=lineno) from exc
        label = parts[-1]
        if label not in LABELS:
            raise CorpusFormatError(f"unknown label {label!r}", line=lineno)

        if cruise_id != current_id:
            if cruise_id in done_ids:
                raise CorpusFormatError(
                    f"rows for cruise {cruise_id!r} are not contiguous", line=lineno
                )
            if current_id is not None and cruise_id < current_id:
                raise CorpusFormatError(
                    f"rows not sorted by cruise_id at {cruise_id!r}", line=lineno
                )
            finish()
            current = []
            current_id = cruise_id
            current_region = region_id
        elif region_id != current_region:
            raise CorpusFormatError(
                f"cruise {cruise_id!r} switches region to {region_id!r}", line=lineno
            )

        expected_seq = len(current)
        if seq != expected_seq:
            kind = "duplicate or out-of-order" if seq < expected_seq else "gap in"
            raise CorpusFormatError(
                f"{kind} seq for cruise {cruise_id!r}: expected "
                f"{expected_seq}, got {seq}",
                line=lineno,
            )
        if current and time < current[-1].time:
            raise CorpusFormatError(
                f"time regresses within cruise {cruise_id!r}", line=lineno
            )
        try:
            current.append(
                Sounding(
                    cruise_id=cruise_id,
                    seq=seq,
                    time=time,
                    lat=lat,
                    lon=lon,
                    depth=depth,
                    features=features,
                    label=label,
                )
            )
        except CorpusError as exc:
            raise CorpusFormatError(str(exc), line=lineno) from exc

    finish()
    validate_corpus(cruises)
    return cruises
