"""Synthetic sounding corpus generator.

Reproduces the two phenomena the toolkit is built to expose:

* sequentiality — labels form long good/bad runs (two-state Markov chain),
  and the proxy channels (time of day, lat, lon) vary smoothly along the
  track, so neighbors of a sounding give its label away;
* diversity — each region corrupts bad depths in its own way (sign,
  scale, and temporal shape differ), so a model trained on one region
  ranks another region's soundings poorly.

Generation is a pure function of the GenSpec: every cruise draws from an
RNG substream keyed by (seed, region index, cruise index), so output is
identical regardless of generation order.
"""

from __future__ import annotations

import numpy as np

from .types import BAD, Cruise, GOOD, GenSpec, Sounding

# Fixed generator constants.  Regions deliberately share one survey area so
# position alone cannot identify the region a sounding came from.
SIGMA_GOOD = 20.0  # good-measurement depth noise, meters
CORRUPT_BIAS = 1.0  # corrupted-residual mean, in units of scale * SIGMA_GOOD
REGION_BOX_DEG = 2.5  # cruise start offsets around the shared survey center
STEP_DEG = 0.00018  # ~20 m of track per sounding
TURN_SIGMA = 0.03  # heading random-walk increment, radians
DT_SECONDS = 4.0  # sampling cadence along the track
TIME_SPAN = 10 * 365 * 86400.0  # cruise start times spread over a decade
MEDIAN_WINDOW = 21

FEATURE_NAMES = (
    "depth_residual",
    "depth_gradient",
    "median_abs_dev",
    "time_of_day",
    "lat",
    "lon",
)
PROXY_FEATURES = (3, 4, 5)  # indices of time-of-day, lat, lon

# Corruption shape per region, cycling by region index.
_MODES = ("spike_pos", "spike_neg", "oscillating", "drift")


def _label_runs(
    rng: np.random.Generator, n: int, bad_fraction: float, mean_bad_run: float
) -> list[tuple[int, int, bool]]:
    """Alternating (start, length, is_bad) runs of a two-state Markov chain.

    Bad dwell times are geometric with mean ``mean_bad_run``; the chain's
    stationary bad probability equals ``bad_fraction`` whenever
    bad_fraction / (mean_bad_run * (1 - bad_fraction)) <= 1.
    """
    if bad_fraction <= 0.0:
        return [(0, n, False)]
    if bad_fraction >= 1.0:
        return [(0, n, True)]
    q_bg = 1.0 / mean_bad_run
    q_gb = min(1.0, bad_fraction / (mean_bad_run * (1.0 - bad_fraction)))
    runs: list[tuple[int, int, bool]] = []
    pos = 0
    is_bad = bool(rng.random() < bad_fraction)
    while pos < n:
        q = q_bg if is_bad else q_gb
        length = min(int(rng.geometric(q)), n - pos)
        runs.append((pos, length, is_bad))
        pos += length
        is_bad = not is_bad
    return runs


def _corrupt_run(
    rng: np.random.Generator, length: int, scale: float, mode: str
) -> np.ndarray:
    """Depth residuals for one bad run, meters."""
    amp = scale * SIGMA_GOOD
    if mode == "spike_pos" or mode == "spike_neg":
        sign = 1.0 if mode == "spike_pos" else -1.0
        return sign * amp * (CORRUPT_BIAS + rng.normal(0.0, 1.0, length))
    if mode == "oscillating":
        alt = np.where(np.arange(length) % 2 == 0, 1.0, -1.0)
        return alt * amp * (CORRUPT_BIAS + rng.normal(0.0, 1.0, length))
    if mode == "drift":
        sign = 1.0 if rng.random() < 0.5 else -1.0
        ramp = (np.arange(length) + 1.0) / length
        return sign * 2.0 * CORRUPT_BIAS * amp * ramp + rng.normal(
            0.0, 0.25 * amp, length
        )
    raise ValueError(f"unknown corruption mode {mode!r}")


def _rolling_median(values: np.ndarray, window: int) -> np.ndarray:
    """Rolling median with the window clamped to the array at both ends."""
    n = len(values)
    half = window // 2
    if n <= window:
        return np.array([np.median(values[max(0, i - half) : i + half + 1]) for i in range(n)])
    out = np.empty(n)
    interior = np.lib.stride_tricks.sliding_window_view(values, window)
    out[half : n - half] = np.median(interior, axis=1)
    for i in range(half):
        out[i] = np.median(values[: i + half + 1])
        out[n - 1 - i] = np.median(values[n - 1 - i - half :])
    return out


def track_features(
    depth: np.ndarray,
    floor: np.ndarray,
    time: np.ndarray,
    lat: np.ndarray,
    lon: np.ndarray,
) -> np.ndarray:
    """Assemble the per-sounding feature matrix for one cruise.

    Channels 0-2 are physically informative (residual against the smooth
    seafloor, along-track gradient, deviation from the rolling median);
    channels 3-5 are the positional proxies that enable label leakage.
    """
    n = len(depth)
    gradient = np.gradient(depth) if n > 1 else np.zeros(1)
    med_dev = np.abs(depth - _rolling_median(depth, MEDIAN_WINDOW))
    return np.column_stack(
        [depth - floor, gradient, med_dev, np.mod(time, 86400.0), lat, lon]
    )


def _generate_cruise(spec: GenSpec, region: int, cruise: int) -> Cruise:
    rng = np.random.default_rng([spec.seed, region, cruise])
    n = spec.cruise_length
    mode = _MODES[region % len(_MODES)]
    scale = spec.noise_scale_per_region[region]

    # Smooth ship track: heading random walk from a random start in the box.
    lat0 = rng.uniform(-REGION_BOX_DEG, REGION_BOX_DEG)
    lon0 = rng.uniform(-REGION_BOX_DEG, REGION_BOX_DEG)
    heading = rng.uniform(0.0, 2.0 * np.pi) + np.concatenate(
        [[0.0], np.cumsum(rng.normal(0.0, TURN_SIGMA, n - 1))]
    )
    lat = lat0 + np.concatenate([[0.0], np.cumsum(STEP_DEG * np.cos(heading[:-1]))])
    lon = lon0 + np.concatenate([[0.0], np.cumsum(STEP_DEG * np.sin(heading[:-1]))])
    time = rng.uniform(0.0, TIME_SPAN) + DT_SECONDS * np.arange(n)

    # Smooth synthetic seafloor along the track.
    k1, k2 = rng.uniform(1.0, 3.0), rng.uniform(3.0, 8.0)
    ph1, ph2 = rng.uniform(0.0, 2.0 * np.pi, 2)
    x = np.arange(n) / n
    floor = (
        3000.0
        + 800.0 * np.sin(2.0 * np.pi * k1 * x + ph1)
        + 400.0 * np.sin(2.0 * np.pi * k2 * x + ph2)
    )

    runs = _label_runs(
        rng, n, spec.bad_fraction_per_region[region], spec.mean_bad_run_length
    )
    residual = rng.normal(0.0, SIGMA_GOOD, n)
    labels = np.zeros(n, dtype=bool)
    for start, length, is_bad in runs:
        if is_bad:
            labels[start : start + length] = True
            residual[start : start + length] = _corrupt_run(rng, length, scale, mode)
    depth = floor + residual

    features = track_features(depth, floor, time, lat, lon)
    cruise_id = f"R{region:02d}C{cruise:03d}"
    # tolist() up front: much faster than per-element float() over large cruises
    rows = zip(
        time.tolist(), lat.tolist(), lon.tolist(), depth.tolist(),
        features.tolist(), labels.tolist(),
    )
    soundings = tuple(
        Sounding(
            cruise_id=cruise_id,
            seq=i,
            time=t,
            lat=la,
            lon=lo,
            depth=d,
            features=tuple(f),
            label=BAD if bad else GOOD,
        )
        for i, (t, la, lo, d, f, bad) in enumerate(rows)
    )
    return Cruise(cruise_id=cruise_id, region_id=f"R{region:02d}", soundings=soundings)


def generate_corpus(spec: GenSpec) -> list[Cruise]:
    """Generate a deterministic synthetic corpus from the GenSpec."""
    return [
        _generate_cruise(spec, r, c)
        for r in range(spec.region_count)
        for c in range(spec.cruises_per_region)
    ]


def zero_proxy_features(cruises: list[Cruise]) -> list[Cruise]:
    """Copy of the corpus with the positional proxy channels zeroed.

    Used to ablate leakage: with these channels gone, the three split
    strategies should score alike.
    """
    out = []
    for cruise in cruises:
        soundings = tuple(
            Sounding(
                cruise_id=s.cruise_id,
                seq=s.seq,
                time=s.time,
                lat=s.lat,
                lon=s.lon,
                depth=s.depth,
                features=tuple(
                    0.0 if i in PROXY_FEATURES else v
                    for i, v in enumerate(s.features)
                ),
                label=s.label,
            )
            for s in cruise.soundings
        )
        out.append(
            Cruise(
                cruise_id=cruise.cruise_id,
                region_id=cruise.region_id,
                soundings=soundings,
            )
        )
    return out
