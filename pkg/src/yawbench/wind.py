"""Wind time series: log ingestion, train/test splitting, speed standardization,
and statistically matched synthetic generation.

Series are 1-second samples of wind direction (degrees, [0, 360)) and wind
speed (m/s, >= 0). The synthetic generator superimposes a mean-reverting
direction process on deterministic ramp events and matches the requested mean
and standard deviation of the realized series exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .power import wrap_to_360

CSV_HEADER = ("t", "phi_deg", "v_ms")


class WindDataError(ValueError):
    """Malformed, inconsistent, or degenerate wind data."""


class WindSample(NamedTuple):
    t: int      # seconds since the start of the series
    phi: float  # wind direction, degrees in [0, 360)
    v: float    # wind speed, m/s


@dataclass(frozen=True, eq=False)
class WindSeries:
    """Uniform 1 s wind log. Immutable after construction."""

    t: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    source: str = "synthetic"  # "real" | "synthetic"
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        phi = np.asarray(self.phi, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if not (t.ndim == phi.ndim == v.ndim == 1):
            raise WindDataError("series columns must be one-dimensional")
        if not (len(t) == len(phi) == len(v)):
            raise WindDataError("series columns must have equal length")
        if len(t) < 1:
            raise WindDataError("series must hold at least one sample")
        gaps = np.diff(t)
        if np.any(gaps != 1):
            bad = int(t[1:][gaps != 1][0])
            raise WindDataError(f"non-uniform spacing at t={bad}")
        if not np.all(np.isfinite(phi)) or np.any(phi < 0.0) or np.any(phi >= 360.0):
            raise WindDataError("wind direction must be finite and in [0, 360)")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise WindDataError("wind speed must be finite and >= 0")
        for name, arr in (("t", t), ("phi", phi), ("v", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> WindSample:
        return WindSample(int(self.t[i]), float(self.phi[i]), float(self.v[i]))

    @property
    def duration_s(self) -> int:
        return len(self)

    def slice_samples(self, start: int, stop: int) -> "WindSeries":
        return WindSeries(
            self.t[start:stop].copy(),
            self.phi[start:stop].copy(),
            self.v[start:stop].copy(),
            source=self.source,
            label=self.label,
        )

    def equals(self, other: "WindSeries") -> bool:
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.phi, other.phi)
            and np.array_equal(self.v, other.v)
        )


def load_series(path, source: str = "real", label: str = "") -> WindSeries:
    """Read a wind log CSV with header ``t,phi_deg,v_ms`` at uniform 1 s spacing.

    Directions are normalized into [0, 360). Raises WindDataError with the
    offending line number on malformed rows, on negative speeds, and on
    non-uniform timestamps.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"wind log not found: {path}")
    ts: list[int] = []
    phis: list[float] = []
    vs: list[float] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(s.strip() for s in header) != CSV_HEADER:
            raise WindDataError(
                f"{path}: expected header {','.join(CSV_HEADER)!r}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise WindDataError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                t_raw = float(row[0])
                phi = float(row[1])
                v = float(row[2])
            except ValueError as exc:
                raise WindDataError(f"{path}: line {lineno}: could not parse row: {exc}") from exc
            if not t_raw.is_integer():
                raise WindDataError(f"{path}: line {lineno}: timestamp must be an integer second")
            if not math.isfinite(phi) or not math.isfinite(v):
                raise WindDataError(f"{path}: line {lineno}: non-finite value")
            if v < 0:
                raise WindDataError(f"{path}: line {lineno}: negative wind speed v={v}")
            ts.append(int(t_raw))
            phis.append(wrap_to_360(phi))
            vs.append(v)
    if len(ts) < 2:
        raise WindDataError(f"{path}: series too short: {len(ts)} samples")
    return WindSeries(np.array(ts), np.array(phis), np.array(vs), source=source, label=label or path.stem)


def save_series(series: WindSeries, path) -> None:
    """Write a wind log CSV in the format read back by load_series."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(",".join(CSV_HEADER) + "\n")
        for i in range(len(series)):
            f.write(f"{int(series.t[i])},{float(series.phi[i])!r},{float(series.v[i])!r}\n")


def split_train_test(series: WindSeries) -> tuple[WindSeries, WindSeries]:
    """First half (floor(n/2) samples) for training, the remainder for testing."""
    n = len(series)
    if n < 2:
        raise WindDataError(f"series too short to split: {n} samples")
    cut = n // 2
    return series.slice_samples(0, cut), series.slice_samples(cut, n)


@dataclass(frozen=True)
class Standardizer:
    """Scales wind speed by a positive divisor fitted on the training split,
    so the training-split mean speed maps to 1 and the result is never negative."""

    scale: float

    def __post_init__(self):
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise WindDataError(f"standardizer scale must be positive, got {self.scale}")

    def standardize(self, v):
        return np.asarray(v, dtype=float) / self.scale if np.ndim(v) else float(v) / self.scale


def fit_standardizer(train: WindSeries) -> Standardizer:
    mean = float(np.mean(train.v))
    if mean <= 0.0:
        raise WindDataError("degenerate standardizer: training-split mean wind speed is zero")
    return Standardizer(scale=mean)


class Ramp(NamedTuple):
    """Deterministic direction change: a linear offset from 0 at ``start_s`` to
    ``magnitude_deg`` at ``end_s``, held afterwards."""

    start_s: float
    end_s: float
    magnitude_deg: float


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the synthetic wind generator.

    ``dir_std_deg`` is the target standard deviation of the realized direction
    series including ramp events; the mean-reverting component is scaled to
    fill whatever variance the ramps do not account for.
    """

    length_s: int
    dir_mean_deg: float
    dir_std_deg: float
    reversion_rate: float = 0.001  # per-second pull toward the mean, in (0, 1]
    ramps: tuple[Ramp, ...] = ()
    speed_mean_ms: float = 8.2
    speed_std_ms: float = 1.0

    def __post_init__(self):
        if self.length_s < 2:
            raise WindDataError(f"length_s must be at least 2, got {self.length_s}")
        if self.dir_std_deg < 0:
            raise WindDataError(f"dir_std_deg must be >= 0, got {self.dir_std_deg}")
        if self.speed_std_ms < 0:
            raise WindDataError(f"speed_std_ms must be >= 0, got {self.speed_std_ms}")
        if self.speed_mean_ms < 0:
            raise WindDataError(f"speed_mean_ms must be >= 0, got {self.speed_mean_ms}")
        if not (0.0 < self.reversion_rate <= 1.0):
            raise WindDataError(f"reversion_rate must be in (0, 1], got {self.reversion_rate}")
        ramps = tuple(Ramp(*r) for r in self.ramps)
        for r in ramps:
            if not (0 <= r.start_s < r.end_s <= self.length_s):
                raise WindDataError(f"ramp outside the series or empty: {r}")
        object.__setattr__(self, "ramps", ramps)

    def to_dict(self) -> dict:
        return {
            "length_s": self.length_s,
            "dir_mean_deg": self.dir_mean_deg,
            "dir_std_deg": self.dir_std_deg,
            "reversion_rate": self.reversion_rate,
            "ramps": [list(r) for r in self.ramps],
            "speed_mean_ms": self.speed_mean_ms,
            "speed_std_ms": self.speed_std_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        d = dict(d)
        d["ramps"] = tuple(Ramp(*r) for r in d.get("ramps", ()))
        return cls(**d)


def _matched_ar1(rng: np.random.Generator, n: int, a: float) -> np.ndarray:
    """AR(1) deviations normalized to sample mean 0 and sample std 1.

    Tails are clipped at ~3.3 sigma so a series centered tens of degrees from
    the 0/360 seam cannot wrap, which would corrupt arithmetic statistics.
    """
    eps = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = 0.0
    keep = 1.0 - a
    for i in range(1, n):
        x[i] = keep * x[i - 1] + eps[i]
    x -= x.mean()
    s = x.std()
    if s == 0.0:
        return np.zeros(n)
    x /= s
    x = np.clip(x, -3.3, 3.3)
    x -= x.mean()
    x /= x.std()
    return x


def _ramp_offsets(ramps: tuple[Ramp, ...], n: int) -> np.ndarray:
    t = np.arange(n, dtype=float)
    o = np.zeros(n)
    for r in ramps:
        o += np.interp(t, [r.start_s, r.end_s], [0.0, r.magnitude_deg])
    return o


def generate_synthetic(spec: GeneratorSpec, seed: int) -> WindSeries:
    """Generate a wind series matching ``spec`` exactly in direction mean/std.

    Deterministic for a fixed (spec, seed): the same inputs reproduce the same
    series bit for bit.
    """
    rng = np.random.default_rng(seed)
    n = spec.length_s
    t = np.arange(n, dtype=np.int64)

    offsets = _ramp_offsets(spec.ramps, n)
    oc = offsets - offsets.mean()
    var_oc = float(np.mean(oc * oc))
    target_var = spec.dir_std_deg**2

    if spec.dir_std_deg > 0:
        dev = _matched_ar1(rng, n, spec.reversion_rate)
    else:
        dev = np.zeros(n)
    cov = float(np.mean(dev * oc))
    disc = cov * cov + target_var - var_oc
    if disc < 0:
        raise WindDataError(
            f"ramps account for more variance ({var_oc:.2f}) than dir_std_deg allows ({target_var:.2f})"
        )
    b = -cov + math.sqrt(disc)
    phi = spec.dir_mean_deg + b * dev + oc
    if np.any(phi < 0.0) or np.any(phi >= 360.0):
        # Wrapping would silently break the matched statistics; refuse instead.
        raise WindDataError(
            "generated direction crosses the 0/360 seam; move dir_mean_deg away from it "
            "or reduce dir_std_deg / ramp magnitudes"
        )

    if spec.speed_std_ms > 0:
        sdev = _matched_ar1(rng, n, spec.reversion_rate)
    else:
        sdev = np.zeros(n)
    v = np.clip(spec.speed_mean_ms + spec.speed_std_ms * sdev, 0.0, None)

    return WindSeries(t, phi, v, source="synthetic")


def steady_preset(length_s: int = 21000) -> GeneratorSpec:
    """Steady-direction regime: mean 34.1 deg, std 9.7 deg, no ramp events."""
    return GeneratorSpec(
        length_s=length_s,
        dir_mean_deg=34.1,
        dir_std_deg=9.7,
        reversion_rate=0.001,
        ramps=(),
        speed_mean_ms=8.2,
        speed_std_ms=1.0,
    )


def variable_preset(length_s: int = 21000) -> GeneratorSpec:
    """Variable regime: mean 41.4 deg, std 11.6 deg, with two windows of fast
    large-magnitude direction change (10000-12500 s and 15000-20000 s)."""
    if length_s < 20000:
        raise WindDataError("variable preset needs at least 20000 s to place its ramps")
    return GeneratorSpec(
        length_s=length_s,
        dir_mean_deg=41.4,
        dir_std_deg=11.6,
        reversion_rate=0.001,
        ramps=(
            Ramp(10200.0, 11200.0, 25.0),
            Ramp(11400.0, 12400.0, -25.0),
            Ramp(15200.0, 17000.0, 30.0),
            Ramp(17600.0, 19800.0, -30.0),
        ),
        speed_mean_ms=8.2,
        speed_std_ms=1.0,
    )


def constant_preset(length_s: int = 2000, dir_deg: float = 34.1, v_ms: float = 8.2) -> GeneratorSpec:
    """Degenerate regime: constant direction and speed."""
    return GeneratorSpec(
        length_s=length_s,
        dir_mean_deg=dir_deg,
        dir_std_deg=0.0,
        reversion_rate=0.001,
        ramps=(),
        speed_mean_ms=v_ms,
        speed_std_ms=0.0,
    )


PRESETS = {
    "steady": steady_preset,
    "variable": variable_preset,
    "constant": constant_preset,
}
