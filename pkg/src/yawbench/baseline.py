"""Conventional yaw control: a simulated cumulative-error threshold controller
and a replay baseline reconstructed from recorded nacelle positions.

The simulated controller runs a fast inner loop (1 s by default): it integrates
|yaw error| over time while idle, and once the accumulator crosses the
threshold it turns toward the mean wind direction of a short trailing window,
at the fixed yaw rate, until within a deadband of that target. The accumulator
resets when an actuation is armed and does not accrue while yawing. Results
are resampled onto the control-cycle grid used by every other controller.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .env import CycleTrace, EnvConfig, cycle_wind, n_cycles
from .power import TurbineParams, circular_mean_deg, power_with_misalignment, wrap_angle, wrap_to_360, yaw_error
from .wind import WindDataError, WindSeries

# Numerical floor under which the remaining turn is treated as reached even
# with a zero deadband; avoids chasing float residue at the target.
_STOP_FLOOR_DEG = 1e-9


@dataclass(frozen=True)
class CycaConfig:
    inner_period: float = 1.0     # seconds between controller ticks
    threshold: float = 900.0      # deg*s of accumulated |yaw error| that triggers a turn
    target_window: float = 30.0   # seconds of trailing wind-direction averaging
    stop_deadband: float = 1.0    # deg; stop turning once within this of the target

    def __post_init__(self):
        ip = self.inner_period
        if ip <= 0 or float(ip) != int(ip):
            raise ValueError(f"inner_period must be a positive whole number of seconds, got {ip}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.target_window < self.inner_period:
            raise ValueError("target_window must be at least one inner_period")
        if self.stop_deadband < 0:
            raise ValueError(f"stop_deadband must be >= 0, got {self.stop_deadband}")


def run_cyca_s(
    series: WindSeries,
    cfg: CycaConfig,
    tp: TurbineParams,
    init_theta: float,
    cycle_period: float = 10.0,
    return_inner: bool = False,
):
    """Simulate the threshold controller over ``series``.

    Returns the per-cycle trace; with ``return_inner=True`` also a dict of
    per-second arrays (theta, accumulator, yawing flag) for inspection.
    """
    n = len(series)
    p = int(cycle_period)
    if p <= 0 or float(cycle_period) != p:
        raise ValueError(f"cycle_period must be a positive whole number of seconds, got {cycle_period}")
    if n < p:
        raise ValueError(f"series of {n} samples holds no full {p} s cycle")

    dt = int(cfg.inner_period)
    window = int(cfg.target_window)
    rate = tp.yaw_rate_deg_s
    theta = wrap_to_360(float(init_theta))

    theta_sec = np.empty(n)
    acc_sec = np.empty(n)
    yawing_sec = np.zeros(n, dtype=bool)

    acc = 0.0
    yawing = False
    target = 0.0
    for tick in range(0, n, dt):
        if yawing:
            rem = yaw_error(target, theta)
            stop_at = max(cfg.stop_deadband, _STOP_FLOOR_DEG)
            if abs(rem) <= stop_at:
                yawing = False
            else:
                step = math.copysign(min(rate * dt, abs(rem)), rem)
                theta = wrap_to_360(theta + step)
                if abs(yaw_error(target, theta)) <= stop_at:
                    yawing = False
        else:
            gamma = yaw_error(series.phi[tick], theta)
            acc += abs(gamma) * dt
            if acc >= cfg.threshold:
                lo = max(0, tick - window + 1)
                target = circular_mean_deg(series.phi[lo : tick + 1])
                acc = 0.0
                yawing = True  # motion starts on the next tick
        hi = min(tick + dt, n)
        theta_sec[tick:hi] = theta
        acc_sec[tick:hi] = acc
        yawing_sec[tick:hi] = yawing

    trace = _resample_to_cycles(series, theta_sec, tp, p, theta_prev=wrap_to_360(float(init_theta)))
    if return_inner:
        return trace, {"t": series.t.copy(), "theta": theta_sec, "acc": acc_sec, "yawing": yawing_sec}
    return trace


def _resample_to_cycles(
    series: WindSeries,
    theta_sec: np.ndarray,
    tp: TurbineParams,
    p: int,
    theta_prev: float,
) -> CycleTrace:
    """Collapse a per-second nacelle trajectory onto the control-cycle grid.

    The nacelle position reported for a cycle is its end-of-cycle value; the
    applied action is derived from the net rotation over the cycle.
    """
    count = len(series) // p
    records = []
    for c in range(count):
        lo, hi = c * p, (c + 1) * p
        phi_c = circular_mean_deg(series.phi[lo:hi])
        v_c = float(np.mean(series.v[lo:hi]))
        theta_end = float(theta_sec[hi - 1])
        gamma = yaw_error(phi_c, theta_end)
        delta = wrap_angle(theta_end - theta_prev)
        if delta > 1e-12:
            action = 2
        elif delta < -1e-12:
            action = 0
        else:
            action = 1
        records.append(
            {
                "cycle": c,
                "t_s": float(series.t[lo]),
                "phi": phi_c,
                "v": v_c,
                "theta": theta_end,
                "gamma": gamma,
                "action_issued": action,
                "action_applied": action,
                "power_kw": power_with_misalignment(v_c, gamma, tp),
                "r1": 0.0,
                "r2": 0.0,
            }
        )
        theta_prev = theta_end
    return CycleTrace.from_records(records)


@dataclass(frozen=True, eq=False)
class NacelleLog:
    """Recorded nacelle positions at uniform 1 s spacing."""

    t: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        theta = np.asarray(self.theta, dtype=np.float64)
        if t.ndim != 1 or theta.ndim != 1 or len(t) != len(theta):
            raise WindDataError("nacelle log columns must be 1-d of equal length")
        if len(t) < 2:
            raise WindDataError(f"nacelle log too short: {len(t)} samples")
        gaps = np.diff(t)
        if np.any(gaps != 1):
            bad = int(t[1:][gaps != 1][0])
            raise WindDataError(f"non-uniform spacing at t={bad}")
        if not np.all(np.isfinite(theta)) or np.any(theta < 0) or np.any(theta >= 360.0):
            raise WindDataError("nacelle position must be finite and in [0, 360)")
        for name, arr in (("t", t), ("theta", theta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    def slice_samples(self, start: int, stop: int) -> "NacelleLog":
        return NacelleLog(self.t[start:stop].copy(), self.theta[start:stop].copy())


def load_nacelle_log(path) -> NacelleLog:
    """Read a nacelle-position CSV with header ``t,theta_deg``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"nacelle log not found: {path}")
    ts: list[int] = []
    thetas: list[float] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(s.strip() for s in header) != ("t", "theta_deg"):
            raise WindDataError(f"{path}: expected header 't,theta_deg', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise WindDataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                t_raw = float(row[0])
                theta = float(row[1])
            except ValueError as exc:
                raise WindDataError(f"{path}: line {lineno}: could not parse row: {exc}") from exc
            if not t_raw.is_integer():
                raise WindDataError(f"{path}: line {lineno}: timestamp must be an integer second")
            if not math.isfinite(theta):
                raise WindDataError(f"{path}: line {lineno}: non-finite nacelle position")
            ts.append(int(t_raw))
            thetas.append(wrap_to_360(theta))
    return NacelleLog(np.array(ts), np.array(thetas))


def save_nacelle_log(log: NacelleLog, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write("t,theta_deg\n")
        for i in range(len(log)):
            f.write(f"{int(log.t[i])},{float(log.theta[i])!r}\n")


def replay_cyca_l(
    series: WindSeries,
    log: NacelleLog,
    tp: TurbineParams,
    cycle_period: float = 10.0,
) -> CycleTrace:
    """Reconstruct a per-cycle trace from recorded nacelle positions.

    The log must cover exactly the same 1 s time range as the wind series.
    Power is computed like everywhere else, but reports should not quote it for
    replayed runs: recorded positions also reflect outside interference the
    simulation does not model.
    """
    if len(log) != len(series) or not np.array_equal(log.t, series.t):
        raise ValueError(
            f"time-range mismatch between wind series ({len(series)} samples from t={series.t[0]}) "
            f"and nacelle log ({len(log)} samples from t={log.t[0]})"
        )
    return _resample_to_cycles(series, log.theta, tp, int(cycle_period), theta_prev=float(log.theta[0]))


def calibrate_threshold(
    series: WindSeries,
    cfg: CycaConfig,
    tp: TurbineParams,
    init_theta: float,
    thresholds,
    target_pct: float = 2.0,
    cycle_period: float = 10.0,
) -> tuple[float, list[float]]:
    """Grid-search the accumulator threshold for a time-spent-yawing target.

    Returns the threshold whose usage lands closest to ``target_pct`` (ties go
    to the smaller threshold) along with the usage measured for each candidate.
    """
    grid = [float(x) for x in thresholds]
    if not grid:
        raise ValueError("empty calibration grid")
    usages = []
    for thr in grid:
        trace = run_cyca_s(series, replace(cfg, threshold=thr), tp, init_theta, cycle_period)
        deltas = np.abs(wrap_angle(np.diff(trace.theta)))
        moving = np.concatenate([[False], deltas > 0])
        usages.append(float(100.0 * np.mean(moving)))
    best = min(range(len(grid)), key=lambda i: (abs(usages[i] - target_pct), grid[i]))
    return grid[best], usages
