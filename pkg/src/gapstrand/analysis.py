"""Post-processing of simulation records: speeds, fronts, steepness, comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SubunitGeometry
from .records import SimulationRecord

THRESHOLD = -20.0  # mV


@dataclass(frozen=True)
class CvEstimate:
    cv: float  # mm/ms, nan when not propagating
    x_a: float
    x_b: float
    threshold: float
    t_a: float | None
    t_b: float | None

    @property
    def propagated(self) -> bool:
        return self.t_a is not None and self.t_b is not None and self.t_b > self.t_a


def upward_crossing(t: np.ndarray, v: np.ndarray, threshold: float = THRESHOLD) -> float | None:
    """First time ``v`` rises through ``threshold``, linearly interpolated."""
    above = v >= threshold
    if above.size == 0 or not above.any():
        return None
    k = int(np.argmax(above))
    if k == 0:
        return float(t[0])
    v0, v1 = v[k - 1], v[k]
    return float(t[k - 1] + (threshold - v0) * (t[k] - t[k - 1]) / (v1 - v0))


def _nearest_station(rec: SimulationRecord, x: float) -> float:
    return float(rec.stations[int(np.argmin(np.abs(rec.stations - x)))])


def conduction_velocity(
    rec: SimulationRecord,
    threshold: float = THRESHOLD,
    x_a: float | None = None,
    x_b: float | None = None,
) -> CvEstimate:
    """Front speed between two probe stations.

    Defaults to the stations nearest 25% and 75% of the probed span, which
    keeps both away from the stimulus site and the far wall.
    """
    span = rec.stations[-1] - rec.stations[0]
    x_a = _nearest_station(rec, rec.stations[0] + 0.25 * span if x_a is None else x_a)
    x_b = _nearest_station(rec, rec.stations[0] + 0.75 * span if x_b is None else x_b)
    if not x_a < x_b:
        raise ValueError(f"need x_a < x_b, got {x_a} and {x_b}")
    t_a = upward_crossing(rec.t, rec.trace(x_a), threshold)
    t_b = upward_crossing(rec.t, rec.trace(x_b), threshold)
    cv = math.nan
    if t_a is not None and t_b is not None and t_b > t_a:
        cv = (x_b - x_a) / (t_b - t_a)
    return CvEstimate(cv=cv, x_a=x_a, x_b=x_b, threshold=threshold, t_a=t_a, t_b=t_b)


def wavefront_position(snapshot: dict, threshold: float = THRESHOLD) -> float:
    """Largest x where v exceeds ``threshold`` (interpolated); nan if nowhere."""
    x, v = snapshot["x"], snapshot["v"]
    idx = np.flatnonzero(v > threshold)
    if idx.size == 0:
        return math.nan
    k = int(idx[-1])
    if k == x.size - 1:
        return float(x[-1])
    return float(x[k] + (v[k] - threshold) * (x[k + 1] - x[k]) / (v[k] - v[k + 1]))


@dataclass(frozen=True)
class Steepness:
    gap: float | None  # max |dv/dx| over gap slabs, None for continuum profiles
    cell: float  # max |dv/dx| elsewhere (mV/mm)

    @property
    def ratio(self) -> float | None:
        if self.gap is None:
            return None
        return self.gap / self.cell if self.cell > 0 else math.inf


def steepness_profile(snapshot: dict, geometry: SubunitGeometry | None = None) -> Steepness:
    """Largest finite-difference gradient inside and outside gap slabs.

    Each segment between consecutive samples is classified by its midpoint.
    Without a geometry every segment counts as cell interior.
    """
    x, v = snapshot["x"], snapshot["v"]
    slope = np.abs(np.diff(v) / np.diff(x))
    if geometry is None:
        return Steepness(gap=None, cell=float(slope.max()))
    gap = geometry.is_gap(0.5 * (x[1:] + x[:-1]))
    if not gap.any() or gap.all():
        raise ValueError("snapshot does not sample both gap and cell regions")
    return Steepness(gap=float(slope[gap].max()), cell=float(slope[~gap].max()))


def periodic_power_fraction(x: np.ndarray, v: np.ndarray, wavelength: float) -> float:
    """Share of spectral power (mean removed) at the given spatial wavelength.

    The profile is resampled onto a uniform grid spanning ``[x0, x1)``.
    """
    n = x.size - 1
    length = x[-1] - x[0]
    cycles = length / wavelength
    k = int(round(cycles))
    if k < 1 or abs(cycles - k) > 1e-6 or 2 * k >= n:
        raise ValueError("wavelength must divide the span and be resolved by the samples")
    grid = x[0] + length * np.arange(n) / n
    u = np.interp(grid, x, v)
    power = np.abs(np.fft.rfft(u - u.mean())) ** 2
    total = power[1:].sum()
    return float(power[k] / total) if total > 0 else 0.0


def crossing_snapshot(rec: SimulationRecord) -> dict | None:
    """Snapshot captured when the front first passed the crossing station."""
    t = rec.metadata.get("crossing_time")
    return None if t is None else rec.snapshot(t)


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    solver: str
    propagated: bool
    stimulus_amplitude: float
    cv: float
    front_15: float
    front_30: float
    steepness_ratio: float | None
    periodic_power: float | None


@dataclass(frozen=True)
class Ordering:
    description: str
    holds: bool


def summarise(model: str, solver: str, rec: SimulationRecord, geometry: SubunitGeometry) -> ComparisonRow:
    """One comparison row; gap/cell steepness is only classified for the discrete solver."""
    cv = conduction_velocity(rec)
    fronts = []
    for t in (15.0, 30.0):
        try:
            fronts.append(wavefront_position(rec.snapshot(t)))
        except KeyError:
            fronts.append(math.nan)
    snap = crossing_snapshot(rec)
    ratio = power = None
    if snap is not None:
        ratio = steepness_profile(snap, geometry if solver == "discrete" else None).ratio
        power = periodic_power_fraction(snap["x"], snap["v"], geometry.L)
    return ComparisonRow(
        model=model,
        solver=solver,
        propagated=cv.propagated,
        stimulus_amplitude=float(rec.metadata.get("stimulus_amplitude", math.nan)),
        cv=cv.cv,
        front_15=fronts[0],
        front_30=fronts[1],
        steepness_ratio=ratio,
        periodic_power=power,
    )


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def orderings(rows: list[ComparisonRow], tolerance: float = 0.01) -> list[Ordering]:
    """Pairwise relations between models, evaluated where both rows exist."""
    cv = {(r.model, r.solver): r.cv for r in rows}
    out = []
    for solver in sorted({r.solver for r in rows}):
        def have(*models):
            return all((m, solver) in cv and math.isfinite(cv[(m, solver)]) for m in models)

        c = {m: cv.get((m, solver)) for m in ("Base", "1", "2", "3", "4", "5", "6")}
        if have("1", "2"):
            out.append(Ordering(f"{solver}: cv(2) < cv(1)", c["2"] < c["1"]))
        if have("1", "3"):
            out.append(Ordering(f"{solver}: cv(3) < cv(1)", c["3"] < c["1"]))
        if have("2", "4"):
            out.append(Ordering(f"{solver}: cv(4) < cv(2)", c["4"] < c["2"]))
        if have("3", "5"):
            out.append(Ordering(f"{solver}: |cv(5) - cv(3)| < {tolerance:g} cv(3)", _rel(c["5"], c["3"]) < tolerance))
        if have("4", "6"):
            out.append(Ordering(f"{solver}: |cv(6) - cv(4)| < {tolerance:g} cv(4)", _rel(c["6"], c["4"]) < tolerance))
        if have("1", "2", "3"):
            out.append(Ordering(f"{solver}: |cv(3) - cv(1)| > |cv(2) - cv(1)|",
                                abs(c["3"] - c["1"]) > abs(c["2"] - c["1"])))
    if ("1", "discrete") in cv and ("1", "continuum") in cv:
        out.append(Ordering("model 1: discrete cv < continuum cv", cv[("1", "discrete")] < cv[("1", "continuum")]))
    return out


COMPARISON_COLUMNS = (
    "model", "solver", "propagated", "stimulus_amplitude", "cv",
    "front_15ms", "front_30ms", "steepness_ratio", "periodic_power",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def comparison_csv(rows: list[ComparisonRow]) -> str:
    """CSV text; cv in mm/ms, fronts in mm, amplitude in uA/mm^2."""
    lines = [",".join(COMPARISON_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.model, r.solver, r.propagated, r.stimulus_amplitude, r.cv,
            r.front_15, r.front_30, r.steepness_ratio, r.periodic_power,
        )))
    return "\n".join(lines) + "\n"
