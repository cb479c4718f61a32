"""Containers shared by both solvers and the analysis layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SNAPSHOT_COLUMNS = ("x", "y", "phi_i", "phi_e", "v")


@dataclass(frozen=True)
class StimulusSpec:
    """Transmembrane current injected over ``0 <= x <= x_max`` for ``start <= t < end``.

    ``amplitude`` is a current density in uA/mm^2 of membrane; positive depolarises.
    """

    amplitude: float = 0.0
    start: float = 5.0
    end: float = 10.0
    x_max: float = 0.1

    def current(self, t: float) -> float:
        return self.amplitude if self.start <= t < self.end else 0.0


@dataclass(frozen=True)
class ProbeSpec:
    stations: tuple = tuple(np.round(np.arange(0.0, 10.0 + 1e-9, 0.5), 10))
    snapshot_times: tuple = (15.0, 30.0)
    threshold: float = -20.0
    #: also snapshot the moment this station first crosses ``threshold``
    crossing_station: float | None = 5.0
    #: stop early once this station has crossed ``threshold``
    stop_station: float | None = None
    #: stop early as failed once the tissue is quiescent this long after the stimulus
    quiescence_wait: float | None = None


@dataclass
class SimulationRecord:
    t: np.ndarray
    stations: np.ndarray
    traces: np.ndarray  # (n_t, n_stations), mV
    snapshots: dict = field(default_factory=dict)  # time -> {column: array}
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("time axis must be strictly increasing")
        for snap in self.snapshots.values():
            if snap["x"].size > 1 and np.any(np.diff(snap["x"]) <= 0):
                raise ValueError("snapshot x must be strictly increasing")

    def trace(self, x: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.stations - x)))
        if abs(self.stations[k] - x) > 1e-9:
            raise KeyError(f"no probe at x = {x}")
        return self.traces[:, k]

    def snapshot(self, t: float) -> dict:
        for key, snap in self.snapshots.items():
            if abs(key - t) < 1e-9:
                return snap
        raise KeyError(f"no snapshot at t = {t}")

    @property
    def propagated(self) -> bool:
        return bool(self.metadata.get("propagated", False))

    def write_traces(self, path) -> None:
        """CSV ``t,v@x0,v@x1,...`` (ms, mV; station positions in mm in the header)."""
        header = "t," + ",".join(f"v@{x:g}" for x in self.stations)
        data = np.column_stack([self.t, self.traces])
        _write_csv(path, header, data)

    def write_snapshot(self, t: float, path) -> None:
        """CSV ``x,y,phi_i,phi_e,v`` (mm, mm, mV, mV, mV)."""
        snap = self.snapshot(t)
        data = np.column_stack([snap[c] for c in SNAPSHOT_COLUMNS])
        _write_csv(path, ",".join(SNAPSHOT_COLUMNS), data)


def _write_csv(path, header, data) -> None:
    lines = [header]
    lines.extend(",".join(f"{v:.10g}" for v in row) for row in data)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
