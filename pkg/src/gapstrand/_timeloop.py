"""Time loop shared by the discrete and continuum solvers."""

import numpy as np

from .records import SimulationRecord


def drive(advance, line_v, x_line, take_snapshot, s, protocol, t_end, dt, probes, metadata):
    """Shared time loop for both solvers."""
    n_steps = int(round(t_end / dt))
    stations = np.asarray(probes.stations, dtype=float)
    stations = stations[(stations >= x_line[0] - 1e-12) & (stations <= x_line[-1] + 1e-12)]
    times = [s.t]
    traces = [np.interp(stations, x_line, line_v(s))]
    snapshots = {}
    pending = sorted(t for t in probes.snapshot_times if t <= t_end + 1e-9)
    cross_k = stop_k = None
    if probes.crossing_station is not None and stations.size:
        cross_k = int(np.argmin(np.abs(stations - probes.crossing_station)))
    if probes.stop_station is not None:
        stop_k = int(np.argmin(np.abs(stations - probes.stop_station)))
    crossed_mid = False
    outcome = "completed"
    quiet_since = None
    t0 = s.t
    for n in range(n_steps):
        s = advance(s)
        s.t = t0 + (n + 1) * dt  # no accumulated round-off in the clock
        v = line_v(s)
        tr = np.interp(stations, x_line, v)
        times.append(s.t)
        traces.append(tr)
        while pending and s.t >= pending[0] - 0.5 * dt:
            snapshots[pending.pop(0)] = take_snapshot(s)
        if cross_k is not None and not crossed_mid and tr[cross_k] >= probes.threshold:
            crossed_mid = True
            metadata["crossing_time"] = s.t
            snapshots[s.t] = take_snapshot(s)
        if stop_k is not None and tr[stop_k] >= probes.threshold:
            outcome = "reached_stop_station"
            break
        if probes.quiescence_wait is not None and s.t > protocol.end:
            if np.max(v) < -60.0:
                quiet_since = s.t if quiet_since is None else quiet_since
                if s.t - quiet_since >= probes.quiescence_wait:
                    outcome = "quiescent"
                    break
            else:
                quiet_since = None
    traces = np.array(traces)
    metadata = dict(metadata)
    metadata["outcome"] = outcome
    metadata["t_end"] = times[-1]
    metadata["propagated"] = bool(np.any(traces[:, -1] >= probes.threshold)) if stations.size else False
    if stop_k is not None:
        metadata["propagated"] = outcome == "reached_stop_station"
    return SimulationRecord(
        t=np.asarray(times),
        stations=stations,
        traces=traces,
        snapshots=dict(sorted(snapshots.items())),
        metadata=metadata,
    )
