"""Experiment matrix: stimulus calibration, batch runs and artifact output."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis, svg
from .config import StudyConfig, dumps
from .continuum import build_continuum, run_continuum
from .discrete import MembraneModel, assemble, run
from .errors import GapStrandError, InexcitableError, SolverDivergence
from .geometry import SubunitGeometry, build_mesh
from .homogenisation import effective_tensors, write_tensor_report
from .records import SNAPSHOT_COLUMNS, ProbeSpec, SimulationRecord, StimulusSpec, read_csv

log = logging.getLogger(__name__)

BRACKET_MAX_EXPONENT = 11  # 2**11 = 2048 uA/mm^2
BISECTIONS = 12
SAFETY_FACTOR = 1.5
MIN_EXPONENT = -10
QUIESCENCE_WAIT = 5.0  # ms


def source_digest() -> str:
    """SHA-256 over the package sources, so stale artifact directories can be spotted."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.rglob("*")):
        if p.suffix in (".py", ".pyx", ".ini"):
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def _membrane(cfg: StudyConfig, model) -> MembraneModel:
    return MembraneModel(c_m=cfg.c_m, c_g=model.c_g, i_g=model.i_g)


def simulate(
    cfg: StudyConfig,
    model_id: str,
    solver: str,
    amplitude: float,
    geometry: SubunitGeometry | None = None,
    probes: ProbeSpec | None = None,
    continuum_nodes: int | None = None,
) -> SimulationRecord:
    """Run one model with one solver at a fixed stimulus amplitude."""
    model = cfg.model(model_id)
    g = cfg.geometry if geometry is None else geometry
    stim = StimulusSpec(amplitude=amplitude, start=cfg.stim_start, end=cfg.stim_end, x_max=cfg.stim_x_max)
    if probes is None:
        probes = ProbeSpec(crossing_station=0.5 * g.length)
    membrane = _membrane(cfg, model)
    if solver == "discrete":
        system = assemble(build_mesh(g), cfg.sigma_i, model.sigma_g, cfg.sigma_e, membrane,
                          linear_solver=cfg.linear_solver)
        rec = run(system, stim, cfg.t_end, cfg.dt, probes)
    elif solver == "continuum":
        n = cfg.continuum_nodes if continuum_nodes is None else continuum_nodes
        system = build_continuum(g, cfg.sigma_i, model.sigma_g, cfg.sigma_e, membrane, n_nodes=n,
                                 linear_solver=cfg.linear_solver)
        rec = run_continuum(system, stim, cfg.t_end, cfg.dt, probes)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    rec.metadata["model"] = model_id
    return rec


@dataclass(frozen=True)
class Calibration:
    model: str
    solver: str
    threshold: float  # smallest amplitude found to propagate (uA/mm^2)
    amplitude: float  # SAFETY_FACTOR * threshold
    trials: tuple = ()  # (amplitude, propagated) in evaluation order


def calibrate_stimulus(cfg: StudyConfig, model_id: str, solver: str) -> Calibration:
    """Smallest propagating amplitude by doubling then bisection, times 1.5.

    Trials run on a shortened strand of ``cfg.calibration_cells`` cells and
    succeed once the front passes ``cfg.calibration_station``. A trial that
    settles back to rest stops early. The search is deterministic.
    """
    g = replace(cfg.geometry, n_cells_x=cfg.calibration_cells)
    nodes = int(round((cfg.continuum_nodes - 1) * cfg.calibration_cells / cfg.geometry.n_cells_x)) + 1
    probes = ProbeSpec(
        stations=(cfg.calibration_station,),
        snapshot_times=(),
        crossing_station=None,
        stop_station=cfg.calibration_station,
        quiescence_wait=QUIESCENCE_WAIT,
    )
    trials = []

    def fires(a: float) -> bool:
        try:
            ok = simulate(cfg, model_id, solver, a, geometry=g, probes=probes, continuum_nodes=max(nodes, 3)).propagated
        except SolverDivergence:
            ok = None
        trials.append((a, ok))
        log.debug("calibrate %s/%s amplitude %.6g -> %s", model_id, solver, a, ok)
        return bool(ok)

    hi = None
    for k in range(BRACKET_MAX_EXPONENT + 1):
        a = 2.0 ** k
        if fires(a):
            hi = a
            break
        if trials[-1][1] is None:
            break
    if hi is None:
        raise InexcitableError(f"inexcitable configuration: model {model_id} ({solver}) does not propagate "
                               f"for stimuli up to {2.0 ** BRACKET_MAX_EXPONENT:g} uA/mm^2")
    lo = hi / 2.0 if hi > 1.0 else None
    if lo is None:
        # even the bottom of the bracket fires: walk down to find a failing amplitude
        for k in range(-1, MIN_EXPONENT - 1, -1):
            if fires(2.0 ** k):
                hi = 2.0 ** k
            else:
                lo = 2.0 ** k
                break
        else:
            lo = 0.0
    for _ in range(BISECTIONS):
        mid = 0.5 * (lo + hi)
        if fires(mid):
            hi = mid
        else:
            lo = mid
    return Calibration(model_id, solver, hi, SAFETY_FACTOR * hi, tuple(trials))


@dataclass
class RunResult:
    model: str
    solver: str
    status: str  # "ok" or "failed: <reason>"
    amplitude: float = math.nan
    record: SimulationRecord | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _atomic(path: Path, write) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: Path, text: str) -> None:
    def w(p):
        with open(p, "w", newline="") as fh:
            fh.write(text)

    _atomic(path, w)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def write_record(rec: SimulationRecord, directory: Path) -> None:
    """``traces.csv``, ``snapshot_<t>ms.csv`` per fixed time, the crossing snapshot and ``metadata.json``."""
    directory = Path(directory)
    _atomic(directory / "traces.csv", rec.write_traces)
    for t in (15.0, 30.0):
        try:
            rec.snapshot(t)
        except KeyError:
            continue
        _atomic(directory / f"snapshot_{t:g}ms.csv", lambda p, t=t: rec.write_snapshot(t, p))
    t_cross = rec.metadata.get("crossing_time")
    if t_cross is not None:
        _atomic(directory / "snapshot_crossing.csv", lambda p: rec.write_snapshot(t_cross, p))
    meta = {k: _jsonable(v) for k, v in rec.metadata.items()}
    _write_text(directory / "metadata.json", json.dumps(meta, indent=1, sort_keys=True) + "\n")


def read_record(directory) -> SimulationRecord:
    """Inverse of :func:`write_record` (values as stored, to 10 significant digits)."""
    directory = Path(directory)
    header, data = read_csv(directory / "traces.csv")
    stations = np.array([float(h[2:]) for h in header[1:]])
    meta = json.loads((directory / "metadata.json").read_text())
    snaps = {}
    files = [(t, directory / f"snapshot_{t:g}ms.csv") for t in (15.0, 30.0)]
    if meta.get("crossing_time") is not None:
        files.append((meta["crossing_time"], directory / "snapshot_crossing.csv"))
    for t, f in files:
        if f.exists():
            _, snap = read_csv(f)
            snaps[t] = {c: snap[:, i] for i, c in enumerate(SNAPSHOT_COLUMNS)}
    return SimulationRecord(data[:, 0], stations, data[:, 1:], dict(sorted(snaps.items())), meta)


def run_one(cfg: StudyConfig, model_id: str, solver: str, out: Path | None = None) -> RunResult:
    """Calibrate (unless the model fixes an amplitude), simulate and write artifacts."""
    try:
        amp = cfg.model(model_id).amplitude
        if amp is None:
            amp = calibrate_stimulus(cfg, model_id, solver).amplitude
        log.info("run %s/%s with stimulus %.6g uA/mm^2", model_id, solver, amp)
        rec = simulate(cfg, model_id, solver, amp)
    except GapStrandError as exc:
        return RunResult(model_id, solver, f"failed: {exc}")
    except (ValueError, FloatingPointError, RuntimeError) as exc:
        return RunResult(model_id, solver, f"failed: {type(exc).__name__}: {exc}")
    if out is not None:
        write_record(rec, Path(out) / model_id / solver)
    return RunResult(model_id, solver, "ok", amp, rec)


def _run_one_star(args):
    return run_one(*args)


@dataclass
class MatrixResult:
    runs: list
    rows: list
    orderings: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.runs)

    def status_lines(self) -> list[str]:
        return [f"{r.model:>5} {r.solver:<10} {r.status}" for r in self.runs]


def tensor_rows(cfg: StudyConfig):
    return [(m.model_id, effective_tensors(cfg.geometry, cfg.sigma_i, m.sigma_g, cfg.sigma_e)) for m in cfg.models]


def run_matrix(cfg: StudyConfig, out, jobs: int = 1) -> MatrixResult:
    """Every selected (model, solver) pair, then tensors, comparison table and plots."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "config.ini", dumps(cfg))
    tasks = [(cfg, m.model_id, s, out) for m in cfg.models for s in cfg.solvers]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one_star, tasks))
    else:
        runs = [run_one(*t) for t in tasks]

    _atomic(out / "tensors.csv", lambda p: write_tensor_report(tensor_rows(cfg), p))
    rows = [analysis.summarise(r.model, r.solver, r.record, cfg.geometry) for r in runs if r.ok]
    _write_text(out / "comparison.csv", analysis.comparison_csv(rows))
    order = analysis.orderings(rows)
    _write_text(out / "orderings.csv", "relation,holds\n" + "".join(
        f"\"{o.description}\",{int(o.holds)}\n" for o in order))
    _write_text(out / "status.csv", "model,solver,status,stimulus_amplitude\n" + "".join(
        f"{r.model},{r.solver},\"{r.status}\",{r.amplitude:.10g}\n" for r in runs))
    write_plots({(r.model, r.solver): r.record for r in runs if r.ok}, cfg, out / "plots")
    _write_text(out / "source_digest.txt", source_digest() + "\n")
    return MatrixResult(runs, rows, order)


def load_records(cfg: StudyConfig, out) -> dict:
    """Records of every selected run present in an artifact directory."""
    recs = {}
    for m in cfg.models:
        for s in cfg.solvers:
            d = Path(out) / m.model_id / s
            if (d / "metadata.json").exists():
                recs[(m.model_id, s)] = read_record(d)
    return recs


V_RANGE = (-100.0, 50.0)


def _snap(recs, key, t):
    rec = recs.get(key)
    if rec is None:
        return None
    try:
        return rec.snapshot(t)
    except KeyError:
        return None


def write_plots(recs: dict, cfg: StudyConfig, directory) -> list[Path]:
    """Snapshot pairs per model, all-model overlay at 30 ms and a zoom on the fronts."""
    directory = Path(directory)
    length = cfg.geometry.length
    written = []
    models = [m.model_id for m in cfg.models]

    panels = []
    for m in models:
        p = svg.Panel(f"Model {m}: 15 and 30 ms", "x (mm)", "v (mV)", (0, length), V_RANGE)
        for t in (15.0, 30.0):
            for s in cfg.solvers:
                snap = _snap(recs, (m, s), t)
                if snap is not None:
                    p.add(snap["x"], snap["v"], f"{s} {t:g} ms", color="#1f77b4" if s == "continuum" else "#d62728",
                          dashed=t == 15.0)
        panels.append(p)
    if panels:
        written.append(directory / "snapshots.svg")
        _write_text(written[-1], svg.render(panels, columns=2))

    overlay, fronts = [], []
    for s in cfg.solvers:
        p = svg.Panel(f"{s}: all models at 30 ms", "x (mm)", "v (mV)", (0, length), V_RANGE)
        for k, m in enumerate(models):
            snap = _snap(recs, (m, s), 30.0)
            if snap is not None:
                p.add(snap["x"], snap["v"], f"Model {m}", color=svg.PALETTE[k % len(svg.PALETTE)])
                f = analysis.wavefront_position(snap)
                if math.isfinite(f):
                    fronts.append(f)
        overlay.append(p)
    if overlay:
        written.append(directory / "overlay_30ms.svg")
        _write_text(written[-1], svg.render(overlay, columns=len(overlay)))
        lo = max(0.0, min(fronts) - 0.6) if fronts else 0.0
        hi = min(length, max(fronts) + 0.2) if fronts else length
        if hi <= lo:
            lo, hi = 0.0, length
        zoom = [svg.Panel(p.title + " (front)", p.xlabel, p.ylabel, (lo, hi), V_RANGE, list(p.series)) for p in overlay]
        written.append(directory / "overlay_30ms_zoom.svg")
        _write_text(written[-1], svg.render(zoom, columns=len(zoom)))
    return written
