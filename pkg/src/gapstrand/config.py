"""Experiment configuration: an INI-style file with one section per model row.

Schema (units in brackets)::

    [study]
    t_end = 50               # ms
    dt = 0.01                # ms
    solvers = continuum, discrete
    linear_solver = direct   # direct | cg
    continuum_nodes = 1001
    nodes_per_cell = 320

    [tissue]
    sigma_i = 0.175          # mS/mm
    sigma_e = 0.7            # mS/mm
    c_m = 0.01               # uF/mm^2

    [geometry]
    L = 0.1                  # mm
    h = 0.02                 # mm
    h1 = 0.01                # mm
    delta = 0.001            # mm
    n_cells_x = 100
    n_fibres_y = 2

    [stimulus]
    start = 5                # ms
    end = 10                 # ms
    x_max = 0.1              # mm, stimulated span from the left wall
    calibration_cells = 30
    calibration_station = 2  # mm

    [model 1]
    sigma_g = 0.00175        # mS/mm
    c_g = 0.01               # uF/mm^2
    i_g = 1                  # 0 or 1
    amplitude = auto         # uA/mm^2 or auto

Comments start with ``#`` or ``;``. Every model section needs ``sigma_g``,
``c_g`` and ``i_g``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .geometry import SubunitGeometry

SOLVERS = ("continuum", "discrete")
MODEL_IDS = ("Base", "1", "2", "3", "4", "5", "6")


@dataclass(frozen=True)
class ModelConfig:
    model_id: str
    sigma_g: float
    c_g: float
    i_g: int
    amplitude: float | None = None  # None: calibrate

    def __post_init__(self):
        if not self.sigma_g > 0:
            raise ConfigError(f"model {self.model_id}: sigma_g must be positive")
        if self.c_g < 0:
            raise ConfigError(f"model {self.model_id}: c_g must be non-negative")
        if self.i_g not in (0, 1):
            raise ConfigError(f"model {self.model_id}: i_g must be 0 or 1")
        if self.amplitude is not None and not self.amplitude > 0:
            raise ConfigError(f"model {self.model_id}: amplitude must be positive or auto")


MODEL_TABLE = (
    ModelConfig("Base", 0.175, 0.01, 1),
    ModelConfig("1", 0.00175, 0.01, 1),
    ModelConfig("2", 0.00175, 0.01, 0),
    ModelConfig("3", 0.00175, 0.001, 1),
    ModelConfig("4", 0.00175, 0.001, 0),
    ModelConfig("5", 0.00175, 0.0, 1),
    ModelConfig("6", 0.00175, 0.0, 0),
)


@dataclass(frozen=True)
class StudyConfig:
    models: tuple = MODEL_TABLE
    solvers: tuple = SOLVERS
    t_end: float = 50.0
    dt: float = 0.01
    linear_solver: str = "direct"
    continuum_nodes: int = 1001
    sigma_i: float = 0.175
    sigma_e: float = 0.7
    c_m: float = 0.01
    geometry: SubunitGeometry = field(default_factory=SubunitGeometry)
    stim_start: float = 5.0
    stim_end: float = 10.0
    stim_x_max: float = 0.1
    calibration_cells: int = 30
    calibration_station: float = 2.0

    def model(self, model_id: str) -> ModelConfig:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise KeyError(model_id)

    def select(self, model_ids=None, solvers=None) -> StudyConfig:
        models = self.models
        if model_ids is not None:
            known = {m.model_id for m in self.models}
            unknown = [m for m in model_ids if m not in known]
            if unknown:
                raise ConfigError(f"unknown model(s): {', '.join(unknown)}")
            models = tuple(m for m in self.models if m.model_id in model_ids)
        if solvers is not None:
            bad = [s for s in solvers if s not in SOLVERS]
            if bad:
                raise ConfigError(f"unknown solver(s): {', '.join(bad)}")
            solvers = tuple(s for s in SOLVERS if s in solvers)
        return replace(self, models=models, solvers=self.solvers if solvers is None else solvers)


_STUDY_KEYS = {
    "t_end": float, "dt": float, "linear_solver": str, "continuum_nodes": int,
    "nodes_per_cell": int, "solvers": str,
}
_TISSUE_KEYS = {"sigma_i": float, "sigma_e": float, "c_m": float}
_GEOMETRY_KEYS = {"L": float, "h": float, "h1": float, "delta": float, "n_cells_x": int, "n_fibres_y": int}
_STIM_KEYS = {"start": float, "end": float, "x_max": float, "calibration_cells": int, "calibration_station": float}
_MODEL_KEYS = {"sigma_g": float, "c_g": float, "i_g": int, "amplitude": str}


class _Locator:
    """Maps ``(section, key)`` to 1-based line numbers in the source text."""

    _section = re.compile(r"^\s*\[([^\]]+)\]")
    _key = re.compile(r"^\s*([^#;=:\s][^=:]*?)\s*[=:]")

    def __init__(self, text: str):
        self.lines = {}
        current = None
        for no, line in enumerate(text.splitlines(), 1):
            m = self._section.match(line)
            if m:
                current = m.group(1).strip()
                self.lines[(current, None)] = no
                continue
            m = self._key.match(line)
            if m and current is not None:
                self.lines[(current, m.group(1).strip())] = no

    def __call__(self, section, key=None) -> str:
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"line {no}" if no else "?"


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    p.optionxform = str  # keep "L" distinct from "l"
    return p


def loads(text: str, source: str = "<config>") -> StudyConfig:
    """Parse and validate; every problem is reported with its line number."""
    where = _Locator(text)
    p = _parser()
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    errors: list[str] = []

    def section(name, schema, required=()):
        out = {}
        if not p.has_section(name):
            for k in required:
                errors.append(f"{source}: [{name}] missing (needs {k})")
            return out
        for key, raw in p.items(name):
            if key not in schema:
                errors.append(f"{source}:{where(name, key)}: unknown key '{key}' in [{name}]")
                continue
            try:
                out[key] = schema[key](raw)
            except ValueError:
                errors.append(f"{source}:{where(name, key)}: '{key}' expects {schema[key].__name__}, got '{raw}'")
        for k in required:
            if k not in out and not any(e.endswith(f"'{k}' in [{name}]") for e in errors):
                errors.append(f"{source}:{where(name)}: [{name}] missing '{k}'")
        return out

    for name in p.sections():
        if name not in ("study", "tissue", "geometry", "stimulus") and not name.startswith("model "):
            errors.append(f"{source}:{where(name)}: unknown section [{name}]")

    study = section("study", _STUDY_KEYS)
    tissue = section("tissue", _TISSUE_KEYS)
    geo = section("geometry", _GEOMETRY_KEYS)
    stim = section("stimulus", _STIM_KEYS)

    models = []
    for name in p.sections():
        if not name.startswith("model "):
            continue
        model_id = name[len("model "):].strip()
        vals = section(name, _MODEL_KEYS, required=("sigma_g", "c_g", "i_g"))
        if not {"sigma_g", "c_g", "i_g"} <= vals.keys():
            continue
        amp = vals.get("amplitude", "auto").strip()
        try:
            amplitude = None if amp == "auto" else float(amp)
        except ValueError:
            errors.append(f"{source}:{where(name, 'amplitude')}: amplitude must be a number or 'auto'")
            continue
        try:
            models.append(ModelConfig(model_id, vals["sigma_g"], vals["c_g"], vals["i_g"], amplitude))
        except ConfigError as exc:
            bad = next((k for k in ("sigma_g", "c_g", "i_g", "amplitude") if k in str(exc)), None)
            errors.append(f"{source}:{where(name, bad)}: {exc}")
    if not models and not errors:
        errors.append(f"{source}: no [model ...] sections")

    solvers = SOLVERS
    if "solvers" in study:
        solvers = tuple(s.strip() for s in study.pop("solvers").split(",") if s.strip())
        for s in solvers:
            if s not in SOLVERS:
                errors.append(f"{source}:{where('study', 'solvers')}: unknown solver '{s}'")

    if errors:
        raise ConfigError("\n".join(errors))

    npc = study.pop("nodes_per_cell", None)
    try:
        geometry = SubunitGeometry(**geo, **({} if npc is None else {"nodes_per_cell": npc}))
        cfg = StudyConfig(
            models=tuple(models),
            solvers=solvers,
            geometry=geometry,
            **study,
            **tissue,
            **{f"stim_{k}" if k in ("start", "end", "x_max") else k: v for k, v in stim.items()},
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: StudyConfig) -> None:
    problems = []
    if cfg.dt <= 0 or cfg.t_end <= 0:
        problems.append("dt and t_end must be positive")
    if min(cfg.sigma_i, cfg.sigma_e, cfg.c_m) <= 0:
        problems.append("sigma_i, sigma_e and c_m must be positive")
    if not 0 <= cfg.stim_start < cfg.stim_end:
        problems.append("stimulus window must satisfy 0 <= start < end")
    if cfg.linear_solver not in ("direct", "cg"):
        problems.append(f"linear_solver must be direct or cg, got {cfg.linear_solver!r}")
    if cfg.continuum_nodes < 3:
        problems.append("continuum_nodes must be at least 3")
    if cfg.calibration_cells < 1 or cfg.calibration_station >= cfg.calibration_cells * cfg.geometry.L:
        problems.append("calibration station must lie inside the calibration strand")
    ids = [m.model_id for m in cfg.models]
    if len(set(ids)) != len(ids):
        problems.append("duplicate model sections")
    if problems:
        raise ConfigError("; ".join(problems))


def load(path) -> StudyConfig:
    path = Path(path)
    return loads(path.read_text(), source=str(path))


def _num(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def dumps(cfg: StudyConfig) -> str:
    """Emit a config that parses back to an equal ``StudyConfig``."""
    g = cfg.geometry
    out = [
        "[study]",
        f"t_end = {_num(cfg.t_end)}  # ms",
        f"dt = {_num(cfg.dt)}  # ms",
        f"solvers = {', '.join(cfg.solvers)}",
        f"linear_solver = {cfg.linear_solver}",
        f"continuum_nodes = {cfg.continuum_nodes}",
        f"nodes_per_cell = {g.nodes_per_cell}",
        "",
        "[tissue]",
        f"sigma_i = {_num(cfg.sigma_i)}  # mS/mm",
        f"sigma_e = {_num(cfg.sigma_e)}  # mS/mm",
        f"c_m = {_num(cfg.c_m)}  # uF/mm^2",
        "",
        "[geometry]",
    ]
    for f in fields(SubunitGeometry):
        if f.name in _GEOMETRY_KEYS:
            unit = "" if f.type in ("int", int) or f.name.startswith("n_") else "  # mm"
            out.append(f"{f.name} = {_num(getattr(g, f.name))}{unit}")
    out += [
        "",
        "[stimulus]",
        f"start = {_num(cfg.stim_start)}  # ms",
        f"end = {_num(cfg.stim_end)}  # ms",
        f"x_max = {_num(cfg.stim_x_max)}  # mm",
        f"calibration_cells = {cfg.calibration_cells}",
        f"calibration_station = {_num(cfg.calibration_station)}  # mm",
    ]
    for m in cfg.models:
        out += [
            "",
            f"[model {m.model_id}]",
            f"sigma_g = {_num(m.sigma_g)}  # mS/mm",
            f"c_g = {_num(m.c_g)}  # uF/mm^2",
            f"i_g = {m.i_g}",
            f"amplitude = {'auto' if m.amplitude is None else _num(m.amplitude)}  # uA/mm^2",
        ]
    return "\n".join(out) + "\n"


def default_config() -> StudyConfig:
    return loads(resources.files("gapstrand").joinpath("data/default.ini").read_text(), source="default.ini")
