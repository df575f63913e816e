"""Named experiments: pinned documents, series of ensembles or sweeps, and their artifacts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

from . import __version__
from .artifacts import SCHEMA_VERSION, SWEEP_COLUMNS, checkpoint_rows, write_csv, write_json
from .config import RunConfig, _drop_none, default_config_dir, read_document
from .ensemble import SWEEP_AXES, EnsembleError, EnsembleStats, SweepPoint, config_hash, run_ensemble, sweep
from .field import ConfigurationError
from .plotting import Line, save_plot

EXPERIMENT_KINDS = ("single", "curves", "sweep")
CURVE_PLOTS = ("S_dB", "S", "area")
SWEEP_PLOTS = ("S_opt_dB", "atomic_absorption", "absorption")
FIGURES = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3", "fig4", "fig5")
AXIS_LABELS = {"theta0": "initial area / pi", "gamma_par": "gamma_par", "beta": "beta", "gamma0": "gamma0"}


@dataclass(frozen=True)
class SeriesSpec:
    """A labelled variant of the base configuration."""

    label: str
    overrides: tuple = ()


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run on top of a base configuration.

    ``single`` runs one ensemble; ``curves`` runs one ensemble per series;
    ``sweep`` runs ``values`` along ``axis`` for every series.  Areas on the
    ``theta0`` axis are in units of pi.
    """

    name: str = "run"
    kind: str = "single"
    axis: str | None = None
    values: tuple = ()
    series: tuple = ()
    full_n_traj: int | None = None
    plot: str = "S_dB"
    title: str = ""

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigurationError(f"experiment kind must be one of {EXPERIMENT_KINDS}")
        if self.kind == "sweep":
            if self.axis not in SWEEP_AXES:
                raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}")
            if not self.values:
                raise ConfigurationError("a sweep needs at least one value")
            if self.plot not in SWEEP_PLOTS:
                raise ConfigurationError(f"sweep plot must be one of {SWEEP_PLOTS}")
        elif self.plot not in CURVE_PLOTS:
            raise ConfigurationError(f"curve plot must be one of {CURVE_PLOTS}")
        labels = [s.label for s in self.series]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("series labels must be unique")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = list(self.values)
        d["series"] = [{"label": s.label, "overrides": list(s.overrides)} for s in self.series]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        known = {"name", "kind", "axis", "values", "series", "full_n_traj", "plot", "title"}
        bad = set(d) - known
        if bad:
            raise ConfigurationError(f"unknown key(s) in [experiment]: {sorted(bad)}")
        try:
            d["values"] = tuple(float(v) for v in d.get("values", ()))
            d["series"] = tuple(SeriesSpec(str(s["label"]), tuple(s.get("overrides", ()))) for s in d.get("series", ()))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"[experiment]: {exc}") from exc
        return cls(**d)

    def with_axis(self, axis: str, values=None) -> "ExperimentSpec":
        """The same series swept along ``axis``; keeps pinned values only when the axis matches."""
        if values is None:
            if self.axis != axis or not self.values:
                raise ConfigurationError(f"no pinned values for axis {axis!r}; pass --values")
            values = self.values
        plot = self.plot if self.plot in SWEEP_PLOTS else "S_opt_dB"
        return ExperimentSpec(self.name, "sweep", axis, tuple(float(v) for v in values), self.series,
                              self.full_n_traj, plot, self.title)


def load_document(path: str | Path) -> tuple[RunConfig, ExperimentSpec]:
    """Base configuration and experiment from a TOML document or a manifest JSON."""
    d = read_document(path)
    exp = d.pop("experiment", None)
    config = RunConfig.from_dict(d)
    spec = ExperimentSpec.from_dict(exp) if exp else ExperimentSpec()
    return config, spec


def figure_path(name: str) -> Path:
    return default_config_dir() / f"{name}.toml"


def series_configs(base: RunConfig, spec: ExperimentSpec) -> list[tuple[str, RunConfig]]:
    if not spec.series:
        return [("base", base)]
    return [(s.label, base.with_overrides(s.overrides)) for s in spec.series]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    base: RunConfig
    curves: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)


def run_experiment(base: RunConfig, spec: ExperimentSpec, workers: int = 1, log=None) -> ExperimentResult:
    """Run every series of ``spec``; raises EnsembleError when a sweep yields no usable point."""
    out = ExperimentResult(spec, base)
    for label, cfg in series_configs(base, spec):
        if log:
            log(f"[{spec.name}] series {label}")
        if spec.kind == "sweep":
            pts = sweep(cfg, spec.axis, spec.values, workers)
            out.points[label] = pts
        else:
            out.curves[label] = run_ensemble(cfg, workers)
    if spec.kind == "sweep":
        failed = [p for pts in out.points.values() for p in pts if p.stats is None]
        total = sum(len(p) for p in out.points.values())
        if failed and len(failed) == total:
            raise EnsembleError("every sweep point failed", {"errors": [f"{p.value}: {p.error}" for p in failed]})
    return out


def _db_err(S, err):
    return 10.0 / math.log(10.0) * np.asarray(err) / np.asarray(S)


def _curve_line(label: str, s: EnsembleStats, plot: str) -> Line:
    if plot == "area":
        return Line(label, s.z, s.area_mean / math.pi, s.stderr_area / math.pi)
    if plot == "S":
        return Line(label, s.z, s.S, s.stderr)
    return Line(label, s.z, s.S_dB, _db_err(s.S, s.stderr))


def experiment_document(base: RunConfig, spec: ExperimentSpec) -> str:
    d = _drop_none(base.to_dict())
    if spec.kind != "single" or spec.series:
        d["experiment"] = _drop_none(spec.to_dict())
    return tomli_w.dumps(d)


def write_artifacts(result: ExperimentResult, out_dir: str | Path, command: str) -> dict:
    """Write config.toml, manifest.json, data.csv and plot.svg (plus extras) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec, base = result.spec, result.base
    paths = {"config": out / "config.toml"}
    paths["config"].write_text(experiment_document(base, spec))
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "config": base.to_dict(),
        "config_hash": config_hash(base),
        "experiment": spec.to_dict(),
        "runs": {},
    }
    title = spec.title or spec.name
    if spec.kind == "sweep":
        rows, curve_rows, lines = [], [], []
        for label, pts in result.points.items():
            manifest["runs"][label] = [
                {"value": p.value, "error": p.error, "manifest": p.stats.manifest if p.stats else None} for p in pts
            ]
            for p in pts:
                rows.append({"series": label, **p.row()})
                if p.stats is not None:
                    curve_rows += checkpoint_rows(p.stats, series=label, value=p.value)
            ok = [p for p in pts if p.stats is not None]
            x = np.array([p.value for p in ok])
            if spec.plot == "S_opt_dB":
                y = np.array([p.row()["S_opt_dB"] for p in ok])
                e = _db_err([p.stats.S_opt for p in ok], [p.stats.stderr_opt for p in ok])
                lines.append(Line(label, x, y, e))
            else:
                prefix = f"{label}: " if len(result.points) > 1 else ""
                for col, tag in (("absorption", "energy loss"), ("atomic_absorption", "atomic excitation")):
                    lines.append(Line(prefix + tag, x, np.array([p.row()[col] for p in ok])))
        paths["data"] = write_csv(out / "data.csv", rows, "sweep", ("series", *SWEEP_COLUMNS))
        if curve_rows:
            paths["curves"] = write_csv(out / "curves.csv", curve_rows, "checkpoints")
        paths["plot"] = save_plot(out / "plot.svg", lines, AXIS_LABELS[spec.axis], spec.plot, title)
    else:
        rows, lines, areas = [], [], []
        for label, s in result.curves.items():
            manifest["runs"][label] = s.manifest
            rows += checkpoint_rows(s, series=label)
            lines.append(_curve_line(label, s, spec.plot))
            areas.append(_curve_line(label, s, "area"))
        paths["data"] = write_csv(out / "data.csv", rows, "checkpoints")
        ylabel = {"area": "pulse area / pi", "S": "S", "S_dB": "S (dB)"}[spec.plot]
        paths["plot"] = save_plot(out / "plot.svg", lines, "z", ylabel, title)
        if spec.plot != "area":
            paths["area_plot"] = save_plot(out / "area.svg", areas, "z", "pulse area / pi", title)
    paths["manifest"] = write_json(out / "manifest.json", manifest)
    return paths


def summarize(result: ExperimentResult) -> dict:
    """Short machine-readable summary printed by the CLI."""
    if result.spec.kind == "sweep":
        return {label: [p.row() for p in pts] for label, pts in result.points.items()}
    return {
        label: {"S_opt": s.S_opt, "S_opt_dB": float(s.S_dB[s.opt_index]), "z_opt": s.z_opt, "stderr_opt": s.stderr_opt,
                "area_out_over_pi": float(s.area_mean[-1] / math.pi), "diverged": int(s.diverged[-1])}
        for label, s in result.curves.items()
    }


__all__ = [
    "ExperimentResult", "ExperimentSpec", "FIGURES", "SeriesSpec", "SweepPoint", "figure_path", "load_document",
    "run_experiment", "series_configs", "summarize", "write_artifacts",
]
