"""Run configuration: nested sections, validation, overrides and (de)serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
import tomli_w

from .field import ConfigurationError, TauGrid
from .integrator import SCHEMES, StepScheme
from .medium import Lineshape, combine_gaussian, discretize_lineshape, doppler_width, FrequencyGrid
from .noise import NoiseToggles
from .params import DerivedRates, DomainError, PhysicalParams, derive_rates

STABILITY_LIMIT = 0.1


@dataclass(frozen=True)
class SchemeSpec:
    kind: str = "rk4"
    d_tau: float = 0.02
    d_z: float = 0.1


@dataclass(frozen=True)
class WindowSpec:
    tau_min: float = -10.0
    tau_max: float = 30.0


@dataclass(frozen=True)
class PulseSpec:
    """Sech input pulse centred at tau0, rescaled to ``area_over_pi`` times pi."""

    tau0: float = 0.0
    area_over_pi: float = 2.0


@dataclass(frozen=True)
class LineshapeSpec:
    kind: str = "sharp"
    width: float = 0.0
    center: float = 0.0
    n_bands: int = 1
    cutoff: float = 5.0
    method: str = "gauss_legendre"
    doppler_mass: float | None = None


@dataclass(frozen=True)
class RunSpec:
    n_traj: int = 400
    master_seed: int = 20240601
    checkpoints: tuple = ()
    checkpoint_step: float = 0.1
    noise: bool = True
    exclude_diverged: bool = False
    antithetic: bool = False
    noise_refine: int = 0
    store_fields: bool = False
    frame: str = "light"
    n_boot: int = 200


SECTIONS = {
    "params": PhysicalParams,
    "scheme": SchemeSpec,
    "window": WindowSpec,
    "pulse": PulseSpec,
    "lineshape": LineshapeSpec,
    "noise": NoiseToggles,
    "run": RunSpec,
}


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    scheme: SchemeSpec = field(default_factory=SchemeSpec)
    window: WindowSpec = field(default_factory=WindowSpec)
    pulse: PulseSpec = field(default_factory=PulseSpec)
    lineshape: LineshapeSpec = field(default_factory=LineshapeSpec)
    noise: NoiseToggles = field(default_factory=NoiseToggles)
    run: RunSpec = field(default_factory=RunSpec)

    # --- derived objects -------------------------------------------------
    @property
    def rates(self) -> DerivedRates:
        return derive_rates(self.params)

    @property
    def step_scheme(self) -> StepScheme:
        n_z = int(round(self.params.L / self.scheme.d_z))
        if n_z < 1 or abs(n_z * self.scheme.d_z - self.params.L) > 1e-9 * self.params.L:
            raise ConfigurationError(f"L = {self.params.L} is not a whole number of cells of d_z = {self.scheme.d_z}")
        return StepScheme(self.scheme.kind, self.scheme.d_tau, self.params.L / n_z, n_z)

    @property
    def tau_grid(self) -> TauGrid:
        return TauGrid.from_step(self.window.tau_min, self.window.tau_max, self.scheme.d_tau)

    @property
    def lineshape_obj(self) -> Lineshape:
        ls = self.lineshape
        shape = Lineshape(ls.kind, ls.width, ls.center)
        if ls.doppler_mass is not None:
            width = doppler_width(self.params.beta_atom, ls.doppler_mass, self.params.omega0)
            shape = combine_gaussian(shape, width)
        return shape

    @property
    def frequency_grid(self) -> FrequencyGrid:
        ls = self.lineshape
        return discretize_lineshape(self.lineshape_obj, ls.n_bands, ls.cutoff, ls.method)

    @property
    def checkpoint_z(self) -> np.ndarray:
        if self.run.checkpoints:
            return np.asarray(self.run.checkpoints, dtype=float)
        sch = self.step_scheme
        every = max(1, int(round(self.run.checkpoint_step / sch.d_z)))
        k = np.arange(0, sch.n_z + 1, every)
        if k[-1] != sch.n_z:
            k = np.append(k, sch.n_z)
        return k * sch.d_z

    @property
    def peak_rabi(self) -> float:
        return 2.0 * self.params.A * self.pulse.area_over_pi / 2.0

    @property
    def deterministic(self) -> bool:
        return not self.run.noise or self.noise.scale == 0

    # --- validation ------------------------------------------------------
    def validate(self) -> "RunConfig":
        from .field import sech_soliton
        from .integrator import checkpoint_indices

        sch = self.step_scheme
        rates = self.rates
        bound = self.scheme.d_tau * max(rates.gamma_perp, self.peak_rabi)
        if not bound < STABILITY_LIMIT:
            raise ConfigurationError(
                f"d_tau * max(gamma_perp, peak Rabi frequency) = {bound:.3g} must stay below {STABILITY_LIMIT}"
            )
        if self.run.n_traj < 1:
            raise ConfigurationError("n_traj must be >= 1")
        if self.run.frame not in ("light", "group"):
            raise ConfigurationError("frame must be 'light' or 'group'")
        if not self.pulse.area_over_pi > 0:
            raise ConfigurationError("pulse area must be positive")
        grid = self.tau_grid
        sech_soliton(grid, self.params.A, self.pulse.tau0, self.params.delta)
        checkpoint_indices(self.checkpoint_z, sch)
        self.frequency_grid
        if self.run.frame == "group":
            shift = self.params.L * (1.0 / rates.v_g - 1.0 / self.params.c)
            if shift > 0.25 * (grid.tau_max - grid.tau_min):
                raise ConfigurationError("group-frame shift over the medium exceeds a quarter of the window")
        return self

    # --- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {}
        for name in SECTIONS:
            d = asdict(getattr(self, name))
            out[name] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ConfigurationError(f"unknown config section(s): {sorted(unknown)}")
        parts = {}
        for name, typ in SECTIONS.items():
            sec = dict(d.get(name, {}))
            known = {f.name for f in fields(typ)}
            bad = set(sec) - known
            if bad:
                raise ConfigurationError(f"unknown key(s) in [{name}]: {sorted(bad)}")
            if name == "run" and "checkpoints" in sec:
                sec["checkpoints"] = tuple(float(v) for v in sec["checkpoints"])
            try:
                parts[name] = typ(**sec)
            except (TypeError, DomainError) as exc:
                raise ConfigurationError(f"[{name}]: {exc}") from exc
        return cls(**parts)

    def to_toml(self) -> str:
        return tomli_w.dumps(_drop_none(self.to_dict()))

    def with_overrides(self, overrides) -> "RunConfig":
        d = self.to_dict()
        for item in overrides:
            if "=" not in item:
                raise ConfigurationError(f"override {item!r} is not key=value")
            key, raw = item.split("=", 1)
            section, name = _resolve_key(d, key.strip())
            d[section][name] = _parse_value(raw.strip())
        return RunConfig.from_dict(d)

    def replace_in(self, section: str, **changes) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **changes)})


def _drop_none(d):
    if isinstance(d, dict):
        return {k: _drop_none(v) for k, v in d.items() if v is not None}
    return d


def _resolve_key(d: dict, key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in d or name not in d[section]:
            raise ConfigurationError(f"unknown override key {key!r}")
        return section, name
    hits = [s for s in d if key in d[s]]
    if len(hits) != 1:
        raise ConfigurationError(f"override key {key!r} is {'ambiguous' if hits else 'unknown'}")
    return hits[0], key


def _parse_value(raw: str):
    low = raw.lower()
    if low in ("none", "null"):
        return None
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf"):
        return math.inf
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def read_document(path: str | Path) -> dict:
    """Raw config document from TOML or JSON; a manifest's ``config`` key is unwrapped."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            d = json.loads(text)
            if "config" in d:
                d = {**d["config"], **({"experiment": d["experiment"]} if d.get("experiment") else {})}
        else:
            d = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path} does not hold a table")
    return d


def load_config(path: str | Path) -> RunConfig:
    """Run configuration from a file; an ``[experiment]`` table, if present, is ignored."""
    d = read_document(path)
    d.pop("experiment", None)
    return RunConfig.from_dict(d)


def default_config_dir() -> Path:
    return Path(__file__).parent / "configs"


def load_named(name: str) -> RunConfig:
    return load_config(default_config_dir() / f"{name}.toml")
