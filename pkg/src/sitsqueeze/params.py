"""Physical inputs and the rate constants derived from them.

Units are dimensionless: the reference soliton time 1/A0 is 1, the vacuum
speed of light is 1, and every rate is measured in units of A0.  Temperatures
are given directly as beta = hbar*omega0/(k_B*T); ``None`` or ``inf`` means
zero temperature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields


class DomainError(ValueError):
    """Raised when an input lies outside the physical domain."""


def _is_zero_temperature(beta: float | None) -> bool:
    return beta is None or (isinstance(beta, float) and math.isinf(beta) and beta > 0)


def thermal_occupation(beta: float | None) -> float:
    """Bose occupation 1/(exp(beta) - 1).

    ``beta=None`` (or +inf) is the zero-temperature flag and returns exactly 0.
    ``expm1`` keeps the small-beta end accurate and underflows cleanly to 0
    at large beta.
    """
    if _is_zero_temperature(beta):
        return 0.0
    beta = float(beta)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    den = math.expm1(beta) if beta < 700 else math.inf
    return 0.0 if math.isinf(den) else 1.0 / den


def dipole_coupling(gamma0: float, lambda0: float, V: float, c: float = 1.0) -> tuple[float, float]:
    """Return (g2, G) for an ideal two-level atom.

    g2 = 3 gamma0 c lambda0^2 / (4 V) and G = V g2 / c = 3 gamma0 lambda0^2 / 4.
    """
    if gamma0 < 0 or not (lambda0 > 0 and V > 0 and c > 0):
        raise DomainError("dipole_coupling needs gamma0 >= 0 and positive lambda0, V, c")
    g2 = 3.0 * gamma0 * c * lambda0**2 / (4.0 * V)
    return g2, V * g2 / c


@dataclass(frozen=True)
class PhysicalParams:
    """All physical inputs of one simulation.

    ``G`` is the per-atom coupling and ``rho`` the linear density, so the
    drift sees only the product G*rho.  ``N_cell`` optionally fixes the atom
    number per spatial cell; when left as None it follows from rho*dz.
    ``Rz0`` is the ground-state inversion: -1/2 for spin-1/2 operators,
    -1 for Pauli operators.
    """

    gamma0: float = 0.0
    omega0: float = 1.0
    beta_field: float | None = None
    beta_atom: float | None = None
    kappa: float = 0.0
    G: float = 1e-4
    rho: float = 1e4
    delta: float = 0.0
    A: float = 1.0
    L: float = 1.0
    N_cell: float | None = None
    Rz0: float = -0.5
    c: float = 1.0
    gamma_p: float | None = None
    gamma_par: float | None = None
    z_unit: float = 1.0

    def __post_init__(self):
        if self.gamma0 < 0:
            raise DomainError("gamma0 must be >= 0")
        if self.kappa < 0:
            raise DomainError("kappa must be >= 0")
        if not self.rho > 0:
            raise DomainError("rho must be > 0")
        if self.G < 0:
            raise DomainError("G must be >= 0")
        if not self.A > 0:
            raise DomainError("A must be > 0")
        if not self.L > 0:
            raise DomainError("L must be > 0")
        if not self.c > 0:
            raise DomainError("c must be > 0")
        if self.N_cell is not None and self.N_cell < 1:
            raise DomainError("N_cell must be >= 1")
        if not self.Rz0 < 0:
            raise DomainError("Rz0 must be negative (ground state)")
        if self.gamma_p is not None and self.gamma_p < 0:
            raise DomainError("gamma_p must be >= 0")
        if self.gamma_par is not None and self.gamma_par < 0:
            raise DomainError("gamma_par must be >= 0")
        for name in ("beta_field", "beta_atom"):
            b = getattr(self, name)
            if not _is_zero_temperature(b) and not float(b) > 0:
                raise DomainError(f"{name} must be positive or None")

    @property
    def G_rho(self) -> float:
        return self.G * self.rho

    def atoms_per_cell(self, dz: float) -> float:
        n = self.N_cell if self.N_cell is not None else self.rho * dz
        if n < 1:
            raise DomainError(f"fewer than one atom per cell (rho*dz = {n})")
        return float(n)

    def replace(self, **changes) -> "PhysicalParams":
        d = asdict(self)
        d.update(changes)
        return PhysicalParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalParams":
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise DomainError(f"unknown parameter(s): {sorted(bad)}")
        return cls(**d)


@dataclass(frozen=True)
class DerivedRates:
    W12: float
    W21: float
    gamma_par: float
    gamma_perp: float
    gamma_p: float
    sigma_ss: float
    n_bar_field: float
    n_bar_atom: float
    v_g: float
    G_rho: float = field(default=1.0)
    G: float = field(default=1e-4)
    kappa: float = field(default=0.0)
    Rz0: float = field(default=-0.5)

    @property
    def relax_target(self) -> float:
        """Inversion the populations relax to, in the units of Rz0."""
        return self.sigma_ss * abs(self.Rz0)

    def to_dict(self) -> dict:
        return asdict(self)


def group_velocity(G_rho: float, A: float, delta: float, c: float = 1.0) -> float:
    return 1.0 / (1.0 / c + 0.5 * G_rho / (A**2 + delta**2))


def derive_rates(params: PhysicalParams) -> DerivedRates:
    """Rates used by the drift and the noise terms.

    W21 = gamma0 (1 + n_atom) and W12 = gamma0 n_atom, unless ``gamma_par`` is
    given explicitly, in which case the same W12/W21 ratio is kept and the sum
    is forced to gamma_par.
    """
    n_f = thermal_occupation(params.beta_field)
    n_a = thermal_occupation(params.beta_atom)
    if params.gamma_par is None:
        W21 = params.gamma0 * (1.0 + n_a)
        W12 = params.gamma0 * n_a
    else:
        W21 = params.gamma_par * (1.0 + n_a) / (1.0 + 2.0 * n_a)
        W12 = params.gamma_par * n_a / (1.0 + 2.0 * n_a)
    g_par = W12 + W21
    g_p = 3.0 * params.gamma0 if params.gamma_p is None else params.gamma_p
    sigma = -1.0 if g_par == 0 else (W12 - W21) / g_par
    return DerivedRates(
        W12=W12,
        W21=W21,
        gamma_par=g_par,
        gamma_perp=g_p + 0.5 * g_par,
        gamma_p=g_p,
        sigma_ss=sigma,
        n_bar_field=n_f,
        n_bar_atom=n_a,
        v_g=group_velocity(params.G_rho, params.A, params.delta, params.c),
        G_rho=params.G_rho,
        G=params.G,
        kappa=params.kappa,
        Rz0=params.Rz0,
    )


def forced_rates(rates: DerivedRates, W12: float, W21: float) -> DerivedRates:
    """Copy of ``rates`` with the pump and decay rates replaced."""
    g_par = W12 + W21
    d = asdict(rates)
    d.update(
        W12=W12,
        W21=W21,
        gamma_par=g_par,
        gamma_perp=rates.gamma_p + 0.5 * g_par,
        sigma_ss=-1.0 if g_par == 0 else (W12 - W21) / g_par,
    )
    return DerivedRates(**d)
