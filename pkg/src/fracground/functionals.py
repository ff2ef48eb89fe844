"""Scalar functionals and gradients on the discrete box.

Quadratic terms are spectral sums, potential integrals physical-space
quadrature; the mixed representation is exact for the discrete model
(Parseval holds to round-off on the lattice).

The dilation family enters through the substitution xi -> xi / t applied to
the stored spectrum, never by resampling, so the scaling derivative

    d/dt [energy of u(./t)] = t^(N-1) g(t)

and its theta = log t counterpart are evaluated in closed form.  By
construction ``scaling_derivative(0, u) == pohozaev(u)`` bit-for-bit and
``g_of_t(u, 1) == pohozaev(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingPotentialGradient
from .model import AutonomousNonlinearity, Envelope, SpatialNonlinearity
from .spectral_core import Grid, RealField, apply_fractional_op, apply_inverse_fractional_op

__all__ = [
    "EnergyBreakdown",
    "SpectralData",
    "energy_I",
    "grad_I",
    "pohozaev_P",
    "augmented_I",
    "dtheta_I",
    "g_of_t",
    "g_prime_of_t",
    "comparison_I_bar",
    "energy_J",
    "grad_J",
    "pohozaev_spatial",
    "quadratic_energy",
    "potential_energy",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy pieces of a field; total = quadratic - potential exactly."""

    quadratic: float      # (1/2) ||u||_alpha^2
    potential: float      # integral of F(u) resp. F(x, u)
    total: float
    pohozaev: float
    dtheta0: float        # theta-derivative of the dilation energy at 0

    def as_dict(self) -> dict:
        return {
            "quadratic": self.quadratic,
            "potential": self.potential,
            "total": self.total,
            "pohozaev": self.pohozaev,
            "dtheta0": self.dtheta0,
        }


@dataclass(frozen=True)
class SpectralData:
    """Cached spectral weights of a field, reused across t-evaluations.

    q holds 4 pi^2 |xi|^2 on the lattice, w the Parseval-weighted power
    (2L)^N |c_k|^2, so sum(w * (1+q)^alpha) = ||u||_alpha^2.
    """

    grid: Grid
    q: np.ndarray
    w: np.ndarray

    @classmethod
    def of(cls, u: RealField) -> "SpectralData":
        g = u.grid
        c = np.fft.fftn(u.values) / u.values.size
        w = g.box_volume * (c.real**2 + c.imag**2)
        q = 4.0 * np.pi**2 * g.xi_sq
        return cls(g, np.broadcast_to(q, g.shape), w)

    def norm_alpha_sq(self) -> float:
        return float(np.sum(self.w * (1.0 + self.q) ** self.grid.alpha))

    def l2_sq(self) -> float:
        return float(np.sum(self.w))


def quadratic_energy(u: RealField) -> float:
    """(1/2) ||u||_alpha^2 via the spectral Parseval sum."""
    return 0.5 * SpectralData.of(u).norm_alpha_sq()


def potential_energy(u: RealField, f: AutonomousNonlinearity) -> float:
    """h^N sum F(u_j)."""
    return u.grid.integrate(f.primitive(u.values))


def g_of_t(u: RealField, f: AutonomousNonlinearity, t: float, data: SpectralData | None = None) -> float:
    """Bracketed factor in d/dt [energy of u(./t)] = t^(N-1) g(t).

    g(t) = (N-2a)/2 * sum (1+q/t^2)^a w  -  N * int F(u)
           + a * sum (1+q/t^2)^(a-1) w.

    g(1) equals the Pohozaev functional bit-for-bit.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    d = data if data is not None else SpectralData.of(u)
    n, a = u.grid.dim, u.grid.alpha
    base = 1.0 + d.q / t**2
    pa = base ** (a - 1.0)
    quad = float(np.sum(pa * base * d.w))        # (1+q/t^2)^a weights
    low = float(np.sum(pa * d.w))
    f_int = potential_energy(u, f)
    return 0.5 * (n - 2.0 * a) * quad - n * f_int + a * low


def g_prime_of_t(u: RealField, f: AutonomousNonlinearity, t: float, data: SpectralData | None = None) -> float:
    """Closed-form g'(t); strictly negative for N >= 2, N > 2 alpha."""
    d = data if data is not None else SpectralData.of(u)
    n, a = u.grid.dim, u.grid.alpha
    base = 1.0 + d.q / t**2
    brace = (0.5 * n - 1.0) + 0.5 * (n - 2.0 * a) * d.q / t**2
    return float(-2.0 * a * np.sum(base ** (a - 2.0) * (d.q / t**3) * d.w * brace))


def pohozaev_P(u: RealField, f: AutonomousNonlinearity) -> float:
    """Pohozaev functional; zero at (regular) critical points."""
    return g_of_t(u, f, 1.0)


def dtheta_I(theta: float, u: RealField, f: AutonomousNonlinearity, data: SpectralData | None = None) -> float:
    """theta-derivative of the dilation energy; equals P(u(./e^theta))."""
    t = float(np.exp(theta))
    return t ** u.grid.dim * g_of_t(u, f, t, data)


def augmented_I(theta: float, u: RealField, f: AutonomousNonlinearity, data: SpectralData | None = None) -> float:
    """Energy of the dilated field u(./e^theta), evaluated spectrally.

    At theta = 0 this is exactly energy_I(u).total (same sums).
    """
    d = data if data is not None else SpectralData.of(u)
    n, a = u.grid.dim, u.grid.alpha
    t = float(np.exp(theta))
    quad = 0.5 * float(np.sum((1.0 + d.q / t**2) ** a * d.w))
    return t**n * (quad - potential_energy(u, f))


def energy_I(u: RealField, f: AutonomousNonlinearity) -> EnergyBreakdown:
    """Full breakdown: quadratic, potential, total, Pohozaev, dtheta at 0."""
    data = SpectralData.of(u)
    quad = 0.5 * data.norm_alpha_sq()
    pot = potential_energy(u, f)
    p = g_of_t(u, f, 1.0, data)
    return EnergyBreakdown(
        quadratic=quad, potential=pot, total=quad - pot, pohozaev=p, dtheta0=p
    )


def grad_I(u: RealField, f: AutonomousNonlinearity, preconditioned: bool = False) -> RealField:
    """L^2 gradient (1-Delta)^alpha u - f(u), or its Sobolev preconditioning.

    The preconditioned form u - (1-Delta)^(-alpha) f(u) divides the raw
    gradient by the operator symbol, making descent steps mesh-independent.
    """
    fu = RealField(u.grid, f(u.values))
    if preconditioned:
        return RealField(u.grid, u.values - apply_inverse_fractional_op(fu).values)
    return RealField(u.grid, apply_fractional_op(u).values - fu.values)


def comparison_I_bar(u: RealField, env: Envelope) -> float:
    """delta0/2 ||u||_alpha^2 - int H_bar(u); a lower bound for the energy."""
    data = SpectralData.of(u)
    return 0.5 * env.delta0 * data.norm_alpha_sq() - u.grid.integrate(env.H_bar(u.values))


# --- spatial functionals -----------------------------------------------------


def _spatial_potential(u: RealField, sp: SpatialNonlinearity, limit: bool) -> float:
    if limit:
        return u.grid.integrate(np.asarray(sp.F_inf(u.values), dtype=np.float64))
    Fx = sp.F(u.grid.x_coords, u.values)
    return u.grid.integrate(np.asarray(Fx, dtype=np.float64))


def energy_J(u: RealField, sp: SpatialNonlinearity, limit: bool = False) -> EnergyBreakdown:
    """Spatial energy; limit=True evaluates the translation-invariant limit.

    The Pohozaev entry carries the spatial identity residual when the
    x-gradient of F is available, NaN otherwise (reported, not raised).
    """
    data = SpectralData.of(u)
    quad = 0.5 * data.norm_alpha_sq()
    pot = _spatial_potential(u, sp, limit)
    if limit:
        p = dtheta_limit = g_of_t(u, sp.limit_nonlinearity(), 1.0, data)
        return EnergyBreakdown(quad, pot, quad - pot, p, dtheta_limit)
    try:
        p = pohozaev_spatial(u, sp, data)
    except MissingPotentialGradient:
        p = float("nan")
    return EnergyBreakdown(quad, pot, quad - pot, p, p)


def grad_J(u: RealField, sp: SpatialNonlinearity, preconditioned: bool = False) -> RealField:
    fu = RealField(u.grid, np.asarray(sp.f(u.grid.x_coords, u.values), dtype=np.float64))
    if preconditioned:
        return RealField(u.grid, u.values - apply_inverse_fractional_op(fu).values)
    return RealField(u.grid, apply_fractional_op(u).values - fu.values)


def pohozaev_spatial(u: RealField, sp: SpatialNonlinearity, data: SpectralData | None = None) -> float:
    """Spatial Pohozaev residual

    (N-2a)/2 ||u||_a^2 - N int F(x,u) - int (x . grad_x F)(x,u)
    + a int (1+4pi^2|xi|^2)^(a-1) |u^|^2,

    zero at regular critical points when grad_x F exists and is bounded.
    """
    if sp.x_dot_gradF is None:
        raise MissingPotentialGradient(
            f"nonlinearity {sp.name!r} provides no (x . grad_x F) evaluator"
        )
    d = data if data is not None else SpectralData.of(u)
    g = u.grid
    n, a = g.dim, g.alpha
    base = 1.0 + d.q
    quad = float(np.sum(base**a * d.w))
    low = float(np.sum(base ** (a - 1.0) * d.w))
    f_int = _spatial_potential(u, sp, limit=False)
    drift = g.integrate(np.asarray(sp.x_dot_gradF(g.x_coords, u.values), dtype=np.float64))
    return 0.5 * (n - 2.0 * a) * quad - n * f_int - drift + a * low
