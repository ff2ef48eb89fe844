"""Nonlinearity definitions, numerical condition checks, envelope construction.

The autonomous model is an odd continuous f with primitive F; the built-in
library covers pure powers a|s|^{p-1}s, double powers, and tabulated user
functions.  The growth/sign hypotheses are asymptotic, so they are verified
on finite sample ranges and reported, never proved.

The spatial model is f(x, s) = -V(x) s + g(x, s) with limits (V_inf, g_inf)
at |x| -> infinity and a superquadratic exponent mu > 2 for the g-part.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .errors import (
    ARConditionViolated,
    BadExponent,
    NoAdmissibleConstants,
    PotentialBelowMinusOne,
)

__all__ = [
    "AutonomousNonlinearity",
    "SpatialNonlinearity",
    "Envelope",
    "BLReport",
    "SpatialReport",
    "power_nonlinearity",
    "double_power_nonlinearity",
    "table_nonlinearity",
    "critical_exponent",
    "check_bl_conditions",
    "pick_small_s_constants",
    "build_envelope",
    "make_spatial_problem",
    "builtin_spatial_example",
    "DELTA0_LADDER",
]

# Largest passing value wins; larger delta0 gives a better-conditioned
# comparison functional.
DELTA0_LADDER = (0.499, 0.45, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15, 0.10, 0.05, 0.001)


@dataclass(frozen=True)
class AutonomousNonlinearity:
    """Odd nonlinearity f with primitive F(s) = int_0^s f.

    df is optional; when absent, derivative() falls back to a central
    difference (used only to build constraint gradients, not in energies).
    """

    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=np.float64))

    def primitive(self, s):
        return self.F(np.asarray(s, dtype=np.float64))

    def derivative(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.df is not None:
            return self.df(s)
        ds = 1e-6 * np.maximum(np.abs(s), 1.0)
        return (self.f(s + ds) - self.f(s - ds)) / (2.0 * ds)


def power_nonlinearity(p: float, a: float = 1.0) -> AutonomousNonlinearity:
    """f(s) = a |s|^(p-1) s, F(s) = a |s|^(p+1) / (p+1)."""
    if p <= 1.0:
        raise ValueError(f"power exponent must exceed 1, got {p}")

    def f(s):
        return a * np.abs(s) ** (p - 1.0) * s

    def F(s):
        return a * np.abs(s) ** (p + 1.0) / (p + 1.0)

    def df(s):
        return a * p * np.abs(s) ** (p - 1.0)

    return AutonomousNonlinearity(f, F, name="power", params={"p": p, "a": a}, df=df)


def double_power_nonlinearity(p: float, q: float, a: float = 1.0, b: float = 1.0) -> AutonomousNonlinearity:
    """f(s) = a |s|^(p-1) s + b |s|^(q-1) s."""
    if min(p, q) <= 1.0:
        raise ValueError("power exponents must exceed 1")

    def f(s):
        return a * np.abs(s) ** (p - 1.0) * s + b * np.abs(s) ** (q - 1.0) * s

    def F(s):
        return (
            a * np.abs(s) ** (p + 1.0) / (p + 1.0)
            + b * np.abs(s) ** (q + 1.0) / (q + 1.0)
        )

    def df(s):
        return a * p * np.abs(s) ** (p - 1.0) + b * q * np.abs(s) ** (q - 1.0)

    return AutonomousNonlinearity(
        f, F, name="double_power", params={"p": p, "q": q, "a": a, "b": b}, df=df
    )


def table_nonlinearity(s_values, f_values, name: str = "table") -> AutonomousNonlinearity:
    """Odd interpolant of tabulated (s, f(s)) samples, s >= 0 ascending."""
    s_tab = np.asarray(s_values, dtype=np.float64)
    f_tab = np.asarray(f_values, dtype=np.float64)
    if s_tab.ndim != 1 or s_tab.shape != f_tab.shape:
        raise ValueError("table columns must be 1-D and of equal length")
    if np.any(s_tab < 0) or np.any(np.diff(s_tab) <= 0):
        raise ValueError("table abscissae must be nonnegative and increasing")
    if s_tab[0] > 0.0:
        s_tab = np.concatenate([[0.0], s_tab])
        f_tab = np.concatenate([[0.0], f_tab])
    F_tab = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(s_tab) * (f_tab[1:] + f_tab[:-1]))])

    def f(s):
        return np.sign(s) * np.interp(np.abs(s), s_tab, f_tab)

    def F(s):
        return np.interp(np.abs(s), s_tab, F_tab)

    return AutonomousNonlinearity(f, F, name=name, params={"points": len(s_tab)})


def critical_exponent(dim: int, alpha: float) -> float:
    """2N/(N - 2 alpha), infinite when N <= 2 alpha."""
    if dim <= 2.0 * alpha:
        return np.inf
    return 2.0 * dim / (dim - 2.0 * alpha)


@dataclass(frozen=True)
class BLReport:
    """Witnessed verdicts for the four growth/sign conditions."""

    odd_ok: bool
    odd_residual: float
    subunit_slope_ok: bool          # limsup_{s->0} f(s)/s < 1
    slope_at_zero: float
    subcritical_ok: bool            # |f(s)| / |s|^(2*_a - 1) -> 0
    growth_ratio_end: float
    growth_ratio_decreasing: bool
    positive_well_ok: bool          # exists s0 with F(s0) - s0^2/2 > 0
    s0: Optional[float]
    s_max: float

    @property
    def passed(self) -> bool:
        return (
            self.odd_ok
            and self.subunit_slope_ok
            and self.subcritical_ok
            and self.positive_well_ok
        )


def check_bl_conditions(f: AutonomousNonlinearity, grid, samples: int = 512, s_max: float = 100.0) -> BLReport:
    """Sample-based verdicts on the four conditions; reports, never throws."""
    if samples < 100:
        raise ValueError("samples must be at least 100")
    crit = critical_exponent(grid.dim, grid.alpha)

    s_pos = np.geomspace(1e-8, s_max, samples)
    odd_residual = float(np.abs(f(s_pos) + f(-s_pos)).max())
    odd_ok = odd_residual <= 1e-10 * max(1.0, float(np.abs(f(s_pos)).max()))

    small = np.geomspace(1e-8, 1e-3, samples)
    slope = float(np.abs(f(small) / small).max())
    subunit_slope_ok = np.isfinite(slope) and slope < 1.0

    if np.isinf(crit):
        # N <= 2 alpha: every polynomial growth is subcritical
        growth_end = 0.0
        growth_decreasing = True
        subcritical_ok = True
    else:
        tail = np.geomspace(s_max / 100.0, s_max, samples)
        ratio = np.abs(f(tail)) / tail ** (crit - 1.0)
        growth_end = float(ratio[-1])
        growth_decreasing = bool(ratio[-1] < ratio[0] * (1.0 - 1e-9))
        subcritical_ok = growth_decreasing and growth_end < ratio[0]

    well = np.linspace(1e-3, s_max, max(samples, 4096))
    margin = f.primitive(well) - 0.5 * well**2
    pos = np.nonzero(margin > 0.0)[0]
    s0 = float(well[pos[0]]) if pos.size else None

    return BLReport(
        odd_ok=odd_ok,
        odd_residual=odd_residual,
        subunit_slope_ok=subunit_slope_ok,
        slope_at_zero=slope,
        subcritical_ok=subcritical_ok,
        growth_ratio_end=growth_end,
        growth_ratio_decreasing=growth_decreasing,
        positive_well_ok=s0 is not None,
        s0=s0,
        s_max=s_max,
    )


def pick_small_s_constants(f: AutonomousNonlinearity, samples: int = 4096) -> tuple:
    """Largest ladder delta0 with an s1 > 0 so that s f(s) <= (1-2 delta0) s^2
    on a fine sample of [-s1, s1]."""
    s1_ladder = np.geomspace(2.0, 1e-3, 24)
    for delta0 in DELTA0_LADDER:
        bound = 1.0 - 2.0 * delta0
        for s1 in s1_ladder:
            s = np.linspace(0.0, s1, samples)[1:]
            if np.all(s * f(s) <= bound * s**2):
                return float(delta0), float(s1)
    raise NoAdmissibleConstants(
        "no delta0 >= 0.001 admits s1 >= 0.001; the slope condition at 0 fails"
    )


@dataclass(frozen=True)
class Envelope:
    """Odd monotone majorant of the superlinear part of f.

    h(s) = (f(s) - (1-delta0) s)_+ for s >= 0 extended oddly;
    h_bar(s) = s^p0 * sup_{0<t<=s} h(t)/t^p0 (running supremum on the grid);
    H_bar is the primitive of h_bar.  h_bar vanishes on [0, s2].
    """

    delta0: float
    p0: float
    s2: float
    s_grid: np.ndarray = dc_field(repr=False)
    h_values: np.ndarray = dc_field(repr=False)
    h_bar_values: np.ndarray = dc_field(repr=False)
    H_bar_values: np.ndarray = dc_field(repr=False)
    ratio_values: np.ndarray = dc_field(repr=False, default=None)
    s1: Optional[float] = None

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    @property
    def _sup_ratio(self) -> float:
        return float(self.h_bar_values[-1] / self.s_grid[-1] ** self.p0)

    def h(self, s):
        s = np.asarray(s, dtype=np.float64)
        return np.sign(s) * np.interp(np.abs(s), self.s_grid, self.h_values)

    def h_bar(self, s):
        s = np.asarray(s, dtype=np.float64)
        a = np.abs(s)
        inside = np.interp(a, self.s_grid, self.h_bar_values)
        # beyond the table the envelope continues as (sup ratio) * s^p0
        out = self._sup_ratio * a**self.p0
        return np.sign(s) * np.where(a <= self.s_max, inside, out)

    def H_bar(self, s):
        s = np.asarray(s, dtype=np.float64)
        a = np.abs(s)
        inside = np.interp(a, self.s_grid, self.H_bar_values)
        tail = self.H_bar_values[-1] + self._sup_ratio * (
            a ** (self.p0 + 1.0) - self.s_max ** (self.p0 + 1.0)
        ) / (self.p0 + 1.0)
        return np.where(a <= self.s_max, inside, tail)


def build_envelope(
    f: AutonomousNonlinearity,
    delta0: float,
    p0: float,
    s_max: float = 100.0,
    resolution: int = 2**14,
    crit_exponent: float = np.inf,
    s1: Optional[float] = None,
) -> Envelope:
    """Tabulate h, h_bar, H_bar on a grid log-spaced near 0, linear beyond 1."""
    if not 0.0 < delta0 < 0.5:
        raise ValueError(f"delta0 must lie in (0, 1/2), got {delta0}")
    if not (1.0 < p0 < crit_exponent - 1.0):
        raise BadExponent(
            f"p0={p0} outside (1, {crit_exponent - 1.0}) for this grid"
        )
    n_log = resolution // 2
    lo = np.geomspace(1e-8, min(1.0, s_max), n_log, endpoint=s_max <= 1.0)
    if s_max > 1.0:
        hi = np.linspace(1.0, s_max, resolution - n_log)
        s = np.concatenate([lo, hi])
    else:
        s = lo

    h = np.maximum(f(s) - (1.0 - delta0) * s, 0.0)
    ratio = np.maximum.accumulate(h / s**p0)
    # the max with h absorbs 1-ulp rounding of ratio * s^p0 where the
    # supremum is attained at the current point (there h_bar = h exactly)
    h_bar = np.maximum(ratio * s**p0, h)
    # cumulative trapezoid from 0 (h_bar -> 0 at the origin like s^p0)
    H_bar = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(s) * (h_bar[1:] + h_bar[:-1]))])
    H_bar += 0.5 * s[0] * h_bar[0]

    zero = np.nonzero(ratio == 0.0)[0]
    s2 = float(s[zero[-1]]) if zero.size else 0.0
    return Envelope(
        delta0=float(delta0),
        p0=float(p0),
        s2=s2,
        s_grid=s,
        h_values=h,
        h_bar_values=h_bar,
        H_bar_values=H_bar,
        ratio_values=ratio,
        s1=s1,
    )


# --- spatial problems -------------------------------------------------------


@dataclass(frozen=True)
class SpatialReport:
    """Sampled verdicts for the x-dependent conditions."""

    odd_ok: bool
    inf_V: float
    dominates_limit_ok: bool        # F(x,s) >= F_inf(s)
    worst_domination_margin: float
    superquadratic_ok: bool         # 0 < mu G(x,s) <= g(x,s) s
    witness: Optional[tuple]

    @property
    def passed(self) -> bool:
        return self.odd_ok and self.dominates_limit_ok and self.superquadratic_ok


@dataclass(frozen=True)
class SpatialNonlinearity:
    """f(x, s) = -V(x) s + g(x, s) with limits V_inf, g_inf at infinity.

    Callables receive coordinates stacked on the trailing axis (shape
    (..., N)); s arrays broadcast against the leading axes.
    x_dot_gradF, when present, evaluates (x . grad_x F)(x, s) for the spatial
    Pohozaev functional.
    """

    V: Callable
    g: Callable
    G: Callable
    v_inf: float
    g_inf: Callable
    G_inf: Callable
    mu: float
    dim: int
    x_dot_gradF: Optional[Callable] = None
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)
    validation: Optional[SpatialReport] = None

    def f(self, x, s):
        return -self.V(x) * s + self.g(x, s)

    def F(self, x, s):
        return -0.5 * self.V(x) * s**2 + self.G(x, s)

    def f_inf(self, s):
        return -self.v_inf * s + self.g_inf(s)

    def F_inf(self, s):
        return -0.5 * self.v_inf * s**2 + self.G_inf(s)

    def limit_nonlinearity(self) -> AutonomousNonlinearity:
        return AutonomousNonlinearity(
            f=lambda s: self.f_inf(s),
            F=lambda s: self.F_inf(s),
            name=f"{self.name}_limit",
            params={"v_inf": self.v_inf},
        )


def _default_sample_points(dim: int, extent: float = 10.0, per_axis: int = 7) -> np.ndarray:
    axes = np.meshgrid(*([np.linspace(-extent, extent, per_axis)] * dim), indexing="ij")
    return np.stack(axes, axis=-1).reshape(-1, dim)


def make_spatial_problem(
    V: Callable,
    g: Callable,
    limits: tuple,
    mu: float,
    dim: int,
    G: Optional[Callable] = None,
    G_inf: Optional[Callable] = None,
    x_dot_gradF: Optional[Callable] = None,
    name: str = "custom",
    sample_extent: float = 10.0,
    s_samples: int = 64,
    s_max: float = 10.0,
) -> SpatialNonlinearity:
    """Assemble and validate a spatial nonlinearity.

    G (the s-primitive of g) defaults to a trapezoid quadrature of g; the
    built-in family supplies closed forms.  Raises on a violated (F2)/(F5);
    the (F1)/(F4) verdicts land in the attached validation report.
    """
    if mu <= 2.0:
        raise ValueError(f"mu must exceed 2, got {mu}")
    v_inf, g_inf = limits

    if G is None:
        def G(x, s, _g=g):
            s = np.asarray(s, dtype=np.float64)
            nodes = np.linspace(0.0, 1.0, 129)
            vals = np.array([_g(x, t * s) for t in nodes])
            return s * np.trapezoid(vals, nodes, axis=0)

    if G_inf is None:
        def G_inf(s, _g_inf=g_inf):
            s = np.asarray(s, dtype=np.float64)
            nodes = np.linspace(0.0, 1.0, 129)
            vals = np.array([_g_inf(t * s) for t in nodes])
            return s * np.trapezoid(vals, nodes, axis=0)

    pts = _default_sample_points(dim, sample_extent)
    inf_V = float(np.min(V(pts)))
    if inf_V <= -1.0:
        raise PotentialBelowMinusOne(f"sampled inf V = {inf_V} <= -1")

    sp = SpatialNonlinearity(
        V=V, g=g, G=G, v_inf=float(v_inf), g_inf=g_inf, G_inf=G_inf,
        mu=float(mu), dim=dim, x_dot_gradF=x_dot_gradF, name=name,
    )

    s_vals = np.concatenate([
        -np.geomspace(1e-3, s_max, s_samples)[::-1],
        np.geomspace(1e-3, s_max, s_samples),
    ])
    x_b = pts[:, None, :]          # (npts, 1, N)
    s_b = s_vals[None, :]          # (1, ns)

    odd_residual = float(np.abs(g(x_b, s_b) + g(x_b, -s_b)).max())
    odd_ok = odd_residual <= 1e-10 * max(1.0, float(np.abs(g(x_b, s_b)).max()))

    dom = sp.F(x_b, s_b) - sp.F_inf(s_b)
    worst_dom = float(dom.min())
    dominates_ok = worst_dom >= -1e-12

    Gv = G(x_b, s_b)
    gs = g(x_b, s_b) * s_b
    ar = mu * Gv - gs
    bad = np.nonzero((ar > 1e-10 * np.maximum(1.0, np.abs(gs))) | (Gv <= 0.0))
    witness = None
    if bad[0].size:
        i, j = bad[0][0], bad[1][0]
        witness = (tuple(pts[i]), float(s_vals[j]))
        raise ARConditionViolated(
            f"mu*G > g*s or G <= 0 at x={witness[0]}, s={witness[1]:.4g}"
        )

    report = SpatialReport(
        odd_ok=odd_ok,
        inf_V=inf_V,
        dominates_limit_ok=dominates_ok,
        worst_domination_margin=worst_dom,
        superquadratic_ok=True,
        witness=witness,
    )
    return SpatialNonlinearity(
        V=sp.V, g=sp.g, G=sp.G, v_inf=sp.v_inf, g_inf=sp.g_inf, G_inf=sp.G_inf,
        mu=sp.mu, dim=sp.dim, x_dot_gradF=sp.x_dot_gradF, name=sp.name,
        params=sp.params, validation=report,
    )


def builtin_spatial_example(
    dim: int = 2,
    b0: float = 0.5,
    a0: float = 1.0,
    p: float = 3.0,
) -> SpatialNonlinearity:
    """V(x) = -b0 e^{-|x|^2},  g(x, s) = (1 + a0 e^{-|x|^2}) |s|^{p-1} s.

    Limits V_inf = 0, g_inf(s) = |s|^{p-1}s and mu = p + 1, so the
    superquadratic identity mu G = g s holds exactly; F(x,s) >= F_inf(s)
    with strict excess on any ball when a0, b0 > 0.  b0 = a0 = 0 reduces to
    the autonomous pure power.
    """
    if not 0.0 <= b0 < 1.0:
        raise ValueError("b0 must lie in [0, 1) to keep inf V > -1")

    def bump(x):
        return np.exp(-np.sum(np.asarray(x, dtype=np.float64) ** 2, axis=-1))

    def V(x):
        return -b0 * bump(x)

    def g(x, s):
        return (1.0 + a0 * bump(x)) * np.abs(s) ** (p - 1.0) * s

    def G(x, s):
        return (1.0 + a0 * bump(x)) * np.abs(s) ** (p + 1.0) / (p + 1.0)

    def g_inf(s):
        return np.abs(s) ** (p - 1.0) * s

    def G_inf(s):
        return np.abs(s) ** (p + 1.0) / (p + 1.0)

    def x_dot_gradF(x, s):
        x = np.asarray(x, dtype=np.float64)
        r2 = np.sum(x**2, axis=-1)
        core = 0.5 * b0 * s**2 + a0 * np.abs(s) ** (p + 1.0) / (p + 1.0)
        return -2.0 * r2 * np.exp(-r2) * core

    return make_spatial_problem(
        V=V, g=g, limits=(0.0, g_inf), mu=p + 1.0, dim=dim,
        G=G, G_inf=G_inf, x_dot_gradF=x_dot_gradF,
        name="gaussian_bump_power",
    )
