"""
Exact Kerr metric data in three charts.

The subextremal Kerr exterior (mass ``m``, spin ``0 <= a < m``) is handled in

* Boyer-Lindquist coordinates ``(t, r, theta, phi)`` -- singular at the
  horizon ``r_plus = m + sqrt(m^2 - a^2)``,
* ingoing Eddington-Finkelstein coordinates ``(v_plus, r, theta, phi_plus)``
  with ``dv_plus = dt + dr/mu`` and ``dphi_plus = dphi + (a/Delta) dr`` --
  regular across the horizon,
* "normalized" coordinates ``(tau, r, theta, phitilde)`` obtained from the
  ingoing chart by subtracting radial modifier functions,
  ``tau = v_plus - t_mod(r)`` and ``phitilde = phi_plus - phi_mod(r)``,
  chosen so the level sets of ``tau`` are everywhere spacelike, cross the
  future horizon, and become asymptotically null at large ``r``.

Only the slopes ``t_mod'`` and ``phi_mod'`` ever enter the metric; they are
fixed piecewise (``m^2/r^2`` and ``0`` near the horizon, the Boyer-Lindquist
values ``1/mu`` and ``a/Delta`` on the middle window, ``2/mu - m^2/r^2`` and
``2a/Delta`` far out) and bridged with C^2 blends on two transition annuli.
Inside each blend the slope must stay strictly inside the open interval that
keeps the tau-level-sets spacelike; :func:`build_mod_functions` certifies
that on a grid and reports the worst margin.

Conventions: geometric units, signature (-,+,+,+), spin stored nonnegative
(the geometry is invariant under ``(a, phitilde) -> (-a, -phitilde)``).
All formulas keep ``m`` explicit but the package default is ``m = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import (
    BlendInfeasible,
    ChartMismatch,
    ExtremalOrSuper,
    HorizonSingular,
    NonpositiveMass,
)

# Polar axis is excluded; every implemented formula is regular on (0, pi).
THETA_MIN = 1e-6


class Chart(Enum):
    BOYER_LINDQUIST = "boyer-lindquist"
    INGOING_EF = "ingoing-ef"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class BlackHoleParams:
    """Mass, spin and the derived horizon data."""

    m: float
    a: float
    r_plus: float
    r_minus: float
    omega_H: float


def new_params(a: float, m: float = 1.0) -> BlackHoleParams:
    """Validate (a, m) and populate horizon radii and angular velocity.

    Raises
    ------
    NonpositiveMass
        If ``m <= 0``.
    ExtremalOrSuper
        If ``|a| >= m`` (extremal and super-extremal spins are rejected).
    """
    if not m > 0:
        raise NonpositiveMass(f"mass must be positive, got m={m}")
    if abs(a) >= m:
        raise ExtremalOrSuper(f"need |a| < m, got a={a}, m={m}")
    a = abs(float(a))
    m = float(m)
    root = math.sqrt(m * m - a * a)
    r_plus = m + root
    r_minus = m - root
    omega_H = a / (2.0 * m * r_plus)
    return BlackHoleParams(m=m, a=a, r_plus=r_plus, r_minus=r_minus, omega_H=omega_H)


# -- scalar field helpers (ufunc-friendly) -----------------------------------

def horizon_poly(p: BlackHoleParams, r):
    """Delta = r^2 - 2 m r + a^2."""
    return r * r - 2.0 * p.m * r + p.a * p.a


def mu(p: BlackHoleParams, r):
    """mu = Delta / (r^2 + a^2)."""
    return horizon_poly(p, r) / (r * r + p.a * p.a)


def q2(p: BlackHoleParams, r, theta):
    """|q|^2 = r^2 + a^2 cos^2(theta)."""
    c = np.cos(theta)
    return r * r + p.a * p.a * c * c


def ring_sigma2(p: BlackHoleParams, r, theta):
    """Sigma^2 = (r^2 + a^2)^2 - a^2 sin^2(theta) Delta."""
    s = np.sin(theta)
    return (r * r + p.a * p.a) ** 2 - p.a * p.a * s * s * horizon_poly(p, r)


def smoothstep(x):
    """Quintic smoothstep: 0 for x<=0, 1 for x>=1, C^2-flat at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


# -- coordinate points and metric containers --------------------------------

@dataclass(frozen=True)
class CoordPoint:
    """A point of one chart: (t|tau|v_plus, r, theta, phi-like)."""

    chart: Chart
    coords: tuple[float, float, float, float]

    def __post_init__(self):
        _, r, theta, _ = self.coords
        if not (THETA_MIN <= theta <= math.pi - THETA_MIN):
            raise ValueError(f"theta={theta} outside ({THETA_MIN}, pi-{THETA_MIN})")
        if r <= 0.0:
            raise ValueError(f"r={r} must be positive")

    @property
    def r(self) -> float:
        return self.coords[1]

    @property
    def theta(self) -> float:
        return self.coords[2]


@dataclass(frozen=True)
class MetricComponents:
    """Covariant metric, closed-form inverse, and volume density at a point."""

    g: np.ndarray
    ginv: np.ndarray
    sqrt_det: float

    def product_defect(self) -> float:
        """max |g.ginv - I|, the closed-form consistency residual."""
        return float(np.max(np.abs(self.g @ self.ginv - np.eye(4))))

    def signature_ok(self) -> bool:
        """One negative and three positive eigenvalues of g."""
        ev = np.linalg.eigvalsh(self.g)
        return bool(np.sum(ev < 0) == 1 and np.sum(ev > 0) == 3)


# -- Boyer-Lindquist ----------------------------------------------------------

def _bl_arrays(p: BlackHoleParams, r, theta):
    """Vectorized BL metric and inverse; returns (g, ginv, sqrt_det)."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(r, theta).shape
    dl = horizon_poly(p, r)
    qq = q2(p, r, theta)
    ss = ring_sigma2(p, r, theta)
    s2 = np.sin(theta) ** 2
    g = np.zeros(shape + (4, 4))
    gi = np.zeros(shape + (4, 4))
    g[..., 0, 0] = -(dl - p.a * p.a * s2) / qq
    g[..., 0, 3] = g[..., 3, 0] = -2.0 * p.a * p.m * r * s2 / qq
    g[..., 1, 1] = qq / dl
    g[..., 2, 2] = qq
    g[..., 3, 3] = ss * s2 / qq
    gi[..., 0, 0] = -ss / (qq * dl)
    gi[..., 0, 3] = gi[..., 3, 0] = -2.0 * p.a * p.m * r / (qq * dl)
    gi[..., 1, 1] = dl / qq
    gi[..., 2, 2] = 1.0 / qq
    gi[..., 3, 3] = (dl - p.a * p.a * s2) / (qq * dl * s2)
    return g, gi, qq * np.sin(theta)


def metric_bl(p: BlackHoleParams, pt: CoordPoint) -> MetricComponents:
    """Kerr metric in Boyer-Lindquist coordinates, valid for r > r_plus."""
    if pt.chart is not Chart.BOYER_LINDQUIST:
        raise ChartMismatch(f"expected Boyer-Lindquist point, got {pt.chart}")
    if horizon_poly(p, pt.r) <= 0.0:
        raise HorizonSingular(f"Delta(r={pt.r}) <= 0: chart singular there")
    g, gi, sd = _bl_arrays(p, pt.r, pt.theta)
    return MetricComponents(g=g, ginv=gi, sqrt_det=float(sd))


# -- ingoing Eddington-Finkelstein -------------------------------------------

def _ef_arrays(p: BlackHoleParams, r, theta):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(r, theta).shape
    qq = q2(p, r, theta)
    ss = ring_sigma2(p, r, theta)
    s2 = np.sin(theta) ** 2
    dl = horizon_poly(p, r)
    g = np.zeros(shape + (4, 4))
    gi = np.zeros(shape + (4, 4))
    g[..., 0, 0] = -(1.0 - 2.0 * p.m * r / qq)
    g[..., 0, 1] = g[..., 1, 0] = 1.0
    g[..., 0, 3] = g[..., 3, 0] = -2.0 * p.a * p.m * r * s2 / qq
    g[..., 1, 3] = g[..., 3, 1] = -p.a * s2
    g[..., 2, 2] = qq
    g[..., 3, 3] = ss * s2 / qq
    gi[..., 0, 0] = p.a * p.a * s2 / qq
    gi[..., 0, 1] = gi[..., 1, 0] = (r * r + p.a * p.a) / qq
    gi[..., 0, 3] = gi[..., 3, 0] = p.a / qq
    gi[..., 1, 1] = dl / qq
    gi[..., 1, 3] = gi[..., 3, 1] = p.a / qq
    gi[..., 2, 2] = 1.0 / qq
    gi[..., 3, 3] = 1.0 / (qq * s2)
    return g, gi, qq * np.sin(theta)


def metric_ef(p: BlackHoleParams, pt: CoordPoint) -> MetricComponents:
    """Kerr metric in the ingoing chart; finite and nondegenerate at r_plus."""
    if pt.chart is not Chart.INGOING_EF:
        raise ChartMismatch(f"expected ingoing-EF point, got {pt.chart}")
    g, gi, sd = _ef_arrays(p, pt.r, pt.theta)
    return MetricComponents(g=g, ginv=gi, sqrt_det=float(sd))


# -- modifier functions -------------------------------------------------------

def default_deltas(p: BlackHoleParams) -> tuple[float, float]:
    """(delta_H, delta_BL) defaults: delta_BL = (1-a/m)/10, delta_H = delta_BL/100."""
    delta_bl = (1.0 - p.a / p.m) / 10.0
    return delta_bl / 100.0, delta_bl


@dataclass(frozen=True)
class ModFunctions:
    """Radial slopes t_mod'(r), phi_mod'(r) with their blend bookkeeping.

    ``t_mod_prime`` is dimensionless, ``phi_mod_prime`` has units 1/length.
    ``blend_inner``/``blend_outer`` are the two transition intervals;
    ``margin`` is the worst normalized distance of t_mod' from the ends of
    the spacelike window over the certification grid.
    """

    t_mod_prime: Callable[[np.ndarray], np.ndarray]
    phi_mod_prime: Callable[[np.ndarray], np.ndarray]
    blend_inner: tuple[float, float]
    blend_outer: tuple[float, float]
    delta_H: float
    delta_BL: float
    margin: float


def _spacelike_window(p: BlackHoleParams, r, theta):
    """Open interval (lo, hi) that t_mod'(r) must stay inside.

    lo is computed in rationalized form to avoid cancellation when Delta
    is small near the horizon.
    """
    n = r * r + p.a * p.a
    dl = horizon_poly(p, r)
    s2 = np.sin(theta) ** 2
    root = np.sqrt(n * n - p.a * p.a * s2 * dl)
    lo = p.a * p.a * s2 / (n + root)
    hi = (n + root) / dl
    return lo, hi


def build_mod_functions(
    p: BlackHoleParams,
    delta_H: float | None = None,
    delta_BL: float | None = None,
    n_r: int = 400,
    n_theta: int = 64,
) -> ModFunctions:
    """Construct C^2 modifier slopes and certify the spacelike window.

    The slopes follow their closed forms off the transition annuli
    ``[r_plus(1+delta_BL), r_plus(1+2 delta_BL)]`` and ``[12m, 13m]`` and are
    bridged with a quintic-smoothstep convex blend, which matches value and
    first two derivatives at both ends (the smoothstep is C^2-flat there).
    Since a convex combination of two admissible slopes stays between them
    pointwise, the spacelike condition is inherited from the endpoint
    formulas; the grid check quantifies the margin.

    Raises
    ------
    BlendInfeasible
        If the ordering preconditions on (delta_H, delta_BL) fail, or the
        certification grid finds a violation (reported with worst point).
    """
    if delta_H is None or delta_BL is None:
        dh, dbl = default_deltas(p)
        delta_H = dh if delta_H is None else delta_H
        delta_BL = dbl if delta_BL is None else delta_BL
    if not (0.0 < delta_H <= delta_BL / 5.0):
        raise BlendInfeasible(
            f"need 0 < delta_H <= delta_BL/5, got delta_H={delta_H}, delta_BL={delta_BL}"
        )
    if not delta_BL <= (1.0 - p.a / p.m) / 5.0:
        raise BlendInfeasible(
            f"need delta_BL <= (1 - a/m)/5 = {(1.0 - p.a / p.m) / 5.0}, got {delta_BL}"
        )
    rp = p.r_plus
    b1 = (rp * (1.0 + delta_BL), rp * (1.0 + 2.0 * delta_BL))
    b2 = (12.0 * p.m, 13.0 * p.m)
    if b1[1] >= b2[0]:
        raise BlendInfeasible("inner blend reaches 12m; decrease delta_BL")
    m2 = p.m * p.m
    a = p.a

    def t_prime(r):
        r = np.asarray(r, dtype=float)
        # Delta vanishes at r_plus < b1[0]; clamp the argument of the
        # Boyer-Lindquist-value branches so the unused side of the blend
        # never divides by zero
        rc = np.maximum(r, b1[0])
        inner = m2 / (r * r)
        mid = 1.0 / mu(p, rc)
        outer = 2.0 / mu(p, rc) - m2 / (rc * rc)
        s1 = smoothstep((r - b1[0]) / (b1[1] - b1[0]))
        s2_ = smoothstep((r - b2[0]) / (b2[1] - b2[0]))
        out = np.where(r <= b1[1], inner + s1 * (mid - inner), mid)
        return np.where(r >= b2[0], mid + s2_ * (outer - mid), out)

    def phi_prime(r):
        r = np.asarray(r, dtype=float)
        rc = np.maximum(r, b1[0])
        mid = a / horizon_poly(p, rc)
        s1 = smoothstep((r - b1[0]) / (b1[1] - b1[0]))
        s2_ = smoothstep((r - b2[0]) / (b2[1] - b2[0]))
        out = np.where(r <= b1[1], s1 * mid, mid)
        return np.where(r >= b2[0], (1.0 + s2_) * mid, out)

    # certification grid: both blend annuli, all theta
    margin = math.inf
    worst = None
    theta = np.linspace(THETA_MIN, math.pi - THETA_MIN, n_theta)
    for lo_r, hi_r in (b1, b2):
        r = np.linspace(lo_r, hi_r, n_r)
        tp = t_prime(r)[:, None]
        lo, hi = _spacelike_window(p, r[:, None], theta[None, :])
        gap = np.minimum(tp - lo, hi - tp) / (hi - lo)
        k = np.unravel_index(np.argmin(gap), gap.shape)
        if gap[k] < margin:
            margin = float(gap[k])
            worst = (float(r[k[0]]), float(theta[k[1]]))
    if margin <= 0.0:
        raise BlendInfeasible(f"spacelike window violated, worst point (r, theta)={worst}")
    if np.any(phi_prime(np.linspace(rp * (1 - delta_H), 20 * p.m, 2000)) < -1e-15):
        raise BlendInfeasible("phi_mod' must have the sign of a")
    return ModFunctions(
        t_mod_prime=t_prime,
        phi_mod_prime=phi_prime,
        blend_inner=b1,
        blend_outer=b2,
        delta_H=delta_H,
        delta_BL=delta_BL,
        margin=margin,
    )


# -- normalized chart ---------------------------------------------------------

def _normalized_arrays(p: BlackHoleParams, mods: ModFunctions, r, theta):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(r, theta).shape
    qq = q2(p, r, theta)
    ss = ring_sigma2(p, r, theta)
    dl = horizon_poly(p, r)
    n = r * r + p.a * p.a
    s2 = np.sin(theta) ** 2
    tp = mods.t_mod_prime(r)
    fp = mods.phi_mod_prime(r)
    mu_ = dl / n

    A = -(1.0 - 2.0 * p.m * r / qq)
    B = -4.0 * p.a * p.m * r * s2 / qq
    C = -2.0 * p.a * s2
    D = ss * s2 / qq

    g = np.zeros(shape + (4, 4))
    g[..., 0, 0] = A
    g[..., 0, 3] = g[..., 3, 0] = B / 2.0
    g[..., 0, 1] = g[..., 1, 0] = A * tp + 1.0 + (B / 2.0) * fp
    g[..., 1, 3] = g[..., 3, 1] = (B / 2.0) * tp + C / 2.0 + D * fp
    g[..., 1, 1] = A * tp * tp + 2.0 * tp + B * tp * fp + C * fp + D * fp * fp
    g[..., 2, 2] = qq
    g[..., 3, 3] = D

    gi = np.zeros(shape + (4, 4))
    gi[..., 0, 0] = (p.a * p.a * s2 - 2.0 * n * tp + dl * tp * tp) / qq
    gi[..., 1, 1] = dl / qq
    gi[..., 0, 1] = gi[..., 1, 0] = n * (1.0 - mu_ * tp) / qq
    gi[..., 1, 3] = gi[..., 3, 1] = (p.a - dl * fp) / qq
    gi[..., 0, 3] = gi[..., 3, 0] = (p.a * (1.0 - tp) - fp * n * (1.0 - mu_ * tp)) / qq
    gi[..., 2, 2] = 1.0 / qq
    gi[..., 3, 3] = 1.0 / (qq * s2) - 2.0 * p.a * fp / qq + dl * fp * fp / qq
    return g, gi, qq * np.sin(theta)


def inverse_metric_normalized(
    p: BlackHoleParams, mods: ModFunctions, pt: CoordPoint
) -> MetricComponents:
    """Metric data in the normalized chart for r >= r_plus(1 - delta_H)."""
    if pt.chart is not Chart.NORMALIZED:
        raise ChartMismatch(f"expected normalized-chart point, got {pt.chart}")
    if pt.r < p.r_plus * (1.0 - mods.delta_H):
        raise ValueError(f"r={pt.r} below the inner boundary r_plus(1-delta_H)")
    g, gi, sd = _normalized_arrays(p, mods, pt.r, pt.theta)
    return MetricComponents(g=g, ginv=gi, sqrt_det=float(sd))


# -- certification suite ------------------------------------------------------

def _sample_points(p, chart, mods, n, rng):
    """Random admissible (r, theta) for one chart."""
    theta = rng.uniform(THETA_MIN * 10, math.pi - THETA_MIN * 10, n)
    if chart is Chart.BOYER_LINDQUIST:
        # keep clear of Delta=0 so the closed-form inverse stays finite
        u = rng.uniform(math.log(1.0 + 1e-6), math.log(500.0), n)
        r = p.r_plus * np.exp(u)
    else:
        dh = mods.delta_H if mods is not None else default_deltas(p)[0]
        lo = p.r_plus * (1.0 - dh)
        r = lo + (1000.0 * p.m - lo) * rng.uniform(0, 1, n) ** 3
    return r, theta


def run_geometry_suite(
    p: BlackHoleParams,
    mods: ModFunctions | None = None,
    n_points: int = 10_000,
    seed: int = 0,
) -> dict:
    """Run the full invariant suite for one spin; returns per-check margins.

    Checks: closed-form inverse consistency in all three charts, the
    determinant identity sqrt|det g| = |q|^2 sin(theta), signature,
    negativity of g^{tau tau} over the normalized chart, agreement of the
    Boyer-Lindquist and normalized inverse metrics on the middle window,
    and the large-r falloff rates of the normalized inverse metric.
    """
    if mods is None:
        mods = build_mod_functions(p)
    rng = np.random.default_rng(seed)
    out: dict = {"a": p.a, "m": p.m, "blend_margin": mods.margin, "checks": {}}

    def record(name, value, bound, larger_is_worse=True):
        ok = value < bound if larger_is_worse else value > bound
        out["checks"][name] = {"value": float(value), "bound": float(bound), "pass": bool(ok)}

    for chart, builder in (
        (Chart.BOYER_LINDQUIST, lambda r, t: _bl_arrays(p, r, t)),
        (Chart.INGOING_EF, lambda r, t: _ef_arrays(p, r, t)),
        (Chart.NORMALIZED, lambda r, t: _normalized_arrays(p, mods, r, t)),
    ):
        r, theta = _sample_points(p, chart, mods, n_points, rng)
        g, gi, sd = builder(r, theta)
        prod = np.einsum("...ij,...jk->...ik", g, gi)
        defect = np.max(np.abs(prod - np.eye(4)))
        record(f"ginv_identity_{chart.value}", defect, 1e-10)
        det = np.abs(np.linalg.det(g))
        rel = np.max(np.abs(np.sqrt(det) - sd) / sd)
        record(f"sqrt_det_{chart.value}", rel, 1e-9)

    # spacelike tau-level-sets over the full radial range
    dh = mods.delta_H
    r = np.geomspace(p.r_plus * (1.0 - dh) + 1e-12, 1000.0 * p.m, 4000)
    theta = np.linspace(THETA_MIN, math.pi - THETA_MIN, 65)
    _, gi, _ = _normalized_arrays(p, mods, r[:, None], theta[None, :])
    record("gtautau_negative", np.max(gi[..., 0, 0]), 0.0)

    # chart agreement where the modifier slopes equal the BL values exactly
    r = np.linspace(mods.blend_inner[1], 12.0 * p.m, 400)
    theta = rng.uniform(0.1, math.pi - 0.1, 400)
    _, gi_n, _ = _normalized_arrays(p, mods, r, theta)
    _, gi_b, _ = _bl_arrays(p, r, theta)
    record("bl_window_agreement", np.max(np.abs(gi_n - gi_b)), 1e-10)

    # large-r falloffs of the normalized inverse metric
    r = np.geomspace(100.0 * p.m, 5e4 * p.m, 200)
    theta = rng.uniform(0.1, math.pi - 0.1, 200)
    _, gi, _ = _normalized_arrays(p, mods, r, theta)
    c1 = np.max(np.abs(gi[..., 1, 1] - 1.0) * r / p.m)
    c2 = np.max(np.abs(gi[..., 0, 1] + 1.0) * r**2 / p.m**2)
    c3 = np.max(np.abs(gi[..., 0, 0]) * r**2 / p.m**2)
    record("falloff_grr", c1, 10.0)
    record("falloff_grtau", c2, 10.0)
    record("falloff_gtautau", c3, 10.0)

    # signature spot check
    r, theta = _sample_points(p, Chart.NORMALIZED, mods, 200, rng)
    g, _, _ = _normalized_arrays(p, mods, r, theta)
    ev = np.linalg.eigvalsh(g)
    sig_ok = np.all(np.sum(ev < 0, axis=-1) == 1) and np.all(np.sum(ev > 0, axis=-1) == 3)
    out["checks"]["signature"] = {"value": float(sig_ok), "bound": 1.0, "pass": bool(sig_ok)}

    out["pass"] = all(c["pass"] for c in out["checks"].values())
    return out
