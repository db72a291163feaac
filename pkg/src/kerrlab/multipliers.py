"""
Regime-wise multiplier profiles and grid certification of their positivity.

For each frequency regime a quadruple of radial profiles (f, h, y, z) is
assembled so that the bulk current

    Q = (r^2+a^2) [ (h + dy/dr + 2 df/dr) xitilde^2
                    + A omega_H dchi_z/dr xi_phi xitilde
                    + h (V - xi_tau^2) + dy/dr (xi_tau^2 - V)
                    - (y + f) dV/dr ]

is, after completing the square in xitilde, bounded below by a positive
multiple of the regime's weight P_j on the window
[r_plus(1+delta_H'), R m].  The xitilde^2 coefficient d must stay positive,
the linear part defines eta = w/d, and the remainder c - w^2/d is
independent of xi_r; the certifier scans it on an (r, Xi) grid.

Profile shapes per regime
-------------------------
SR / A : f rises from -1 through 0 at r_max(Xi) to 1 - m/R with slope
         q(r)/r^2 (two slopes bridged by a smoothstep around r_max);
         h = B(1-b') bump(r_max, delta0) - c' m/r^2; z carries the cutoff
         chi_z that drops from 1 to 0 just below r_max.
T / TR1: y is the increasing exponential template pinned to 0 at the inner
         boundary and 1 - m/R at R (steepness kappa = m for T and
         C2/delta_F^2, range-capped, for TR1); h = -c' m/r^2; z = A xi_tau.
TR2    : when the potential has an interior minimum, y is a negative
         C^infty-flat template supported in [r_+', r_min + c0] whose slope
         carries the coercivity there, and f dips by at most eps1 before
         vanishing at r_max and rising to 1 - m/R; without a minimum, y = 0
         and f is the monotone single-slope profile (negative at the inner
         boundary, zero at r_max).  h keeps the far cutoff so it vanishes
         near r_max; z = A xi_tau.

The boundary certificate evaluates the summed flux symbols at
r = r_plus(1+delta_H') against the square completions rho^2 + pi^2 per
regime and fits the constant in the O(mu) residual bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConstantSearchFailed, PositivityFailure, BoundarySignFailure
from .geometry import BlackHoleParams, ModFunctions, horizon_poly, mu, smoothstep
from .phase_space import (
    REGIMES,
    classify_potential_arrays,
    dV_dr,
    k_plus,
    partition_weights_arrays,
    potential_V,
    proximity_scale,
    r_trap_arrays,
    sample_triplets,
    threshold_radii,
    _raw_weights,
)
from .symbols import s1_symbol, s2_symbol

TOL_CMIN = 1e-10
TOL_DMIN = 1e-10
EXP_RANGE_CAP = 30.0  # max exponent range of the steep TR1 template


def smoothstep_deriv(x):
    x = np.clip(x, 0.0, 1.0)
    return 30.0 * x * x * (1.0 - x) ** 2


def _bump(r, center, half):
    """C^2 bump: 1 on [center-half/2, center+half/2], 0 outside +-half."""
    up = smoothstep((r - (center - half)) / (half / 2.0))
    down = smoothstep(((center + half) - r) / (half / 2.0))
    return up * down


def _bump_deriv(r, center, half):
    up = smoothstep((r - (center - half)) / (half / 2.0))
    down = smoothstep(((center + half) - r) / (half / 2.0))
    dup = smoothstep_deriv((r - (center - half)) / (half / 2.0)) / (half / 2.0)
    ddown = -smoothstep_deriv(((center + half) - r) / (half / 2.0)) / (half / 2.0)
    return dup * down + up * ddown


@dataclass(frozen=True)
class Constants:
    """One assignment of the regime constants."""

    A: float
    B: float
    c_prime: float
    delta0: float
    C0: float
    C2: float
    delta_F: float
    R: float = 20.0
    delta_Hp: float | None = None

    @property
    def b_prime(self) -> float:
        return self.c_prime / 4.0


@dataclass
class PreparedXi:
    """Per-frequency data a regime's profiles depend on (unit triplets)."""

    xt: np.ndarray
    xp: np.ndarray
    lam: np.ndarray
    r_max: np.ndarray | None = None
    r_min: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class MultiplierSet:
    """Profile evaluators for one regime.

    ``profiles(prep, r)`` evaluates every profile and its radial derivative
    on the outer grid r[:, None] x prep[None, :], returning a dict with
    keys f, df, h, y, dy, dchi_z (all shaped (n_r, n_xi)) plus the constant
    z-amplitude.  ``prepare`` computes the frequency-dependent geometry
    (critical radii, slopes) once per triplet set.
    """

    regime: str
    p: BlackHoleParams
    mods: ModFunctions
    const: Constants

    # -- per-frequency preparation -----------------------------------------

    def prepare(self, xt, xp, lam) -> PreparedXi:
        xt = np.atleast_1d(np.asarray(xt, float))
        xp = np.atleast_1d(np.asarray(xp, float))
        lam = np.atleast_1d(np.asarray(lam, float))
        nrm = np.sqrt(xt**2 + xp**2 + lam**2)
        xt, xp, lam = xt / nrm, xp / nrm, lam / nrm
        prep = PreparedXi(xt=xt, xp=xp, lam=lam)
        p, c = self.p, self.const
        rp1 = self.r_inner
        if self.regime in ("SR", "A"):
            case, _, rmx = classify_potential_arrays(p, xt, xp, lam)
            if np.any(case != 1):
                raise PositivityFailure(
                    f"{self.regime}: potential without unique maximum on support")
            prep.r_max = rmx
            d0 = np.minimum(c.delta0, np.minimum(0.5 * (rmx - rp1),
                                                 0.25 * (c.R * p.m - rmx)))
            w = d0 / 4.0
            c1, c2 = self._sr_slopes(rmx, w)
            prep.extra = {"d0": d0, "w": w, "c1": c1, "c2": c2}
            if np.any(c1 <= 0) or np.any(c2 <= 0):
                raise PositivityFailure(f"{self.regime}: nonmonotone f slopes")
        elif self.regime == "TR2":
            case, rmn, rmx = classify_potential_arrays(p, xt, xp, lam)
            if np.any(case == 0):
                raise PositivityFailure("TR2: strictly decreasing potential on support")
            prep.r_max = rmx
            prep.r_min = rmn
            has_min = (case == 2) & (np.nan_to_num(rmn, nan=-np.inf) > rp1 + 1e-3 * p.m)
            r4 = np.full_like(rmx, np.nan)
            if np.any(has_min):
                r4[has_min] = threshold_radii(
                    p, xt[has_min], xp[has_min], lam[has_min], c.delta_F, 0.5,
                    R=c.R, delta_Hp=self.delta_Hp)
                if np.any(r4[has_min] <= rmn[has_min]):
                    raise PositivityFailure("TR2: half-level radius below r_min")
            c0 = np.where(has_min, np.minimum(c.delta0, 0.5 * (r4 - rmn)), np.nan)
            r_y = rmn + c0
            D = r_y - rp1
            kappa = np.clip(c.C2, 2.0, EXP_RANGE_CAP)
            prep.extra = {
                "has_min": has_min, "r_y": r_y, "D": D, "kappa": kappa,
                "alpha": (1.0 - 1.0 / c.R) / (1.0 / rmx - 1.0 / (c.R * p.m)),
                "eps1": c.c_prime * p.m,
                "w2": np.minimum(c.delta0, 0.25 * (c.R * p.m - rmx)) / 2.0,
            }
        return prep

    @property
    def r_inner(self) -> float:
        return self.p.r_plus * (1.0 + self.delta_Hp)

    @property
    def delta_Hp(self) -> float:
        if self.const.delta_Hp is not None:
            return self.const.delta_Hp
        return 1.5 * (1.0 - self.p.a / self.p.m) / 1000.0

    def _sr_slopes(self, rmx, w):
        """Solve the two endpoint conditions for the f-profile slopes."""
        p, c = self.p, self.const
        rp1, Rm = self.r_inner, c.R * p.m
        r0 = rmx - w
        # antiderivative differences of 1/r^2 and S((r-r0)/2w)/r^2
        u1 = -1.0 / rp1 + 1.0 / rmx
        v1 = 1.0 / rmx - 1.0 / Rm
        u2 = _ramp_antideriv(rp1, r0, w) - _ramp_antideriv(rmx, r0, w)
        v2 = _ramp_antideriv(Rm, r0, w) - _ramp_antideriv(rmx, r0, w)
        det = u1 * v2 - u2 * v1
        rhs1, rhs2 = -1.0, 1.0 - 1.0 / c.R
        # solve [u1 u2; v1 v2] [c1, e]^T = [rhs1, rhs2]^T with e = c2 - c1
        e = (u1 * rhs2 - v1 * rhs1) / det
        c1 = (rhs1 * v2 - rhs2 * u2) / det
        return c1, c1 + e

    # -- profile evaluation --------------------------------------------------

    def profiles(self, prep: PreparedXi, r: np.ndarray) -> dict:
        p, c = self.p, self.const
        r = np.asarray(r, float)[:, None]
        n_xi = prep.xt.shape[0]
        shape = (r.shape[0], n_xi)
        out = {k: np.zeros(shape) for k in ("f", "df", "h", "y", "dy", "dchi_z")}
        out["z_amp"] = c.A
        out["chi_z0"] = 0.0  # value of chi_z at the inner boundary
        rp1, Rm = self.r_inner, c.R * p.m

        if self.regime in ("SR", "A"):
            rmx = prep.r_max[None, :]
            d0 = prep.extra["d0"][None, :]
            w = prep.extra["w"][None, :]
            c1 = prep.extra["c1"][None, :]
            c2 = prep.extra["c2"][None, :]
            r0 = rmx - w
            q = c1 + (c2 - c1) * smoothstep((r - r0) / (2.0 * w))
            out["df"] = q / r**2
            F = (c1 * (-1.0 / r) + (c2 - c1) * _ramp_antideriv(r, r0, w))
            F_max = (c1 * (-1.0 / rmx) + (c2 - c1) * _ramp_antideriv(rmx, r0, w))
            out["f"] = F - F_max
            bump = _bump(r, rmx, d0)
            out["h"] = c.B * (1.0 - c.b_prime) * bump - c.c_prime * p.m / r**2
            # chi_z: 1 up to r_max - d0/2, 0 beyond r_max - d0/4
            x = (r - (rmx - d0 / 2.0)) / (d0 / 4.0)
            out["dchi_z"] = -smoothstep_deriv(x) / (d0 / 4.0)
            out["chi_z0"] = 1.0
        elif self.regime in ("T", "TR1"):
            if self.regime == "T":
                kappa = p.m
            else:
                kappa = min(c.C2 / c.delta_F**2,
                            EXP_RANGE_CAP / (1.0 / rp1 - 1.0 / Rm))
            e_in = math.exp(-kappa / rp1)
            e_out = math.exp(-kappa / Rm)
            c_t = (1.0 - 1.0 / c.R) / (e_out - e_in)
            y = c_t * (np.exp(-kappa / r) - e_in)
            dy = c_t * kappa / r**2 * np.exp(-kappa / r)
            out["y"] = np.broadcast_to(y, shape).copy()
            out["dy"] = np.broadcast_to(dy, shape).copy()
            out["h"] = np.broadcast_to(-c.c_prime * p.m / r**2, shape).copy()
        else:  # TR2
            rmx = prep.r_max[None, :]
            alpha = prep.extra["alpha"][None, :]
            w2 = prep.extra["w2"][None, :]
            has_min = prep.extra["has_min"]
            gdiff = 1.0 / rmx - 1.0 / r
            # far cutoff keeps h away from r_max <= 8m
            chi_hi = smoothstep((r - 10.0 * p.m) / p.m)
            out["h"] = np.broadcast_to(-c.c_prime * p.m / r**2 * chi_hi, shape).copy()
            # activation of the f-profile
            psi = np.ones(shape)
            a_lo = np.full(shape, 0.0)
            if np.any(has_min):
                r_y = prep.extra["r_y"][None, :]
                D = prep.extra["D"][None, :]
                kap = prep.extra["kappa"]
                # y-template: -C_y exp(kappa (1 - D/(r_y - r))) below r_y
                gap = np.maximum(r_y - r, 0.0)
                expo = np.where(gap > 0, kap * (1.0 - D / np.maximum(gap, 1e-300)), -np.inf)
                tpl = np.exp(expo)
                dtpl = np.where(gap > 0, kap * D / np.maximum(gap, 1e-300) ** 2, 0.0) * tpl
                C_y = c.C0 * D / kap
                msk = has_min[None, :]
                out["y"] = np.where(msk, -C_y * tpl, 0.0)
                out["dy"] = np.where(msk, C_y * dtpl, 0.0)
                # f activates across [rp1, rp1 + D/2] in the min branch
                psi_min = smoothstep((r - rp1) / (D / 2.0))
                psi = np.where(msk, psi_min, psi)
                dpsi_min = smoothstep_deriv((r - rp1) / (D / 2.0)) / (D / 2.0)
                a_lo = np.where(msk, dpsi_min, 0.0)
            eps1 = prep.extra["eps1"]
            base = np.where(has_min[None, :], eps1 * psi, alpha * psi)
            dbase = np.where(has_min[None, :], eps1 * a_lo, alpha * a_lo)
            ramp_up = smoothstep((r - (rmx + w2)) / w2)
            dramp = smoothstep_deriv((r - (rmx + w2)) / w2) / w2
            amp = np.where(has_min[None, :],
                           eps1 * psi + (alpha - eps1) * ramp_up,
                           alpha * psi)
            damp = np.where(has_min[None, :],
                            eps1 * a_lo + (alpha - eps1) * dramp,
                            dbase)
            out["f"] = amp * gdiff
            out["df"] = damp * gdiff + amp / r**2
        return out

    # -- spec-level scalar accessors ----------------------------------------

    def f_at(self, r: float, xt: float, xp: float, lam: float) -> float:
        prep = self.prepare([xt], [xp], [lam])
        return float(self.profiles(prep, np.array([r]))["f"][0, 0])

    def y_at(self, r: float, xt: float, xp: float, lam: float) -> float:
        prep = self.prepare([xt], [xp], [lam])
        return float(self.profiles(prep, np.array([r]))["y"][0, 0])

    def h_at(self, r: float, xt: float, xp: float, lam: float) -> float:
        prep = self.prepare([xt], [xp], [lam])
        return float(self.profiles(prep, np.array([r]))["h"][0, 0])

    def z_at(self, r: float, xt: float, xp: float, lam: float) -> float:
        prep = self.prepare([xt], [xp], [lam])
        pr = self.profiles(prep, np.array([r]))
        chi_z = self._chi_z_value(prep, r)
        return float(self.const.A * (xt + chi_z * self.p.omega_H * xp))

    def _chi_z_value(self, prep: PreparedXi, r: float) -> float:
        if self.regime in ("SR", "A"):
            rmx = float(prep.r_max[0])
            d0 = float(prep.extra["d0"][0])
            return float(1.0 - smoothstep((r - (rmx - d0 / 2.0)) / (d0 / 4.0)))
        return 0.0


def _ramp_antideriv(r, r0, w):
    """Antiderivative of smoothstep((r - r0)/(2w)) / r^2, zero at r = r0.

    The smoothstep is expanded as a quintic polynomial in r on the ramp;
    below the ramp the integrand vanishes, above it equals 1/r^2.
    """
    r = np.asarray(r, float)
    r0 = np.asarray(r0, float)
    w = np.asarray(w, float)
    d = 2.0 * w
    r1 = r0 + d
    x = np.clip((r - r0) / d, 0.0, 1.0)
    rc = r0 + x * d  # clamped radius inside the ramp
    # S(x) = 10x^3 - 15x^4 + 6x^5, x = (s - r0)/d: expand in powers of s
    # via the binomial theorem and integrate s^j / s^2 term by term
    coeffs = (0.0, 0.0, 0.0, 10.0, -15.0, 6.0)
    val = np.zeros(np.broadcast(r, r0, w).shape)
    for k in (3, 4, 5):
        ck = coeffs[k] / d**k
        for j in range(k + 1):
            b = ck * math.comb(k, j) * (-r0) ** (k - j)
            if j == 0:
                term = -1.0 / rc + 1.0 / r0
            elif j == 1:
                term = np.log(rc / r0)
            else:
                jj = j - 1
                term = (rc**jj - r0**jj) / jj
            val = val + b * term
    tail = np.where(r > r1, -1.0 / np.maximum(r, r1) + 1.0 / r1, 0.0)
    return val + tail


# -- assembly of the bulk quadratic -------------------------------------------

def bulk_quadratic(set_: MultiplierSet, prep: PreparedXi, r: np.ndarray) -> dict:
    """Coefficients (d, w, c) of Q = d xitilde^2 + 2 w xitilde + c on the grid."""
    p = set_.p
    pr = set_.profiles(prep, r)
    rr = np.asarray(r, float)[:, None]
    n = rr**2 + p.a**2
    xt, xp, lam = prep.xt[None, :], prep.xp[None, :], prep.lam[None, :]
    V = potential_V(p, rr, xt=xt, xp=xp, lam=lam)
    Vp = dV_dr(p, rr, xt=xt, xp=xp, lam=lam)
    gap = xt**2 - V
    d = n * (pr["h"] + pr["dy"] + 2.0 * pr["df"])
    w = 0.5 * n * pr["z_amp"] * p.omega_H * pr["dchi_z"] * xp
    c = n * (-pr["h"] * gap + pr["dy"] * gap - (pr["y"] + pr["f"]) * Vp)
    return {"d": d, "w": w, "c": c, "profiles": pr}


def regime_weight_P(set_: MultiplierSet, prep: PreparedXi, r: np.ndarray) -> np.ndarray:
    """Coercivity weight P_j: full for j<5, trapping-degenerate for TR2."""
    rr = np.asarray(r, float)[:, None]
    xt, xp, lam = prep.xt[None, :], prep.xp[None, :], prep.lam[None, :]
    if set_.regime == "TR2":
        rmx = prep.r_max[None, :]
        return (rr - rmx) ** 2 * (xt**2 / rr**2 + xp**2 / rr**4 + lam**2 / rr**4)
    return xt**2 + xp**2 / rr**2 + lam**2 / rr**2


def total_bulk_current(p, mods, sets: dict, pt, delta_F: float) -> float:
    """chi^2-weighted sum of the regime currents at one phase point."""
    xi = pt.xi
    chis = partition_weights_arrays(
        p, np.array([xi.xi_tau]), np.array([xi.xi_phi]), np.array([xi.Lam]), delta_F)
    xir = _xir(p, mods, pt.r, pt.xi_r, xi.xi_tau, xi.xi_phi)
    total = 0.0
    for j, name in enumerate(REGIMES):
        cj = float(chis[j][0])
        if cj == 0.0:
            continue
        set_ = sets[name]
        prep = set_.prepare([xi.xi_tau], [xi.xi_phi], [xi.Lam])
        quad = bulk_quadratic(set_, prep, np.array([pt.r]))
        scale = xi.norm()
        # profiles are built on unit triplets; Q is quadratic in the frequency
        q = (quad["d"][0, 0] * xir**2 + 2.0 * quad["w"][0, 0] * scale * xir
             + quad["c"][0, 0] * scale**2)
        total += cj**2 * q
    return float(total)


def _xir(p, mods, r, xr, xt, xp):
    n = r**2 + p.a**2
    return mu(p, r) * xr + s1_symbol(p, mods, r, xt=xt, xp=xp) / n


# -- certification -------------------------------------------------------------

@dataclass
class CertReport:
    regime: str
    passed: bool
    c_min: float
    d_min: float
    worst_r: float
    worst_xi: tuple
    grid: dict
    margins: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime, "pass": bool(self.passed),
            "c_min": self.c_min, "d_min": self.d_min,
            "worst_r": self.worst_r, "worst_xi": list(self.worst_xi),
            "grid": self.grid, "margins": self.margins,
        }


def sample_regime(p, regime, delta_F, n, rng, R=20.0, max_tries=400):
    """Unit-sphere triplets carrying positive weight for one regime."""
    got_t, got_p, got_l = [], [], []
    count = 0
    tries = 0
    j = REGIMES.index(regime)
    while count < n and tries < max_tries:
        tries += 1
        xt, xp, lam = _regime_proposal(p, regime, delta_F, 4 * n, rng)
        w = _weights_for(p, xt, xp, lam, delta_F)[j]
        keep = w > 0
        got_t.append(xt[keep])
        got_p.append(xp[keep])
        got_l.append(lam[keep])
        count += int(keep.sum())
    if count < max(8, n // 20):
        raise PositivityFailure(f"could not sample regime {regime} (got {count})")
    xt = np.concatenate(got_t)[:n]
    xp = np.concatenate(got_p)[:n]
    lam = np.concatenate(got_l)[:n]
    return xt, xp, lam


def _weights_for(p, xt, xp, lam, delta_F):
    from .phase_space import _tr_split_weights
    w1, w2, w3, wtr, _ = _raw_weights(p, xt, xp, lam, delta_F)
    w4, w5 = _tr_split_weights(p, xt, xp, lam, wtr, delta_F)
    return w1, w2, w3, w4, w5


def _regime_proposal(p, regime, delta_F, n, rng):
    """Cheap proposal distribution concentrated near one regime."""
    m = p.m
    if regime == "T":
        # time-dominated: Lam^2 well below delta_F m^3 xi_tau^2
        u = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
        s = rng.uniform(0.0, 1.0, n) ** 2 * math.sqrt(delta_F) * m**1.5
        phi = rng.uniform(0, 2 * math.pi, n)
        lam = np.abs(s * np.cos(phi))
        xp = lam * rng.uniform(-1, 1, n)
        xt = u
    elif regime in ("TR1", "TR2"):
        u = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
        ratio = np.exp(rng.uniform(np.log(0.5 * delta_F * m**3),
                                   np.log(2.0 * m / delta_F), n))
        lam = np.sqrt(ratio)
        xp = lam * rng.uniform(-1, 1, n)
        xt = u
    elif regime == "A":
        lam = np.ones(n)
        xt = rng.uniform(-1, 1, n) * math.sqrt(delta_F / m)
        xp = lam * rng.uniform(-1, 1, n)
    else:  # SR
        lam = np.ones(n)
        xp = rng.uniform(-1, 1, n)
        # xi_tau near the superradiant window: |xi_tau| <~ omega_H |xi_phi| + delta_F-ish
        span = p.omega_H * np.abs(xp) + 2.0 * delta_F
        xt = -np.sign(xp) * rng.uniform(0.0, 1.0, n) * span
    nrm = np.sqrt(xt**2 + xp**2 + lam**2)
    xt, xp, lam = xt / nrm, xp / nrm, lam / nrm
    keep = (lam**2 >= xp**2) & (lam**2 >= 2.0 * np.abs(p.a * xp * xt))
    return xt[keep], xp[keep], lam[keep]


def certify_bulk(p, mods, sets: dict, delta_F: float, n_r: int = 2000,
                 n_xi: int = 40000, seed: int = 0, refine_check: bool = False,
                 chunk: int = 4096) -> dict:
    """Grid certification of the square-completed bulk lower bounds.

    Returns {"pass": bool, "per_regime": {name: CertReport}, "combined": ...}.
    Per regime, the remainder c - w^2/d is scanned over a log-spaced radial
    grid times regime-supported unit triplets and compared against P_j;
    d is required to stay above TOL_DMIN.  The combined report evaluates
    the chi^2-weighted assembly against P_0 with the regularized trapping
    radius.
    """
    rng = np.random.default_rng(seed)
    out = {"per_regime": {}, "pass": True}
    n_per = max(n_xi // 5, 200)
    for name in REGIMES:
        set_ = sets[name]
        rep = _certify_regime(p, mods, set_, delta_F, n_r, n_per, rng, chunk)
        if refine_check:
            rep2 = _certify_regime(p, mods, set_, delta_F, 2 * n_r, n_per, rng, chunk)
            rep.margins["c_min_refined"] = rep2.c_min
            rep.margins["refine_monotone"] = bool(rep2.c_min <= rep.c_min + 1e-12)
        out["per_regime"][name] = rep
        out["pass"] = out["pass"] and rep.passed
    out["combined"] = _certify_combined(p, mods, sets, delta_F, n_r, n_xi, rng, chunk)
    out["pass"] = out["pass"] and out["combined"].passed
    return out


def _radial_grid(p, const, n_r):
    rp1 = p.r_plus * (1.0 + 1.5 * (1.0 - p.a / p.m) / 1000.0
                      if const.delta_Hp is None else 1.0 + const.delta_Hp)
    Rm = const.R * p.m
    return rp1 + (Rm - rp1) * (np.geomspace(1.0, 64.0, n_r) - 1.0) / 63.0


def _certify_regime(p, mods, set_, delta_F, n_r, n_xi, rng, chunk) -> CertReport:
    const = set_.const
    r = _radial_grid(p, const, n_r)
    try:
        xt, xp, lam = sample_regime(p, set_.regime, delta_F, n_xi, rng, R=const.R)
    except PositivityFailure as exc:
        return CertReport(set_.regime, False, -math.inf, -math.inf, math.nan,
                          (math.nan,) * 3, {"n_r": n_r, "n_xi": 0},
                          {"error": str(exc)})
    c_min = math.inf
    d_min = math.inf
    worst = (math.nan, (math.nan,) * 3)
    for k0 in range(0, xt.shape[0], chunk):
        sl = slice(k0, k0 + chunk)
        try:
            prep = set_.prepare(xt[sl], xp[sl], lam[sl])
        except PositivityFailure as exc:
            return CertReport(set_.regime, False, -math.inf, -math.inf, math.nan,
                              (math.nan,) * 3, {"n_r": n_r, "n_xi": int(xt.shape[0])},
                              {"error": str(exc)})
        quad = bulk_quadratic(set_, prep, r)
        P = regime_weight_P(set_, prep, r)
        rem = quad["c"] - np.where(quad["d"] > 0, quad["w"] ** 2 / quad["d"], np.inf)
        ratio = rem / np.maximum(P, 1e-300)
        kk = np.unravel_index(np.argmin(ratio), ratio.shape)
        if ratio[kk] < c_min:
            c_min = float(ratio[kk])
            worst = (float(r[kk[0]]),
                     (float(xt[sl][kk[1]]), float(xp[sl][kk[1]]), float(lam[sl][kk[1]])))
        d_min = min(d_min, float(np.min(quad["d"])))
    passed = (c_min > TOL_CMIN) and (d_min > TOL_DMIN)
    return CertReport(set_.regime, passed, c_min, d_min, worst[0], worst[1],
                      {"n_r": n_r, "n_xi": int(xt.shape[0])})


def _certify_combined(p, mods, sets, delta_F, n_r, n_xi, rng, chunk) -> CertReport:
    const = sets["SR"].const
    r = _radial_grid(p, const, n_r)
    xt, xp, lam = sample_triplets(p, n_xi, rng)
    chis = np.stack(_weights_for(p, xt, xp, lam, delta_F))
    tot = np.sum(chis**2, axis=0)
    chis = chis / np.sqrt(np.maximum(tot, 1e-300))
    rtrap = r_trap_arrays(p, xt, xp, lam, delta_F, R=const.R)
    c_min = math.inf
    d_min = math.inf
    worst = (math.nan, (math.nan,) * 3)
    for k0 in range(0, xt.shape[0], chunk):
        sl = slice(k0, k0 + chunk)
        nsl = xt[sl].shape[0]
        D = np.zeros((n_r, nsl))
        W = np.zeros((n_r, nsl))
        C = np.zeros((n_r, nsl))
        for j, name in enumerate(REGIMES):
            cj = chis[j, sl]
            act = cj > 0
            if not np.any(act):
                continue
            set_ = sets[name]
            prep = set_.prepare(xt[sl][act], xp[sl][act], lam[sl][act])
            quad = bulk_quadratic(set_, prep, r)
            w2 = np.zeros((n_r, nsl))
            D[:, act] += cj[act][None, :] ** 2 * quad["d"]
            W[:, act] += cj[act][None, :] ** 2 * quad["w"]
            C[:, act] += cj[act][None, :] ** 2 * quad["c"]
        rem = C - np.where(D > 0, W**2 / np.maximum(D, 1e-300), np.inf)
        rr = r[:, None]
        chi5 = chis[4, sl][None, :]
        P0 = ((1.0 - chi5**2) * (xt[sl][None, :] ** 2 + xp[sl][None, :] ** 2 / rr**2
                                 + lam[sl][None, :] ** 2 / rr**2)
              + chi5**2 * (rr - rtrap[sl][None, :]) ** 2
              * (xt[sl][None, :] ** 2 / rr**2 + xp[sl][None, :] ** 2 / rr**4
                 + lam[sl][None, :] ** 2 / rr**4))
        ratio = rem / np.maximum(P0, 1e-300)
        kk = np.unravel_index(np.argmin(ratio), ratio.shape)
        if ratio[kk] < c_min:
            c_min = float(ratio[kk])
            worst = (float(r[kk[0]]),
                     (float(xt[sl][kk[1]]), float(xp[sl][kk[1]]), float(lam[sl][kk[1]])))
        d_min = min(d_min, float(np.min(D)))
    passed = (c_min > TOL_CMIN) and (d_min > TOL_DMIN)
    return CertReport("combined", passed, c_min, d_min, worst[0], worst[1],
                      {"n_r": n_r, "n_xi": int(n_xi)})


# -- boundary certification ----------------------------------------------------

def certify_boundary(p, mods, sets: dict, delta_F: float, n_xi: int = 4000,
                     seed: int = 0) -> dict:
    """Flux-symbol cancellation and radicand positivity at the inner boundary.

    For each regime, at r1 = r_plus(1+delta_H'), evaluates
    sum sigma_bdr + rho^2 + pi^2 over supported triplets and xi_r samples,
    fits the constant C in the bound C (|mu| |rho| |(xi_r,Xi)| +
    mu^2 |(xi_r,Xi)|^2), and checks the square-completion radicands.
    """
    rng = np.random.default_rng(seed)
    out = {"per_regime": {}, "pass": True}
    xr_samples = np.array([-3.0, 0.0, 5.0])
    for name in REGIMES:
        set_ = sets[name]
        const = set_.const
        r1 = set_.r_inner
        try:
            xt, xp, lam = sample_regime(p, name, delta_F, n_xi, rng, R=const.R)
        except PositivityFailure as exc:
            out["per_regime"][name] = {"pass": False, "error": str(exc)}
            out["pass"] = False
            continue
        rep = _boundary_regime(p, mods, set_, r1, xt, xp, lam, xr_samples)
        out["per_regime"][name] = rep
        out["pass"] = out["pass"] and rep["pass"]
    return out


def _boundary_regime(p, mods, set_, r1, xt, xp, lam, xrs) -> dict:
    const = set_.const
    A = const.A
    n1 = r1**2 + p.a**2
    mu1 = mu(p, r1)
    dl1 = horizon_poly(p, r1)
    s1v = s1_symbol(p, mods, r1, xt=xt, xp=xp)
    s2v = s2_symbol(p, mods, r1, xt=xt, xp=xp, lam=lam)
    kp = k_plus(p, xt, xp)
    lt2 = lam**2 + 2.0 * p.a * xt * xp  # admissibility makes this nonnegative

    prep = set_.prepare(xt, xp, lam)
    pr = set_.profiles(prep, np.array([r1]))
    fv = pr["f"][0]
    yv = pr["y"][0]
    chi_z0 = pr["chi_z0"]

    total = {}
    for xr in xrs:
        bdr_fy = (-2.0 * mu1 * (fv + yv) * xr * s1v - 2.0 * (fv + yv) * s1v**2 / n1
                  - mu1 * (fv + yv) * s2v)
        zfac = A * (xt + chi_z0 * p.omega_H * xp)
        bdr_z = -zfac * (dl1 * xr + s1v)
        total[xr] = bdr_fy + bdr_z

    if set_.regime in ("SR", "A"):
        rho2 = 0.5 * (A - 2.0) * n1 * kp**2
        pi2 = 0.5 * (A - 2.0) * n1 * kp**2 + dl1 * lt2 / n1
        rho = np.sqrt(np.maximum(rho2, 0.0))
    elif set_.regime == "T":
        rho2 = 0.5 * A * n1 * xt**2
        pi2 = 0.5 * A * n1 * (xt**2 + 2.0 * p.omega_H * xt * xp)
        rho = np.sqrt(np.maximum(rho2, 0.0))
    elif set_.regime == "TR1":
        rho2 = 0.25 * const.delta_F**4 * A * n1 * xt**2
        pi2 = A * n1 * (xt * kp - 0.25 * const.delta_F**4 * xt**2)
        rho = np.sqrt(np.maximum(rho2, 0.0))
    else:  # TR2
        c_b = -(fv + yv)
        rho2 = n1 * (xt**2 + p.a**2 * xp**2)
        pi2 = n1 * (A * xt * kp - 2.0 * c_b * kp**2 - xt**2 - p.a**2 * xp**2) \
            + c_b * dl1 * lt2 / n1
        rho = np.sqrt(np.maximum(rho2, 0.0))

    rad_min = float(np.min(pi2))
    fitted_C = 0.0
    for xr in xrs:
        resid = total[xr] + rho2 + pi2
        nrm = np.sqrt(xr**2 + xt**2 + xp**2 + lam**2)
        bound = abs(mu1) * rho * nrm + mu1**2 * nrm**2
        fitted_C = max(fitted_C, float(np.max(np.abs(resid) / np.maximum(bound, 1e-300))))
    passed = rad_min >= -1e-12 * float(np.max(np.abs(pi2)) + 1.0)
    return {"pass": bool(passed), "radicand_min": rad_min, "fitted_C": fitted_C,
            "A": A, "r1": r1}


# -- constant search ------------------------------------------------------------

def build_all(p, mods, const: Constants) -> dict:
    return {name: MultiplierSet(regime=name, p=p, mods=mods, const=const)
            for name in REGIMES}


def search_constants(p, mods, delta_F: float, R: float = 20.0, seed: int = 0,
                     coarse_nr: int = 160, coarse_nxi: int = 600,
                     verbose: bool = False) -> tuple[Constants, dict]:
    """Deterministic lattice search for a certifiable constant assignment.

    Shared constants (c', A) loop outermost; the regime-local constants
    (B and delta0 for SR/A, C0 for TR2, C2 for TR1) are searched inside
    with per-regime pruning on a coarse grid.  The first assignment whose
    coarse certification passes all regime bulk checks and the boundary
    radicand checks is returned; callers re-verify on the full grid.
    """
    rng_seed = seed
    cps = [2.0**-k for k in range(3, 16)]
    As = [2.0**k for k in range(2, 15)]
    d0s = [(p.m - p.a) * 2.0**-k for k in range(1, 7)]
    Bmults = [2.0**k for k in range(1, 11, 2)]
    C0s = [4.0**k for k in range(1, 5)]
    C2s = [4.0]
    ma = p.m - p.a

    def coarse_ok(set_, name):
        rep = _certify_regime(p, mods, set_, delta_F, coarse_nr, coarse_nxi,
                              np.random.default_rng(rng_seed), 2048)
        return rep.passed, rep

    for cp in cps:
        for A in As:
            base = dict(A=A, c_prime=cp, delta_F=delta_F, R=R,
                        B=A * Bmults[0], delta0=d0s[0], C0=C0s[0], C2=C2s[0])
            # T regime depends only on (c', A)
            ok_t, _ = coarse_ok(MultiplierSet("T", p, mods, Constants(**base)), "T")
            if not ok_t:
                continue
            ok_tr1 = False
            for C2 in C2s:
                cst = Constants(**{**base, "C2": C2})
                ok_tr1, _ = coarse_ok(MultiplierSet("TR1", p, mods, cst), "TR1")
                if ok_tr1:
                    base["C2"] = C2
                    break
            if not ok_tr1:
                continue
            ok_tr2 = False
            for C0 in C0s:
                cst = Constants(**{**base, "C0": C0})
                ok_tr2, _ = coarse_ok(MultiplierSet("TR2", p, mods, cst), "TR2")
                if ok_tr2:
                    base["C0"] = C0
                    break
            if not ok_tr2:
                continue
            for d0 in d0s:
                for Bm in Bmults:
                    cst = Constants(**{**base, "delta0": d0, "B": A * Bm})
                    ok_sr, _ = coarse_ok(MultiplierSet("SR", p, mods, cst), "SR")
                    if not ok_sr:
                        continue
                    ok_a, _ = coarse_ok(MultiplierSet("A", p, mods, cst), "A")
                    if not ok_a:
                        continue
                    sets = build_all(p, mods, cst)
                    bnd = certify_boundary(p, mods, sets, delta_F,
                                           n_xi=coarse_nxi, seed=rng_seed)
                    if bnd["pass"]:
                        if verbose:
                            print(f"accepted {cst}")
                        return cst, {"boundary": bnd}
    raise ConstantSearchFailed(
        f"no assignment on the lattice certifies at a={p.a}, delta_F={delta_F}")
