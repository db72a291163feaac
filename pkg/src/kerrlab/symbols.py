"""
Reduced symbol algebra for the rescaled wave operator and its multipliers.

Everything here lives on the reduced phase space (r, xi_r, Xi) with
Xi = (xi_tau, xi_phi, Lam).  The principal symbol of the |q|^2-rescaled wave
operator in the normalized chart is

    -Delta xi_r^2 - 2 S1 xi_r + S2,

with first-order coefficient S1 = (r^2+a^2)(1 - mu t_mod') xi_tau +
(a - Delta phi_mod') xi_phi and a zeroth-order part S2 that can be traded
for the trapping potential through

    S2 = (r^2+a^2)^2/Delta (xi_tau^2 - V) - S1^2/Delta.

The combination xitilde = mu xi_r + S1/(r^2+a^2) (the tortoise-frame radial
frequency) brings the wave symbol to -(r^2+a^2)/mu xitilde^2 +
(r^2+a^2)^2/Delta (xi_tau^2 - V), which is the form every positivity
argument uses.  Poisson brackets of symbols depending only on
(r, xi_r, Xi) reduce to the radial pair: {A,B} = dA/dxi_r dB/dr -
dA/dr dB/dxi_r (the angular terms cancel identically).

A multiplier is specified by a triple (s0, s1, e0) of radial-and-frequency
profiles; its bulk quadratic form sigma2_bulk and boundary form sigma2_bdr
are evaluated literally.  The four classical current choices (h, y, f, z)
are provided both through the generic evaluator and as closed forms, which
the tests compare.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import BlackHoleParams, ModFunctions, horizon_poly, mu
from .phase_space import FrequencyTriplet, potential_V, dV_dr

FD_STEP = 1e-5


@dataclass(frozen=True)
class PhasePoint:
    """Reduced phase-space point; optional (theta, xi_theta) extension.

    When the extension is present, Lam is reconstructed from
    Lam^2 = xi_theta^2 + xi_phi^2/sin^2(theta) + a^2 sin^2(theta) xi_tau^2
    and must match the stored value to 1e-12 relative.
    """

    r: float
    xi_r: float
    xi: FrequencyTriplet
    theta: float | None = None
    xi_theta: float | None = None

    def check_extension(self, p: BlackHoleParams) -> float:
        if self.theta is None or self.xi_theta is None:
            raise ValueError("phase point carries no angular extension")
        s = np.sin(self.theta)
        lam2 = (self.xi_theta**2 + self.xi.xi_phi**2 / s**2
                + p.a**2 * s**2 * self.xi.xi_tau**2)
        rel = abs(lam2 - self.xi.Lam**2) / max(lam2, 1e-300)
        if rel > 1e-12:
            raise ValueError(f"Lam reconstruction off by {rel}")
        return rel


def s1_symbol(p: BlackHoleParams, mods: ModFunctions, r, xi=None, *,
              xt=None, xp=None):
    """First-order radial coefficient of the rescaled wave symbol."""
    if xi is not None:
        xt, xp = xi.xi_tau, xi.xi_phi
    n = np.asarray(r) ** 2 + p.a**2
    dl = horizon_poly(p, r)
    tp = mods.t_mod_prime(r)
    fp = mods.phi_mod_prime(r)
    return n * (1.0 - dl / n * tp) * xt + (p.a - dl * fp) * xp


def s2_symbol(p: BlackHoleParams, mods: ModFunctions, r, xi=None, *,
              xt=None, xp=None, lam=None):
    """Zeroth-order (in xi_r) part of the rescaled wave symbol."""
    if xi is not None:
        xt, xp, lam = xi.xi_tau, xi.xi_phi, xi.Lam
    r = np.asarray(r)
    n = r**2 + p.a**2
    dl = horizon_poly(p, r)
    tp = mods.t_mod_prime(r)
    fp = mods.phi_mod_prime(r)
    mu_ = dl / n
    return (-np.asarray(lam) ** 2
            - (2.0 * p.a * (1.0 - tp) - 2.0 * n * fp * (1.0 - mu_ * tp)) * xt * xp
            + (2.0 * n * tp - dl * tp**2) * xt**2
            - (dl * fp**2 - 2.0 * p.a * fp) * xp**2)


def xi_rstar(p: BlackHoleParams, mods: ModFunctions, pt: PhasePoint | None = None,
             *, r=None, xr=None, xt=None, xp=None):
    """Tortoise-frame radial frequency mu xi_r + S1/(r^2+a^2)."""
    if pt is not None:
        r, xr, xt, xp = pt.r, pt.xi_r, pt.xi.xi_tau, pt.xi.xi_phi
    n = np.asarray(r) ** 2 + p.a**2
    return mu(p, r) * np.asarray(xr) + s1_symbol(p, mods, r, xt=xt, xp=xp) / n


def wave_symbol(p: BlackHoleParams, mods: ModFunctions, pt: PhasePoint | None = None,
                *, r=None, xr=None, xt=None, xp=None, lam=None):
    """Principal symbol of the |q|^2-rescaled wave operator."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    dl = horizon_poly(p, r)
    s1 = s1_symbol(p, mods, r, xt=xt, xp=xp)
    s2 = s2_symbol(p, mods, r, xt=xt, xp=xp, lam=lam)
    return -dl * np.asarray(xr) ** 2 - 2.0 * s1 * np.asarray(xr) + s2


def poisson_bracket_reduced(A: Callable, B: Callable, pt: PhasePoint,
                            step: float = FD_STEP) -> float:
    """{A, B} = dA/dxi_r dB/dr - dA/dr dB/dxi_r at a reduced phase point.

    A and B are callables of (r, xi_r, Xi); derivatives are taken by
    fourth-order central differences with step ~ 1e-5 max(r, 1).
    """
    r, xr, xi = pt.r, pt.xi_r, pt.xi
    hr = step * max(abs(r), 1.0)
    hx = step * max(abs(xr), xi.norm(), 1.0)

    def d4(f, x0, h, which):
        def at(x):
            return f(x, xr, xi) if which == "r" else f(r, x, xi)
        return (-at(x0 + 2 * h) + 8 * at(x0 + h) - 8 * at(x0 - h) + at(x0 - 2 * h)) / (12 * h)

    dA_dxr = d4(A, xr, hx, "xr")
    dB_dxr = d4(B, xr, hx, "xr")
    dA_dr = d4(A, r, hr, "r")
    dB_dr = d4(B, r, hr, "r")
    return dA_dxr * dB_dr - dA_dr * dB_dxr


# -- generic multiplier evaluation --------------------------------------------

@dataclass(frozen=True)
class MultiplierTriple:
    """Profiles (s0, s1, e0) of (r, Xi) with analytic radial derivatives.

    Each callable takes (r, xt, xp, lam) broadcastable arrays.  Missing
    derivative callables fall back to fourth-order central differences.
    """

    s0: Callable
    s1: Callable
    e0: Callable
    ds0_dr: Callable | None = None
    ds1_dr: Callable | None = None

    def d_s0(self, r, xt, xp, lam):
        if self.ds0_dr is not None:
            return self.ds0_dr(r, xt, xp, lam)
        return _fd4(lambda rr: self.s0(rr, xt, xp, lam), r)

    def d_s1(self, r, xt, xp, lam):
        if self.ds1_dr is not None:
            return self.ds1_dr(r, xt, xp, lam)
        return _fd4(lambda rr: self.s1(rr, xt, xp, lam), r)


def _fd4(f, r):
    h = FD_STEP * np.maximum(np.abs(r), 1.0)
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)


def sigma2_bulk(p: BlackHoleParams, mods: ModFunctions, mt: MultiplierTriple,
                pt: PhasePoint | None = None, *, r=None, xr=None, xt=None,
                xp=None, lam=None):
    """Principal bulk quadratic form of the multiplier pair (X, E).

    Requires mu(r) > 0; every certification window satisfies that.
    """
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    r = np.asarray(r, dtype=float)
    n = r**2 + p.a**2
    mu_ = mu(p, r)
    xir = xi_rstar(p, mods, r=r, xr=xr, xt=xt, xp=xp)
    gap = np.asarray(xt) ** 2 - potential_V(p, r, xt=xt, xp=xp, lam=lam)
    x2mg = xir**2 - gap
    s0 = mt.s0(r, xt, xp, lam)
    ds0 = mt.d_s0(r, xt, xp, lam)
    ds1 = mt.d_s1(r, xt, xp, lam)
    e0 = mt.e0(r, xt, xp, lam)
    vp = dV_dr(p, r, xt=xt, xp=xp, lam=lam)
    term_s0 = s0 * ((-4.0 * r + 2.0 * (r - p.m) / mu_) * x2mg - n * vp)
    return (0.5 * (2.0 * n * ds0 * xir**2 + 2.0 * n * ds1 * xir + term_s0)
            + n / mu_ * e0 * x2mg)


def sigma2_bdr(p: BlackHoleParams, mods: ModFunctions, mt: MultiplierTriple,
               pt: PhasePoint | None = None, *, r=None, xr=None, xt=None,
               xp=None, lam=None):
    """Boundary flux symbol of the multiplier pair (X, E) at fixed r."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    r = np.asarray(r, dtype=float)
    n = r**2 + p.a**2
    dl = horizon_poly(p, r)
    mu_ = dl / n
    s1 = s1_symbol(p, mods, r, xt=xt, xp=xp)
    s2 = s2_symbol(p, mods, r, xt=xt, xp=xp, lam=lam)
    s0 = mt.s0(r, xt, xp, lam)
    s1m = mt.s1(r, xt, xp, lam)
    xr = np.asarray(xr)
    return (-mu_ * s0 * xr * s1 - s0 * s1**2 / n - dl * s1m * xr - s1m * s1
            - 0.5 * mu_ * s0 * s2)


# -- the four classical currents ----------------------------------------------

def q_current_h(p, mods, h, pt=None, *, r=None, xr=None, xt=None, xp=None, lam=None):
    """(r^2+a^2) h (xitilde^2 + V - xi_tau^2): closed form of the h-current."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    n = np.asarray(r) ** 2 + p.a**2
    xir = xi_rstar(p, mods, r=r, xr=xr, xt=xt, xp=xp)
    gap = np.asarray(xt) ** 2 - potential_V(p, r, xt=xt, xp=xp, lam=lam)
    return n * h * (xir**2 - gap)


def q_current_y(p, mods, y, dy, pt=None, *, r=None, xr=None, xt=None, xp=None, lam=None):
    """(r^2+a^2)(dy xitilde^2 + dy (xi_tau^2 - V) - y dV/dr)."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    n = np.asarray(r) ** 2 + p.a**2
    xir = xi_rstar(p, mods, r=r, xr=xr, xt=xt, xp=xp)
    gap = np.asarray(xt) ** 2 - potential_V(p, r, xt=xt, xp=xp, lam=lam)
    vp = dV_dr(p, r, xt=xt, xp=xp, lam=lam)
    return n * (dy * xir**2 + dy * gap - y * vp)


def q_current_f(p, mods, f, df, pt=None, *, r=None, xr=None, xt=None, xp=None, lam=None):
    """(r^2+a^2)(2 df xitilde^2 - f dV/dr)."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    n = np.asarray(r) ** 2 + p.a**2
    xir = xi_rstar(p, mods, r=r, xr=xr, xt=xt, xp=xp)
    vp = dV_dr(p, r, xt=xt, xp=xp, lam=lam)
    return n * (2.0 * df * xir**2 - f * vp)


def q_current_z(p, mods, dchi_z, pt=None, *, r=None, xr=None, xt=None, xp=None,
                lam=None, amplitude=1.0):
    """(r^2+a^2) omega_H dchi_z xi_phi xitilde for z = A(xi_tau + chi_z omega_H xi_phi)."""
    if pt is not None:
        r, xr = pt.r, pt.xi_r
        xt, xp, lam = pt.xi.xi_tau, pt.xi.xi_phi, pt.xi.Lam
    n = np.asarray(r) ** 2 + p.a**2
    xir = xi_rstar(p, mods, r=r, xr=xr, xt=xt, xp=xp)
    return amplitude * n * p.omega_H * dchi_z * np.asarray(xp) * xir


def make_h_triple(p: BlackHoleParams, h: Callable) -> MultiplierTriple:
    """(s0, s1, e0) = (0, 0, mu h), the h-current realization."""
    zero = lambda r, xt, xp, lam: np.zeros(np.broadcast(np.asarray(r), np.asarray(xt)).shape)
    return MultiplierTriple(
        s0=zero, s1=zero,
        e0=lambda r, xt, xp, lam: mu(p, r) * h(r, xt, xp, lam),
        ds0_dr=zero, ds1_dr=zero)


def make_y_triple(p: BlackHoleParams, y: Callable, dy: Callable) -> MultiplierTriple:
    zero = lambda r, xt, xp, lam: np.zeros(np.broadcast(np.asarray(r), np.asarray(xt)).shape)

    def e0(r, xt, xp, lam):
        r = np.asarray(r, dtype=float)
        n = r**2 + p.a**2
        mu_ = mu(p, r)
        dmu = _dmu_dr(p, r)
        return 2.0 * mu_ * r / n * y(r, xt, xp, lam) - (
            dmu * y(r, xt, xp, lam) + mu_ * dy(r, xt, xp, lam))

    return MultiplierTriple(
        s0=lambda r, xt, xp, lam: 2.0 * y(r, xt, xp, lam),
        s1=zero, e0=e0,
        ds0_dr=lambda r, xt, xp, lam: 2.0 * dy(r, xt, xp, lam),
        ds1_dr=zero)


def make_f_triple(p: BlackHoleParams, f: Callable, df: Callable) -> MultiplierTriple:
    zero = lambda r, xt, xp, lam: np.zeros(np.broadcast(np.asarray(r), np.asarray(xt)).shape)

    def e0(r, xt, xp, lam):
        r = np.asarray(r, dtype=float)
        n = r**2 + p.a**2
        mu_ = mu(p, r)
        dmu = _dmu_dr(p, r)
        return (2.0 * mu_ * r / n * f(r, xt, xp, lam)
                - dmu * f(r, xt, xp, lam))

    return MultiplierTriple(
        s0=lambda r, xt, xp, lam: 2.0 * f(r, xt, xp, lam),
        s1=zero, e0=e0,
        ds0_dr=lambda r, xt, xp, lam: 2.0 * df(r, xt, xp, lam),
        ds1_dr=zero)


def make_z_triple(p: BlackHoleParams, chi_z: Callable, dchi_z: Callable,
                  amplitude: float = 1.0) -> MultiplierTriple:
    zero = lambda r, xt, xp, lam: np.zeros(np.broadcast(np.asarray(r), np.asarray(xt)).shape)

    def s1(r, xt, xp, lam):
        return amplitude * (np.asarray(xt) + chi_z(r) * p.omega_H * np.asarray(xp))

    def ds1(r, xt, xp, lam):
        return amplitude * dchi_z(r) * p.omega_H * np.asarray(xp) * np.ones_like(np.asarray(r, dtype=float))

    return MultiplierTriple(s0=zero, s1=s1, e0=zero, ds0_dr=zero, ds1_dr=ds1)


def _dmu_dr(p: BlackHoleParams, r):
    r = np.asarray(r, dtype=float)
    n = r**2 + p.a**2
    return 2.0 * (r - p.m) / n - 2.0 * r * horizon_poly(p, r) / n**2
