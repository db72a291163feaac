"""
Trapping potential over frequency space and the frequency-regime decomposition.

A separated frequency triplet ``Xi = (xi_tau, xi_phi, Lam)`` collects the
time frequency, the azimuthal frequency and the Carter angular frequency;
admissibility requires ``Lam^2 >= max(xi_phi^2, 2|a xi_phi xi_tau|)``.
The radial potential

    V(r, Xi) = (Delta Lam^2 - 4 a m r xi_tau xi_phi - a^2 xi_phi^2) / (r^2+a^2)^2

controls trapping: its unique maximum (when one exists) locates the
photon-sphere-like radius ``r_max <= 8m``, and frequencies with
``xi_tau (xi_tau + omega_H xi_phi) < 0`` are superradiant.  Frequency space
is split into four overlapping regimes (superradiant, angular-dominated,
time-dominated, trapping-comparable) with a quadratic partition of unity
subordinate to them; the trapping-comparable regime is further split by
whether the potential stays uniformly below ``xi_tau^2`` out to the matching
radius ``R``.

All classification data is scale-invariant: it depends on ``Xi`` only
through the ray ``Xi/|Xi|`` (plus a low-frequency cutoff for the partition
weights, which vanish for ``|Xi| <= 1`` and are exactly quadratic-normalized
for ``|Xi| >= 2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ClassificationAmbiguous, CoverGap, InadmissibleFrequency
from .geometry import BlackHoleParams, horizon_poly, smoothstep

# ramp thresholds (fractions of each regime's natural margin scale) used by
# the partition weights; support starts at RAMP_LO, weight saturates at RAMP_HI
RAMP_LO = 0.02
RAMP_HI = 0.10

REGIMES = ("SR", "A", "T", "TR1", "TR2")


@dataclass(frozen=True)
class FrequencyTriplet:
    """(xi_tau, xi_phi, Lam) with Lam >= 0 and the admissibility bound."""

    xi_tau: float
    xi_phi: float
    Lam: float

    def __post_init__(self):
        if self.Lam < 0:
            raise InadmissibleFrequency(f"Lam={self.Lam} must be nonnegative")

    def norm(self) -> float:
        return math.sqrt(self.xi_tau**2 + self.xi_phi**2 + self.Lam**2)

    def scaled(self, lam: float) -> "FrequencyTriplet":
        return FrequencyTriplet(lam * self.xi_tau, lam * self.xi_phi, lam * self.Lam)


def admissible(p: BlackHoleParams, xt, xp, lam) -> np.ndarray:
    """Vectorized admissibility: Lam^2 >= max(xi_phi^2, 2|a xi_phi xi_tau|)."""
    lam2 = np.asarray(lam) ** 2
    return (lam2 >= np.asarray(xp) ** 2) & (lam2 >= 2.0 * np.abs(p.a * xp * xt))


def require_admissible(p: BlackHoleParams, xi: FrequencyTriplet) -> None:
    if not admissible(p, xi.xi_tau, xi.xi_phi, xi.Lam):
        raise InadmissibleFrequency(f"{xi} violates the angular bound")
    if xi.norm() == 0.0:
        raise InadmissibleFrequency("zero frequency triplet")


def sample_triplets(p: BlackHoleParams, n: int, rng: np.random.Generator):
    """Uniform admissible samples on the unit sphere with Lam >= 0.

    Returns arrays (xt, xp, lam). Rejection sampling; acceptance is ~1/2
    at a=0 and stays well away from zero for all subextremal spins.
    """
    xs, ys, ls = [], [], []
    need = n
    while need > 0:
        v = rng.normal(size=(int(need * 2.5) + 16, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        xt, xp, lam = v[:, 0], v[:, 1], np.abs(v[:, 2])
        keep = admissible(p, xt, xp, lam)
        xs.append(xt[keep])
        ys.append(xp[keep])
        ls.append(lam[keep])
        need = n - sum(len(c) for c in xs)
    xt = np.concatenate(xs)[:n]
    xp = np.concatenate(ys)[:n]
    lam = np.concatenate(ls)[:n]
    return xt, xp, lam


# -- the potential and its radial derivatives --------------------------------

def potential_V(p: BlackHoleParams, r, xi: FrequencyTriplet | None = None,
                *, xt=None, xp=None, lam=None):
    """V(r, Xi); accepts a triplet or raw component arrays."""
    if xi is not None:
        xt, xp, lam = xi.xi_tau, xi.xi_phi, xi.Lam
    n2 = (np.asarray(r) ** 2 + p.a**2) ** 2
    return (horizon_poly(p, r) * np.asarray(lam) ** 2
            - 4.0 * p.a * p.m * np.asarray(r) * np.asarray(xt) * np.asarray(xp)
            - p.a**2 * np.asarray(xp) ** 2) / n2


def _w_cubic(p: BlackHoleParams, r, xt, xp, lam):
    """(r^2+a^2)^3 dV/dr, a cubic polynomial in r."""
    r = np.asarray(r, dtype=float)
    return (-2.0 * (r**3 - 3.0 * p.m * r**2 + p.a**2 * r + p.a**2 * p.m) * lam**2
            + 4.0 * p.a**2 * r * xp**2
            + 4.0 * p.a * p.m * (3.0 * r**2 - p.a**2) * xp * xt)


def dV_dr(p: BlackHoleParams, r, xi: FrequencyTriplet | None = None,
          *, xt=None, xp=None, lam=None):
    """Closed-form dV/dr."""
    if xi is not None:
        xt, xp, lam = xi.xi_tau, xi.xi_phi, xi.Lam
    return _w_cubic(p, r, xt, xp, lam) / (np.asarray(r) ** 2 + p.a**2) ** 3


def scaled_second(p: BlackHoleParams, r, xi: FrequencyTriplet | None = None,
                  *, xt=None, xp=None, lam=None):
    """d/dr of (r^2+a^2)^3 dV/dr, a downward quadratic in r."""
    if xi is not None:
        xt, xp, lam = xi.xi_tau, xi.xi_phi, xi.Lam
    r = np.asarray(r, dtype=float)
    return (-2.0 * (3.0 * r**2 - 6.0 * p.m * r + p.a**2) * lam**2
            + 4.0 * p.a**2 * xp**2 + 24.0 * p.a * p.m * r * xt * xp)


def k_plus(p: BlackHoleParams, xt, xp):
    """Horizon-shifted frequency xi_tau + omega_H xi_phi."""
    return np.asarray(xt) + p.omega_H * np.asarray(xp)


def is_superradiant(p: BlackHoleParams, xi: FrequencyTriplet) -> bool:
    """True iff xi_tau (xi_tau + omega_H xi_phi) < 0."""
    require_admissible(p, xi)
    return bool(xi.xi_tau * (xi.xi_tau + p.omega_H * xi.xi_phi) < 0.0)


# -- critical point analysis --------------------------------------------------

class PotentialCase(Enum):
    STRICTLY_DECREASING = "strictly-decreasing"
    UNIQUE_MAX = "unique-max"
    MIN_THEN_MAX = "min-then-max"


@dataclass(frozen=True)
class CriticalPointReport:
    case: PotentialCase
    r_min: float | None
    r_max: float | None
    V_at_max: float | None


R_MAX_BRACKET = 9.0  # in units of m; every maximum sits below 8m


def _bisect_w(p, lo, hi, xt, xp, lam, iters=80):
    """Vectorized bisection for the zero of the dV/dr cubic on [lo, hi].

    Assumes sign(W(lo)) > 0 > sign(W(hi)). Ties resolve toward larger r.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = _w_cubic(p, mid, xt, xp, lam) >= 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return hi


def classify_potential_arrays(p: BlackHoleParams, xt, xp, lam):
    """Trichotomy and critical radii for arrays of triplets.

    Returns (case_code, r_min, r_max) with case codes 0 = strictly
    decreasing, 1 = unique max, 2 = min-then-max; radii are NaN where
    absent.  The structure used: W := (r^2+a^2)^3 V' has derivative that is
    positive-then-negative with sign change at r1 (or nonpositive), so W
    increases up to r1 then decreases to -inf; counting the zeros of W on
    (r_plus, infinity) settles the case.
    """
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    xt, xp, lam = np.broadcast_arrays(xt, xp, lam)
    if np.any(lam <= 0):
        raise InadmissibleFrequency("classification needs Lam > 0")
    rp = p.r_plus
    rhi = R_MAX_BRACKET * p.m
    w_hi = _w_cubic(p, rhi, xt, xp, lam)
    if np.any(w_hi >= 0.0):
        raise ClassificationAmbiguous("dV/dr >= 0 at r = 9m; impossible sign pattern")

    # vertex of the scaled-second quadratic: largest root r1 when real
    b = p.m * (1.0 + 2.0 * p.a * xt * xp / lam**2)
    disc = b**2 - (p.a**2 / 3.0) * (1.0 - 2.0 * xp**2 / lam**2)
    r1 = np.where(disc > 0.0, b + np.sqrt(np.maximum(disc, 0.0)), -np.inf)
    has_bump = r1 > rp

    w_rp = _w_cubic(p, rp, xt, xp, lam)
    w_r1 = np.where(has_bump, _w_cubic(p, np.where(has_bump, r1, rp), xt, xp, lam), w_rp)

    case = np.zeros(xt.shape, dtype=int)
    r_min = np.full(xt.shape, np.nan)
    r_max = np.full(xt.shape, np.nan)

    one_zero = w_rp >= 0.0
    case[one_zero] = 1
    if np.any(one_zero):
        # W(rp) >= 0: single downward crossing in (max(rp, r1), rhi)
        lo = np.where(has_bump, np.maximum(r1, rp), rp)[one_zero]
        r_max[one_zero] = _bisect_w(p, lo, np.full_like(lo, rhi),
                                    xt[one_zero], xp[one_zero], lam[one_zero])

    two_zero = (~one_zero) & has_bump & (w_r1 > 0.0)
    case[two_zero] = 2
    if np.any(two_zero):
        r1t = r1[two_zero]
        r_min[two_zero] = _bisect_neg(p, np.full_like(r1t, rp), r1t,
                                      xt[two_zero], xp[two_zero], lam[two_zero])
        r_max[two_zero] = _bisect_w(p, r1t, np.full_like(r1t, rhi),
                                    xt[two_zero], xp[two_zero], lam[two_zero])

    if np.any(np.nan_to_num(r_max, nan=0.0) > 8.0 * p.m * (1 + 1e-12)):
        raise ClassificationAmbiguous("found r_max > 8m")
    return case, r_min, r_max


def _bisect_neg(p, lo, hi, xt, xp, lam, iters=80):
    """Bisection for the upward crossing of W on [lo, hi] (W(lo)<0<W(hi))."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = _w_cubic(p, mid, xt, xp, lam) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return hi


def critical_points(p: BlackHoleParams, xi: FrequencyTriplet) -> CriticalPointReport:
    """Classify V(., Xi) into its trichotomy and locate the critical radii."""
    require_admissible(p, xi)
    xt = np.array([xi.xi_tau])
    xp = np.array([xi.xi_phi])
    lam = np.array([xi.Lam])
    case, r_min, r_max = classify_potential_arrays(p, xt, xp, lam)
    c = PotentialCase(
        [PotentialCase.STRICTLY_DECREASING, PotentialCase.UNIQUE_MAX,
         PotentialCase.MIN_THEN_MAX][int(case[0])]
    )
    rmx = None if math.isnan(r_max[0]) else float(r_max[0])
    rmn = None if math.isnan(r_min[0]) else float(r_min[0])
    vmx = None if rmx is None else float(potential_V(p, rmx, xi))
    return CriticalPointReport(case=c, r_min=rmn, r_max=rmx, V_at_max=vmx)


# -- frequency regimes --------------------------------------------------------

@dataclass(frozen=True)
class RegimeMembership:
    in_SR: bool
    in_A: bool
    in_T: bool
    in_TR: bool
    in_TR1: bool
    in_TR2: bool
    chi: tuple[float, float, float, float, float]
    delta_F: float
    r3: float | None = None
    r4: float | None = None


def regime_flags(p: BlackHoleParams, xt, xp, lam, delta_F):
    """Vectorized open-set membership for (SR, A, T, TR)."""
    xt = np.asarray(xt, dtype=float)
    xp = np.asarray(xp, dtype=float)
    lam = np.asarray(lam, dtype=float)
    m = p.m
    prod = -xt * xp
    lam2 = lam**2
    band = (prod >= 0.25 * delta_F * lam2) & (prod <= p.omega_H * xp**2 + delta_F * lam2)
    sr = (prod > 0.0) & (prod < p.omega_H * xp**2 + 2.0 * delta_F * lam2)
    a_ = (lam2 > m * xt**2 / delta_F) & ~band
    t_ = (xt**2 > lam2 / (delta_F * m**3)) & ~band
    tr = (lam2 > 0.5 * delta_F * m**3 * xt**2) & (lam2 < 2.0 * m * xt**2 / delta_F) & ~band
    return sr, a_, t_, tr


def threshold_radii(p: BlackHoleParams, xt, xp, lam, delta_F,
                    frac, R=20.0, delta_Hp=None, n_scan=256):
    """Largest radius out to which xi_tau^2 - V > frac * delta_F^2 Lam^2 holds.

    Scans [r_plus(1+delta_H'), R + m] and bisects the first crossing;
    returns R + m where the inequality holds on the whole window (so the
    "> R" test is decidable).  Vectorized over triplets.
    """
    if delta_Hp is None:
        delta_Hp = 1.5 * default_delta_H(p)
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    lo = p.r_plus * (1.0 + delta_Hp)
    hi = (R + 1.0) * p.m
    grid = np.linspace(lo, hi, n_scan)
    gap = (xt[None, :] ** 2
           - potential_V(p, grid[:, None], xt=xt[None, :], xp=xp[None, :], lam=lam[None, :])
           - frac * delta_F**2 * lam[None, :] ** 2)
    holds = gap > 0.0
    # first grid index where the inequality fails (n_scan if never)
    fail = np.argmin(holds, axis=0)
    never = holds.min(axis=0)  # all True -> no failure
    fail = np.where(never, n_scan, np.where(holds[0], fail, 0))
    out = np.full(xt.shape, hi)
    needs = (fail > 0) & (fail < n_scan)
    if np.any(needs):
        a_lo = grid[np.maximum(fail[needs] - 1, 0)]
        a_hi = grid[fail[needs]]
        xtn, xpn, lamn = xt[needs], xp[needs], lam[needs]
        for _ in range(60):
            mid = 0.5 * (a_lo + a_hi)
            g = (xtn**2 - potential_V(p, mid, xt=xtn, xp=xpn, lam=lamn)
                 - frac * delta_F**2 * lamn**2)
            pos = g > 0.0
            a_lo = np.where(pos, mid, a_lo)
            a_hi = np.where(pos, a_hi, mid)
        out[needs] = a_lo
    out[fail == 0] = lo
    return out


def default_delta_H(p: BlackHoleParams) -> float:
    return (1.0 - p.a / p.m) / 1000.0


# partition weights ----------------------------------------------------------

def _ramp(x, lo=RAMP_LO, hi=RAMP_HI):
    """Smooth 0->1 ramp on [lo, hi] of a normalized margin."""
    return smoothstep((x - lo) / (hi - lo))


def _ratio_margin(q, e):
    """(q - e)/(q + e): scale-free margin for the one-sided constraint q > e."""
    den = q + e
    return np.where(den > 0, (q - e) / np.where(den > 0, den, 1.0), -1.0)


def proximity_scale(p: BlackHoleParams, lam2, delta_F):
    """Superradiance-proximity threshold for xi_tau k_plus.

    Trapping-comparable rays satisfy xi_tau k_plus >= delta_F^{3/2} Lam^2 /
    (sqrt(2) m^{3/2}); twice that value separates the near-superradiant
    cone (where the potential gap at r_max is negative) from them with a
    factor-two margin on both sides.
    """
    return math.sqrt(2.0) * delta_F**1.5 / p.m**1.5 * lam2


def _band_indicator(p, prod, v2, lam2, utk, delta_F, wb):
    """Smooth indicator: 1 on the exclusion band, 0 safely outside.

    Built from the edge ratios x1 = prod / (delta_F lam^2 / 4),
    x2 = prod / (omega_H xi_phi^2 + delta_F lam^2) and the proximity ratio
    x3 = xi_tau k_plus / proximity_scale; the band is
    {x1 >= 1, x2 <= 1, x3 <= 1}.  Without the x3 factor the band (and with
    it the superradiant regime) would swallow trapped and time-dominated
    rays of tiny azimuthal frequency.
    """
    tiny = 1e-290
    x1 = prod / np.maximum(0.25 * delta_F * lam2, tiny)
    x2 = prod / np.maximum(p.omega_H * v2 + delta_F * lam2, tiny)
    x3 = utk / np.maximum(proximity_scale(p, lam2, delta_F), tiny)
    return (smoothstep((x1 - (1.0 - 2.0 * wb)) / wb)
            * smoothstep(((1.0 + 2.0 * wb) - x2) / wb)
            * smoothstep(((1.0 + 2.0 * wb) - x3) / wb))


def _raw_weights(p: BlackHoleParams, u, v, w, delta_F, lo=RAMP_LO, hi=RAMP_HI):
    """Unnormalized per-regime weights on unit triplets (vectorized).

    Returns (w_SR, w_A, w_T, w_TR, w_out) where w_out is the thresholded
    away-from-the-band factor already multiplied into the slab weights.
    """
    m = p.m
    prod = -u * v
    lam2 = w**2
    v2 = v**2
    utk = u * (u + p.omega_H * v)
    tiny = 1e-290
    # band half-width in edge-ratio units: small enough that the widened
    # band stays inside the superradiant regime's outer margin
    wb = min(0.15, 0.5 * delta_F / (p.omega_H + delta_F))
    band = _band_indicator(p, prod, v2, lam2, utk, delta_F, wb)
    w_out = _ramp(1.0 - band, lo, hi)

    s_band = delta_F * lam2 + tiny
    s_prox = proximity_scale(p, lam2, delta_F) + tiny
    w_sr = (_ramp(prod / s_band, lo, hi)
            * _ramp((p.omega_H * v2 + 2.0 * delta_F * lam2 - prod) / s_band, lo, hi)
            * _ramp((2.0 * s_prox - utk) / s_prox, lo, hi))
    w_a = _ramp(_ratio_margin(delta_F * lam2, m * u**2), lo, hi) * w_out
    w_t = _ramp(_ratio_margin(delta_F * m**3 * u**2, lam2), lo, hi) * w_out
    w_tr = (_ramp(_ratio_margin(lam2, 0.5 * delta_F * m**3 * u**2), lo, hi)
            * _ramp(_ratio_margin(2.0 * m * u**2, delta_F * lam2), lo, hi) * w_out)
    return w_sr, w_a, w_t, w_tr, w_out


def _tr_split_weights(p, u, v, w, w_tr, delta_F, lo=RAMP_LO, hi=RAMP_HI):
    """Split the TR weight by the potential-gap minimum.

    With s := xi_tau^2 - V(r_max) (or +inf when V has no maximum), the
    quarter-level bound holds out to every radius iff s exceeds it, since
    any crossing would have to happen below r_max <= 8m < R.  TR1 ramps on
    for s above the quarter level, TR2 for s below the half level; the two
    overlap on a band of relative width 1/4, so the split never leaves a
    gap inside TR.
    """
    w4 = np.zeros_like(w_tr)
    w5 = np.zeros_like(w_tr)
    act = w_tr > 0.0
    if np.any(act):
        case, _, rmx = classify_potential_arrays(p, u[act], v[act], w[act])
        gap_min = np.where(
            case >= 1,
            u[act] ** 2 - potential_V(p, np.where(case >= 1, rmx, 3.0 * p.m),
                                      xt=u[act], xp=v[act], lam=w[act]),
            np.inf)
        level = delta_F**2 * w[act] ** 2
        s = np.where(level > 0, gap_min / np.where(level > 0, level, 1.0), np.inf)
        w4[act] = w_tr[act] * _ramp(s - 0.25, lo, hi)
        w5[act] = w_tr[act] * _ramp(0.5 - s, lo, hi)
    return w4, w5


def partition_weights_arrays(p: BlackHoleParams, xt, xp, lam, delta_F, R=20.0):
    """chi_1..chi_5 for arrays of triplets; sum of squares is rho(|Xi|)^2."""
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    nrm = np.sqrt(xt**2 + xp**2 + lam**2)
    safe = np.where(nrm > 0, nrm, 1.0)
    u, v, w = xt / safe, xp / safe, lam / safe
    w1, w2, w3, wtr, _ = _raw_weights(p, u, v, w, delta_F)
    w4, w5 = _tr_split_weights(p, u, v, w, wtr, delta_F)
    total = w1**2 + w2**2 + w3**2 + w4**2 + w5**2
    if np.any((total == 0.0) & (nrm > 0)):
        k = int(np.argmax((total == 0.0) & (nrm > 0)))
        raise CoverGap(f"no regime covers Xi=({xt.flat[k]}, {xp.flat[k]}, {lam.flat[k]})")
    rho = smoothstep(nrm - 1.0)  # 0 for |Xi|<=1, 1 for |Xi|>=2
    scale = rho / np.sqrt(np.where(total > 0, total, 1.0))
    return tuple(wj * scale for wj in (w1, w2, w3, w4, w5))


def partition_of_unity(p: BlackHoleParams, xi: FrequencyTriplet, delta_F: float,
                       R: float = 20.0):
    """The five partition weights at one triplet."""
    require_admissible(p, xi)
    chis = partition_weights_arrays(
        p, np.array([xi.xi_tau]), np.array([xi.xi_phi]), np.array([xi.Lam]),
        delta_F, R=R)
    return tuple(float(c[0]) for c in chis)


def classify_regimes(p: BlackHoleParams, xi: FrequencyTriplet, delta_F: float,
                     R: float = 20.0) -> RegimeMembership:
    """Open-set membership, TR1/TR2 thresholds and partition weights."""
    require_admissible(p, xi)
    n = xi.norm()
    xt = np.array([xi.xi_tau / n])
    xp = np.array([xi.xi_phi / n])
    lam = np.array([xi.Lam / n])
    sr, a_, t_, tr = regime_flags(p, xt, xp, lam, delta_F)
    r3 = r4 = None
    in_tr1 = in_tr2 = False
    if tr[0]:
        r3 = float(threshold_radii(p, xt, xp, lam, delta_F, 0.25, R=R)[0])
        r4 = float(threshold_radii(p, xt, xp, lam, delta_F, 0.5, R=R)[0])
        in_tr1 = r3 > R * p.m
        in_tr2 = r4 < R * p.m
    chi = partition_of_unity(p, xi, delta_F, R=R)
    return RegimeMembership(
        in_SR=bool(sr[0]), in_A=bool(a_[0]), in_T=bool(t_[0]), in_TR=bool(tr[0]),
        in_TR1=in_tr1, in_TR2=in_tr2, chi=chi, delta_F=delta_F, r3=r3, r4=r4)


# -- regularized trapping radius ----------------------------------------------

def chi5_tilde_arrays(p: BlackHoleParams, xt, xp, lam, delta_F, R=20.0):
    """Loose TR2 bump: exactly 1 wherever chi_5 > 0, supported inside TR2.

    Rebuilds the TR2 weight with ramp thresholds [lo/2, lo] in place of
    [lo, hi]; each loose factor saturates at the margin where the strict
    factor merely switches on, and the product of saturated factors is 1.
    """
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    nrm = np.sqrt(xt**2 + xp**2 + lam**2)
    safe = np.where(nrm > 0, nrm, 1.0)
    u, v, w = xt / safe, xp / safe, lam / safe
    lo, hi = 0.5 * RAMP_LO, RAMP_LO
    _, _, _, wtr, _ = _raw_weights(p, u, v, w, delta_F, lo=lo, hi=hi)
    _, w5 = _tr_split_weights(p, u, v, w, wtr, delta_F, lo=lo, hi=hi)
    return w5


def r_trap_arrays(p: BlackHoleParams, xt, xp, lam, delta_F, R=20.0):
    """Regularized trapping radius: 3m off the TR2 bump, r_max on it."""
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    ch5 = chi5_tilde_arrays(p, xt, xp, lam, delta_F, R=R)
    out = np.full(np.shape(ch5), 3.0 * p.m)
    act = ch5 > 0.0
    if np.any(act):
        nrm = np.sqrt(xt**2 + xp**2 + lam**2)
        _, _, rmx = classify_potential_arrays(
            p, xt[act] / nrm[act], xp[act] / nrm[act], lam[act] / nrm[act])
        if np.any(np.isnan(rmx)):
            raise ClassificationAmbiguous("TR2 bump met a potential without maximum")
        out[act] = 3.0 * p.m * (1.0 - ch5[act]) + ch5[act] * rmx
    return out


def r_trap(p: BlackHoleParams, xi: FrequencyTriplet, delta_F: float,
           R: float = 20.0) -> float:
    require_admissible(p, xi)
    return float(r_trap_arrays(p, np.array([xi.xi_tau]), np.array([xi.xi_phi]),
                               np.array([xi.Lam]), delta_F, R=R)[0])


# -- fitted-constant checks and the delta_F search ----------------------------

def fitted_lemma_constants(p: BlackHoleParams, delta_F: float, n: int = 20_000,
                           seed: int = 0, R: float = 20.0) -> dict:
    """Measure the positivity constants behind the trapping structure.

    * ``b_slope``   : inf over non-superradiant-side samples of
                      -(r - r_max) dV/dr * r^4 / (Lam^2 (r - r_max)^2),
                      using the hypothesis -xi_tau xi_phi <= omega_H xi_phi^2
                      + delta_F Lam^2 (every such potential must have a
                      unique maximum for the number to make sense);
    * ``b_gap``     : inf over the superradiant closure
                      0 < -xi_tau xi_phi <= omega_H xi_phi^2 of
                      (V(r_max) - xi_tau^2)/Lam^2;
    * ``tr_bound_ok``: xi_tau k_plus >= delta_F^{3/2} Lam^2 / sqrt(2) on TR
                      samples;
    * ``cover_ok``  : every sample belongs to at least one regime.

    All infima are reported; callers decide whether positivity at the given
    delta_F is acceptable.
    """
    rng = np.random.default_rng(seed)
    xt, xp, lam = sample_triplets(p, n, rng)
    out: dict = {"delta_F": delta_F}

    sr, a_, t_, tr = regime_flags(p, xt, xp, lam, delta_F)
    out["cover_ok"] = bool(np.all(sr | a_ | t_ | tr))

    hyp = (-xt * xp <= p.omega_H * xp**2 + delta_F * lam**2) & (lam > 0)
    case, _, rmx = classify_potential_arrays(p, xt[hyp], xp[hyp], lam[hyp])
    out["hyp1_unique_max"] = bool(np.all(case == 1))
    if out["hyp1_unique_max"] and np.any(hyp):
        r = np.geomspace(p.r_plus * 1.0001, 40.0 * p.m, 200)[:, None]
        dv = dV_dr(p, r, xt=xt[hyp][None, :], xp=xp[hyp][None, :], lam=lam[hyp][None, :])
        dr = r - rmx[None, :]
        mask = np.abs(dr) > 1e-3 * p.m
        ratio = np.where(mask, -dr * dv * r**4 / (lam[hyp][None, :] ** 2 * dr**2), np.inf)
        out["b_slope"] = float(np.min(ratio))
    else:
        out["b_slope"] = -math.inf

    closure = (-xt * xp > 0) & (-xt * xp <= p.omega_H * xp**2) & (lam > 0)
    if np.any(closure):
        case2, _, rmx2 = classify_potential_arrays(p, xt[closure], xp[closure], lam[closure])
        if np.all(case2 == 1):
            vmax = potential_V(p, rmx2, xt=xt[closure], xp=xp[closure], lam=lam[closure])
            out["b_gap"] = float(np.min((vmax - xt[closure] ** 2) / lam[closure] ** 2))
        else:
            out["b_gap"] = -math.inf
    else:
        out["b_gap"] = math.inf  # vacuous at a=0 if no sample lands in the closure

    # bump positivity over the supports of the superradiant and
    # angular-dominated partition weights: their multiplier constructions
    # hinge on V - xi_tau^2 > 0 at r_max, so delta_F must be small enough
    # that no trapped ray carries weight there
    w1, w2, _, _, _ = _raw_weights(p, xt, xp, lam, delta_F)
    bump = ((w1 > 0) | (w2 > 0)) & (lam > 0)
    if np.any(bump):
        case3, _, rmx3 = classify_potential_arrays(p, xt[bump], xp[bump], lam[bump])
        if np.all(case3 == 1):
            vmax3 = potential_V(p, rmx3, xt=xt[bump], xp=xp[bump], lam=lam[bump])
            out["b0_bump"] = float(np.min((vmax3 - xt[bump] ** 2) / lam[bump] ** 2))
        else:
            out["b0_bump"] = -math.inf
    else:
        out["b0_bump"] = math.inf

    if np.any(tr):
        lhs = xt[tr] * k_plus(p, xt[tr], xp[tr])
        rhs = delta_F**1.5 * lam[tr] ** 2 / math.sqrt(2.0) / p.m**1.5
        out["tr_bound_ok"] = bool(np.all(lhs >= rhs))
        out["tr_bound_margin"] = float(np.min(lhs - rhs))
    else:
        out["tr_bound_ok"] = True
        out["tr_bound_margin"] = math.inf
    return out


def search_delta_F(p: BlackHoleParams, n: int = 20_000, seed: int = 0,
                   kmax: int = 12) -> tuple[float, dict]:
    """Largest delta_F = 2^-k (m-a)/m^2 whose fitted constants certify."""
    last = None
    for k in range(kmax + 1):
        dF = 2.0**-k * (p.m - p.a) / p.m**2
        rep = fitted_lemma_constants(p, dF, n=n, seed=seed)
        last = rep
        if (rep["cover_ok"] and rep["hyp1_unique_max"] and rep["b_slope"] > 0
                and rep["b_gap"] > 0 and rep["b0_bump"] > 0 and rep["tr_bound_ok"]):
            return dF, rep
    raise CoverGap(f"no delta_F on the lattice certifies; last report {last}")
