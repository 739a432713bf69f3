"""Per-mode radial wave kernels for the inverse-square potential, region by
region, with the diffractive jump across the outer light cone.

For order nu the kernel at (r1, r2, t) is the sine transform of a product of
Bessel functions. It vanishes for t < |r1 - r2| (region I), is a finite
Legendre-type integral between the cones (region II), and past the outer cone
t > r1 + r2 (region III) picks up an extra diffractive term proportional to
sin(pi nu). The jump of the kernel across t = r1 + r2 is
-(1/2) (r1 r2)^(-1/2) sin(pi nu), which vanishes exactly when nu is an
integer: that is the observable this module exists to measure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import integrate_adaptive, integrate_decaying
from .specfun import bessel_j, legendre_q_shifted

_INNER_TOL = 1e-11          # quadrature tolerance inside kernel integrals
EPS_CONE_FACTOR = 1e-6      # default cone band is this times (r1 + r2 + t)


class KernelError(Exception):
    pass


class ConeProximity(KernelError):
    """Evaluation point is within the tolerance band of a light cone."""


@dataclass(frozen=True)
class ModeParams:
    """Angular mode n with coupling a; effective Bessel order nu = sqrt(n^2 + a)."""
    n: int
    a: float
    nu: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("coupling a must be >= 0")
        expected = math.sqrt(self.n * self.n + self.a)
        if abs(self.nu - expected) > 1e-12 * (1.0 + expected):
            raise ValueError(f"nu must equal sqrt(n^2 + a) = {expected!r}")


def mode_params(n: int, a: float) -> ModeParams:
    return ModeParams(n=int(n), a=float(a), nu=math.sqrt(n * n + a))


@dataclass(frozen=True)
class KernelPoint:
    r1: float
    r2: float
    t: float

    def __post_init__(self):
        if not (self.r1 > 0 and self.r2 > 0 and self.t > 0):
            raise ValueError("kernel points need r1, r2, t all > 0")


class Region(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    MAIN_CONE = "MainCone"
    DIFFRACTIVE_CONE = "DiffractiveCone"


def default_eps_cone(p: KernelPoint) -> float:
    return EPS_CONE_FACTOR * (p.r1 + p.r2 + p.t)


def classify_region(p: KernelPoint, eps_cone: float | None = None) -> Region:
    """Locate p relative to the cones t = |r1 - r2| and t = r1 + r2."""
    if eps_cone is None:
        eps_cone = default_eps_cone(p)
    if eps_cone <= 0:
        raise ValueError("eps_cone must be > 0")
    inner = abs(p.r1 - p.r2)
    outer = p.r1 + p.r2
    if abs(p.t - inner) <= eps_cone:
        return Region.MAIN_CONE
    if abs(p.t - outer) <= eps_cone:
        return Region.DIFFRACTIVE_CONE
    if p.t < inner:
        return Region.I
    if p.t < outer:
        return Region.II
    return Region.III


def _region_ii_value(nu: float, p: KernelPoint) -> float:
    # (1/pi) int_0^{s*} cos(nu s) D(s)^{-1/2} ds with
    # D(s) = t^2 - r1^2 - r2^2 + 2 r1 r2 cos s = 4 r1 r2 sin((s*+s)/2) sin((s*-s)/2),
    # s* = arccos((r1^2 + r2^2 - t^2)/(2 r1 r2)). Integrable singularity at s*.
    # Substituting s = s* - w^2 removes the inverse-square-root endpoint
    # singularity; sin((s*-s)/2) = sin(w^2/2) is then formed directly from w,
    # with no cancellation against s*.
    r1, r2, t = p.r1, p.r2, p.t
    arg = (r1 * r1 + r2 * r2 - t * t) / (2.0 * r1 * r2)
    s_star = math.acos(min(1.0, max(-1.0, arg)))
    c = 4.0 * r1 * r2

    def integrand(w):
        w2 = w * w
        den = c * math.sin(s_star - 0.5 * w2) * math.sin(0.5 * w2)
        return 2.0 * w * math.cos(nu * (s_star - w2)) / math.sqrt(den)

    res = integrate_adaptive(integrand, 0.0, math.sqrt(s_star), _INNER_TOL)
    return res.value / math.pi


def diffractive_integral(nu: float, beta: float) -> float:
    """int_0^beta e^(-nu s) (2 cosh(beta) - 2 cosh(s))^(-1/2) ds.

    Tends to pi/2 as beta -> 0+ (minus a first-order correction nu*beta).
    The difference of hyperbolic cosines is formed as a product of sinh
    factors so the inverse square root stays accurate near s = beta.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if nu < 0:
        raise ValueError("nu must be >= 0")

    # s = beta - w^2 as in the region-II integral: sinh((beta-s)/2) becomes
    # sinh(w^2/2), formed from w directly.
    def integrand(w):
        w2 = w * w
        den = 4.0 * math.sinh(beta - 0.5 * w2) * math.sinh(0.5 * w2)
        return 2.0 * w * math.exp(-nu * (beta - w2)) / math.sqrt(den)

    res = integrate_adaptive(integrand, 0.0, math.sqrt(beta), _INNER_TOL)
    return res.value


def _region_iii_value(nu: float, p: KernelPoint) -> float:
    # Same integral with s* = pi (now regular at both ends), minus the
    # diffractive term (1/pi)(r1 r2)^(-1/2) sin(pi nu) * diffractive_integral.
    r1, r2, t = p.r1, p.r2, p.t
    z = (t * t - r1 * r1 - r2 * r2) / (2.0 * r1 * r2)
    beta = math.acosh(z)
    c = r1 * r2

    def integrand(s):
        den = c * (2.0 * math.cosh(beta) + 2.0 * math.cos(s))
        return math.cos(nu * s) / math.sqrt(den)

    main = integrate_adaptive(integrand, 0.0, math.pi, _INNER_TOL).value
    diff = math.sin(math.pi * nu) * diffractive_integral(nu, beta) / math.sqrt(c)
    return (main - diff) / math.pi


def mode_kernel(m: ModeParams, p: KernelPoint, eps_cone: float | None = None) -> float:
    """Kernel of the mode-nu radial wave propagator at (r1, r2, t).

    Region I returns 0.0 without quadrature. Points inside the cone
    tolerance band raise ConeProximity; take one-sided limits through
    cone_limits instead.
    """
    region = classify_region(p, eps_cone)
    if region is Region.I:
        return 0.0
    if region in (Region.MAIN_CONE, Region.DIFFRACTIVE_CONE):
        raise ConeProximity(
            f"point (r1={p.r1}, r2={p.r2}, t={p.t}) lies within the "
            f"{region.value} tolerance band")
    if region is Region.II:
        return _region_ii_value(m.nu, p)
    return _region_iii_value(m.nu, p)


def diffractive_jump(m: ModeParams, r1: float, r2: float) -> float:
    """Jump of the kernel across the outer cone t = r1 + r2 (III minus II side)."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be > 0")
    return -0.5 * math.sin(math.pi * m.nu) / math.sqrt(r1 * r2)


def is_mode_jump_nonzero(n: int, a: float) -> bool:
    """True iff sqrt(n^2 + a) is not an integer, i.e. mode n genuinely diffracts."""
    if a < 0:
        raise ValueError("coupling a must be >= 0")
    nu = math.sqrt(n * n + a)
    nearest = round(nu)
    return abs(nu - nearest) > 1e-12 * (1.0 + nu)


def _default_cone_deltas(m: ModeParams, r1c: float, r2: float, t: float) -> list:
    # Keep offsets well inside the asymptotic window delta << r1 r2 / (2 t nu^2)
    # where the one-sided expansion in sqrt(delta) holds.
    scale = 0.04 * (r1c * r2) / (2.0 * t * (1.0 + m.nu * m.nu))
    return [scale * 0.5 ** k for k in range(6)]


def cone_limits(m: ModeParams, r2: float, t: float,
                delta_list: list | None = None) -> float:
    """One-sided limit difference of the kernel across the outer cone.

    Evaluates mode_kernel at r1 = (t - r2) -/+ delta (region III side first)
    and extrapolates the difference to delta = 0. The one-sided error is a
    series in sqrt(delta) with delta*log(delta) terms, so the extrapolation
    fits {1, x, x^2, x^2 log x, x^3, x^3 log x} in x = sqrt(delta) (truncated
    to the number of offsets supplied) and reports the constant term.
    """
    r1c = t - r2
    if r1c <= 0:
        raise ValueError("need t > r2 so the cone point r1 = t - r2 is positive")
    if delta_list is None:
        delta_list = _default_cone_deltas(m, r1c, r2, t)
    deltas = [float(d) for d in delta_list]
    if len(deltas) < 2 or any(d <= 0 for d in deltas):
        raise ValueError("delta_list must hold at least two positive offsets")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta_list must be strictly decreasing")
    if deltas[0] >= r1c:
        raise ValueError("largest offset crosses r1 = 0")

    eps = 0.5 * deltas[-1]
    diffs = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        iii_side = mode_kernel(m, KernelPoint(r1c - d, r2, t), eps_cone=eps)
        ii_side = mode_kernel(m, KernelPoint(r1c + d, r2, t), eps_cone=eps)
        diffs[i] = iii_side - ii_side

    x = np.sqrt(deltas)
    lx = np.log(x)
    columns = [np.ones_like(x), x, x ** 2, x ** 2 * lx, x ** 3, x ** 3 * lx]
    basis = np.stack(columns[:len(deltas)], axis=1)
    coeff = np.linalg.solve(basis, diffs)
    return float(coeff[0])


def synthesize_kernel(a: float, p: KernelPoint, dtheta: float,
                      n_max: int) -> complex:
    """Partial mode sum sum_{|n| <= n_max} e^(i n dtheta) K_{nu_n}(p).

    nu_n depends only on |n|, so conjugate modes pair into cosines and the
    sum is real up to roundoff. Normalization is pinned by the free case:
    at a = 0 the full sum converges to (t^2 - R^2)^(-1/2) with R the chord
    distance, i.e. 2 pi times the plane propagator, so physical values are
    this sum divided by 2 pi.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    total = mode_kernel(mode_params(0, a), p)
    for n in range(1, n_max + 1):
        k = mode_kernel(mode_params(n, a), p)
        total += 2.0 * math.cos(n * dtheta) * k
    return complex(total, 0.0)


def mode_magnitudes(a: float, p: KernelPoint, n_max: int) -> np.ndarray:
    """|K_{nu_n}(p)| for n = 0..n_max; the truncation-error diagnostic."""
    return np.array([abs(mode_kernel(mode_params(n, a), p))
                     for n in range(n_max + 1)])


def verify_lipschitz_hankel(nu: float, r1: float, r2: float, t: float) -> float:
    """Residual of the damped product-Bessel integral against its closed form.

    LHS: int_0^inf e^(-t lam) J_nu(r1 lam) J_nu(r2 lam) d lam by direct
    quadrature. RHS: (1/pi)(r1 r2)^(-1/2) Q_{nu-1/2}(Z) with
    Z = (r1^2 + r2^2 + t^2)/(2 r1 r2). Independent code paths end to end.
    """
    if min(r1, r2, t) <= 0:
        raise ValueError("r1, r2, t must be > 0")

    def integrand(lam):
        return math.exp(-t * lam) * bessel_j(nu, r1 * lam) * bessel_j(nu, r2 * lam)

    lhs = integrate_decaying(integrand, 0.0, 1e-9, t).value
    z = (r1 * r1 + r2 * r2 + t * t) / (2.0 * r1 * r2)
    rhs = legendre_q_shifted(nu, z) / (math.pi * math.sqrt(r1 * r2))
    return abs(lhs - rhs)
