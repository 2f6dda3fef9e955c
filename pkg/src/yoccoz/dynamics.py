"""Iteration of p_c(z) = z**2 + c: potentials, fixed points, external rays, orbits."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import (AlphaNotRepelling, DegenerateFixedPoint, NoLandingCycleFound,
                     RayTraceDiverged)

DEFAULT_BUDGET = 4096
FIXED_POINT_TOL = 1e-12
LANDING_TOL = 1e-6
RAY_TOL = 1e-9
Q_MAX = 64
MIN_STEP = 2.0 ** -20
# Potential is evaluated once |z| passes this radius; truncation error ~ |c|/R**2.
POTENTIAL_RADIUS = 1e50
# Newton for rays targets f^m(z) = w**(2**m) with log|w**(2**m)| >= RAY_LOG_RADIUS.
RAY_LOG_RADIUS = 16.0


def as_point(z) -> complex:
    """Coerce to complex, rejecting NaN and infinities."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite point {z!r}")
    return z


def escape_radius(c) -> float:
    return max(2.0, abs(complex(c))) + 1.0


def iterate(c, z, n: int) -> complex:
    """Apply p_c n times to z.

    An orbit that overflows double range is returned as complex(inf, 0); use
    `escape_radius` to decide escape for finite values.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    c, z = as_point(c), as_point(z)
    for _ in range(n):
        if abs(z) > 1e150:
            return complex(math.inf, 0.0)
        z = z * z + c
    return z


def green_potential(c, z, budget: int = DEFAULT_BUDGET, full_output: bool = False):
    """Green function G_c(z) = lim 2**-n log|p_c^n(z)|.

    Returns 0 for points still bounded after `budget` iterations; with
    `full_output` the pair (G, bounded_at_budget) is returned instead.
    """
    c, z = as_point(c), as_point(z)
    for n in range(budget + 1):
        r = abs(z)
        if r > POTENTIAL_RADIUS:
            g = math.log(r) / 2.0 ** n
            return (g, False) if full_output else g
        z = z * z + c
    return (0.0, True) if full_output else 0.0


def green_grid(c, z: np.ndarray, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Vectorized `green_potential` over an array of points."""
    c = as_point(c)
    shape = np.shape(z)
    zz = np.asarray(z, dtype=complex).ravel().copy()
    g = np.zeros(zz.size)
    idx = np.arange(zz.size)
    for n in range(budget + 1):
        r = np.abs(zz)
        esc = r > POTENTIAL_RADIUS
        if esc.any():
            g[idx[esc]] = np.log(r[esc]) / 2.0 ** n
            keep = ~esc
            idx, zz = idx[keep], zz[keep]
            if idx.size == 0:
                break
        zz = zz * zz + c
    return g.reshape(shape)


def escape_counts(c, z: np.ndarray, budget: int = 256) -> np.ndarray:
    """Number of steps before |z_n| exceeds the escape radius; `budget` for
    points still bounded."""
    c = as_point(c)
    R = escape_radius(c)
    shape = np.shape(z)
    zz = np.asarray(z, dtype=complex).ravel().copy()
    out = np.full(zz.size, budget, dtype=np.int32)
    idx = np.arange(zz.size)
    for n in range(budget):
        esc = np.abs(zz) > R
        if esc.any():
            out[idx[esc]] = n
            keep = ~esc
            idx, zz = idx[keep], zz[keep]
            if idx.size == 0:
                break
        zz = zz * zz + c
    return out.reshape(shape)


@dataclass(frozen=True)
class ParameterPoint:
    c: complex
    alpha: complex
    beta: complex
    alpha_multiplier: complex
    beta_multiplier: complex
    alpha_repelling: bool


def fixed_points(c) -> ParameterPoint:
    """Fixed points of p_c; alpha uses the principal square root branch."""
    c = as_point(c)
    disc = 1 - 4 * c
    if abs(disc) < 1e-14:
        raise DegenerateFixedPoint(f"c={c} has a double fixed point")
    s = cmath.sqrt(disc)
    alpha = (1 - s) / 2
    beta = (1 + s) / 2
    # one Newton polish on z^2 - z + c keeps the residual at roundoff level
    alpha -= (alpha * alpha - alpha + c) / (2 * alpha - 1)
    beta -= (beta * beta - beta + c) / (2 * beta - 1)
    return ParameterPoint(c, alpha, beta, 2 * alpha, 2 * beta, abs(2 * alpha) > 1)


def _as_angle(angle) -> Fraction:
    a = Fraction(angle)
    return a - math.floor(a)


def doubling_period(angle) -> tuple[int, int]:
    """(preperiod, period) of a rational angle under doubling mod 1."""
    a = _as_angle(angle)
    seen = {}
    k = 0
    while a not in seen:
        seen[a] = k
        a = _as_angle(2 * a)
        k += 1
    return seen[a], k - seen[a]


@dataclass(frozen=True)
class RayTrace:
    angle: Fraction
    samples: tuple  # of (potential, point), potentials strictly decreasing
    landed: bool = False
    landing_estimate: Optional[complex] = None

    @property
    def points(self) -> np.ndarray:
        return np.array([z for _, z in self.samples], dtype=complex)

    @property
    def potentials(self) -> np.ndarray:
        return np.array([h for h, _ in self.samples])


def _ray_newton(c: complex, angle: Fraction, h: float, z0: complex, maxiter: int = 40):
    m = max(0, math.ceil(math.log2(RAY_LOG_RADIUS / h)))
    phase = float(_as_angle(angle * 2 ** m))
    target = cmath.exp(complex(h * 2.0 ** m, 2 * math.pi * phase))
    z = z0
    for _ in range(maxiter):
        w, dw = z, 1.0 + 0j
        for _ in range(m):
            dw = 2 * w * dw
            w = w * w + c
            if abs(w) > 1e100:
                return None
        if dw == 0:
            return None
        dz = (w - target) / dw
        z -= dz
        if not cmath.isfinite(z):
            return None
        if abs(dz) <= 1e-15 * max(1.0, abs(z)):
            return z
    # accept a final state whose residual in potential is tiny
    g = green_potential(c, z)
    return z if abs(g - h) < RAY_TOL else None


def _aitken(z0: complex, z1: complex, z2: complex) -> complex:
    d = (z2 - z1) - (z1 - z0)
    if abs(d) < 1e-300:
        return z2
    return z2 - (z2 - z1) ** 2 / d


def _polish_periodic(c: complex, z: complex, period: int, preperiod: int) -> complex:
    """Newton on p^(pre+per)(z) = p^pre(z); returns z unchanged if it fails to converge."""
    x = z
    for _ in range(50):
        a, da = x, 1.0 + 0j
        b = db = None
        for k in range(preperiod + period):
            if k == preperiod:
                b, db = a, da
            da = 2 * a * da
            a = a * a + c
        if b is None:
            b, db = a, da
        f, df = a - b, da - db
        if df == 0:
            return z
        step = f / df
        x -= step
        if not cmath.isfinite(x) or abs(x - z) > 1e-2:
            return z
        if abs(step) < 1e-15:
            return x
    return z


def trace_external_ray(param, angle, h_hi: float = 1.0, h_lo: float = 0.0,
                       steps_per_halving: int = 8, landing_tol: float = LANDING_TOL,
                       h_min: float = 1e-12) -> RayTrace:
    """Trace the external ray of `angle` from potential h_hi down to h_lo.

    With h_lo == 0 the descent continues until consecutive landing estimates
    (Aitken extrapolation at the ray's eventual period, polished by Newton on
    the periodicity equation) agree to `landing_tol`, or until `h_min`.
    """
    c = param.c if isinstance(param, ParameterPoint) else as_point(param)
    angle = _as_angle(angle)
    if not (h_hi > h_lo >= 0):
        raise ValueError("need h_hi > h_lo >= 0")
    landing = h_lo == 0
    stop = h_min if landing else h_lo
    min_log_step = MIN_STEP

    h = h_hi
    z = _ray_newton(c, angle, h, cmath.exp(complex(h, 2 * math.pi * float(angle))))
    if z is None:
        raise RayTraceDiverged(f"no convergence at starting potential {h}")
    samples = [(h, z)]
    last_len = None
    log_step = 1.0 / steps_per_halving
    pre, per = doubling_period(angle)
    estimates = []
    landed, estimate = False, None
    # halving index -> sample, for extrapolation on an exact dyadic schedule
    dyadic = {0: z}

    while h > stop * (1 + 1e-12):
        # never step past the next point of the regular schedule, so that
        # dyadic potentials h_hi * 2**-k are always sampled exactly
        pos = math.log2(h_hi / h)
        grid = (math.floor(pos * steps_per_halving + 1e-6) + 1) / steps_per_halving
        step = min(log_step, grid - pos)
        h_next = max(h_hi * 2.0 ** -(pos + step), stop)
        z_next = _ray_newton(c, angle, h_next, z)
        ok = z_next is not None
        if ok and last_len is not None:
            ok = abs(z_next - z) <= 4 * last_len + 1e-12
        if not ok:
            log_step = step / 2
            if log_step < min_log_step:
                raise RayTraceDiverged(f"angle {angle}: refinement failed at potential {h:.3e}")
            continue
        last_len = abs(z_next - z)
        h, z = h_next, z_next
        samples.append((h, z))
        log_step = min(2 * step, 1.0 / steps_per_halving)

        if landing:
            k = math.log2(h_hi / h)
            kr = round(k)
            if abs(k - kr) < 1e-9:
                dyadic[kr] = z
                if kr >= 2 * per and kr % per == 0 and kr - 2 * per in dyadic:
                    est = _aitken(dyadic[kr - 2 * per], dyadic[kr - per], z)
                    est = _polish_periodic(c, est, per, pre)
                    if estimates and abs(est - estimates[-1]) < landing_tol:
                        landed, estimate = True, est
                        break
                    estimates.append(est)
    if landing and not landed and estimates:
        estimate = estimates[-1]
    return RayTrace(angle, tuple(samples), landed, estimate)


def rotation_cycle(p: int, q: int) -> tuple[Fraction, ...]:
    """The doubling cycle of period q with combinatorial rotation number p/q, sorted."""
    if not (0 < p < q) or math.gcd(p, q) != 1:
        raise ValueError(f"need 0 < p < q coprime, got {p}/{q}")
    # theta_{j+p} = 2 theta_j - n_j with n_j = 1 exactly for the top p angles
    num, j = 0, 0
    for _ in range(q):
        n_j = 1 if j >= q - p else 0
        num = 2 * num + n_j  # after the loop theta_0 = num / (2**q - 1) up to the recursion order
        j = (j + p) % q
    # the recursion above builds the binary digits of theta_0 in order
    theta0 = Fraction(num, 2 ** q - 1)
    cycle, a = [], theta0
    for _ in range(q):
        cycle.append(a)
        a = _as_angle(2 * a)
    return tuple(sorted(cycle))


def alpha_ray_cycle(param: ParameterPoint, q_max: int = Q_MAX,
                    landing_tol: float = LANDING_TOL) -> tuple[Fraction, ...]:
    """Angles of the ray cycle landing at alpha, searched by period then rotation number."""
    if not param.alpha_repelling:
        raise AlphaNotRepelling(f"|alpha multiplier| = {abs(param.alpha_multiplier):.6g} <= 1")
    for q in range(2, q_max + 1):
        for p in range(1, q):
            if math.gcd(p, q) != 1:
                continue
            cycle = rotation_cycle(p, q)
            if all(_lands_at(param, a, landing_tol) for a in cycle):
                return cycle
    raise NoLandingCycleFound(f"no cycle of period <= {q_max} lands at alpha for c={param.c}")


def _lands_at(param: ParameterPoint, angle, tol: float) -> bool:
    try:
        ray = trace_external_ray(param, angle, 1.0, 0.0, landing_tol=tol)
    except RayTraceDiverged:
        return False
    return ray.landed and abs(ray.landing_estimate - param.alpha) < tol


@dataclass(frozen=True)
class OrbitSegment:
    c: complex
    start: complex
    points: tuple
    escaped_at: Optional[int] = None
    preperiod: Optional[int] = None
    period: Optional[int] = None
    numeric_only: bool = field(default=True)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]


def orbit(c, z, length: int, period_tol: float = 1e-9) -> OrbitSegment:
    """Orbit z, p(z), ... of `length` points, stopping early on escape."""
    c, z = as_point(c), as_point(z)
    start = z
    r = escape_radius(c)
    pts = [z]
    escaped_at = None
    if abs(z) > r:
        escaped_at = 0
    while escaped_at is None and len(pts) < length:
        z = z * z + c
        pts.append(z)
        if abs(z) > r:
            escaped_at = len(pts) - 1
    pre = per = None
    if escaped_at is None:
        arr = np.array(pts)
        for i in range(1, len(arr)):
            d = np.abs(arr[:i] - arr[i])
            hit = np.nonzero(d <= period_tol * max(1.0, abs(arr[i])))[0]
            if hit.size:
                pre, per = int(hit[0]), int(i - hit[0])
                break
    return OrbitSegment(c, start, tuple(pts), escaped_at, pre, per)


def critical_orbit(c, budget: int) -> OrbitSegment:
    """Orbit of the critical point 0 with escape and (numeric) periodicity annotations."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    return orbit(c, 0.0, budget)


def airplane_parameter() -> float:
    """Real root of p_c^3(0) = 0 near -1.7549 (the period-3 superattracting parameter)."""
    from scipy.optimize import brentq

    return brentq(lambda c: (c * c + c) ** 2 + c, -1.8, -1.7, xtol=1e-17, rtol=1e-15)
