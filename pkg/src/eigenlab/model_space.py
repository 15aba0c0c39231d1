"""Constant-curvature model geometry.

The model space M_kappa is the complete, simply connected space of constant
sectional curvature -kappa**2 (kappa = 0 is Euclidean space).  In polar
coordinates its metric is dr^2 + (sinh(kappa r)/kappa)^2 dtheta^2, which gives
closed-form sphere areas and one-dimensional radial problems for geodesic
balls:

* volumes v_kappa(r) and the inverse "volume radius" r_kappa(v),
* the first Dirichlet eigenvalue of a geodesic ball, computed by shooting on
  the radial ODE  psi'' + (n-1) kappa coth(kappa r) psi' + lambda psi = 0,
* the reverse-Holder constants built from powered norms of the radial
  eigenfunction on the ball with a prescribed fundamental frequency.

All functions are pure and cache the expensive radial solves.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    DomainError,
    ExponentOrderError,
    InvalidDimensionError,
    NoFiniteBallError,
    SolverError,
)
from .quadrature import gauss_legendre_panels

_SHOOT_RTOL = 1e-12
_SHOOT_ATOL = 1e-14
_SERIES_FRACTION = 1e-4  # start radius of the shooting integration, relative


@dataclass(frozen=True)
class ModelSpace:
    """Simply connected model space of curvature -kappa**2 in dimension n."""

    n: int
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidDimensionError(f"model dimension must be an integer >= 2, got {self.n}")
        if not (self.kappa >= 0.0):
            raise DomainError(f"curvature parameter kappa must be >= 0, got {self.kappa}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def spectral_floor(self):
        """Infimum of ball eigenvalues as the radius grows: ((n-1) kappa)^2 / 4."""
        return ((self.n - 1) * self.kappa) ** 2 / 4.0


def unit_ball_volume(n):
    """Volume of the n-dimensional Euclidean unit ball, pi^(n/2)/Gamma(n/2+1)."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"ball dimension must be an integer >= 1, got {n}")
    n = int(n)
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sinh_ratio(kappa, r):
    """sinh(kappa r)/kappa with the kappa -> 0 limit r; vectorized in r."""
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        out = r.copy()
    else:
        out = np.sinh(kappa * r) / kappa
    return out if out.ndim else float(out)


def ball_volume(ms, r):
    """Volume of the geodesic ball of radius r in the model space."""
    if np.any(np.asarray(r) < 0):
        raise DomainError(f"ball radius must be >= 0, got {r}")
    n, kappa = ms.n, ms.kappa
    wn = unit_ball_volume(n)
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        out = wn * r**n
    elif n == 2:
        out = 2.0 * math.pi * (np.cosh(kappa * r) - 1.0) / kappa**2
    elif n == 3:
        out = math.pi * (np.sinh(2.0 * kappa * r) - 2.0 * kappa * r) / kappa**3
    else:
        scalar = r.ndim == 0
        rs = np.atleast_1d(r)
        out = np.array(
            [
                n * wn * gauss_legendre_panels(lambda t: sinh_ratio(kappa, t) ** (n - 1), 0.0, ri)
                if ri > 0
                else 0.0
                for ri in rs
            ]
        )
        if scalar:
            return float(out[0])
        return out
    return float(out) if out.ndim == 0 else out


def boundary_volume(ms, r):
    """Area of the geodesic sphere of radius r: n omega_n (sinh(kappa r)/kappa)^(n-1)."""
    if np.any(np.asarray(r) < 0):
        raise DomainError(f"sphere radius must be >= 0, got {r}")
    n = ms.n
    out = n * unit_ball_volume(n) * sinh_ratio(ms.kappa, r) ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def volume_radius(ms, v):
    """Radius of the geodesic ball of volume v (inverse of ``ball_volume``)."""
    if np.any(np.asarray(v) < 0):
        raise DomainError(f"volume must be >= 0, got {v}")
    n, kappa = ms.n, ms.kappa
    wn = unit_ball_volume(n)
    v_arr = np.asarray(v, dtype=float)
    if kappa == 0.0:
        out = (v_arr / wn) ** (1.0 / n)
        return float(out) if out.ndim == 0 else out
    if n == 2:
        out = np.arccosh(1.0 + v_arr * kappa**2 / (2.0 * math.pi)) / kappa
        return float(out) if out.ndim == 0 else out

    def solve_one(vi):
        if vi == 0.0:
            return 0.0
        hi = max((vi / wn) ** (1.0 / n), 1.0 / kappa)
        while ball_volume(ms, hi) < vi:
            hi *= 2.0
        return brentq(lambda r: ball_volume(ms, r) - vi, 0.0, hi, xtol=1e-15, rtol=8.9e-16)

    if v_arr.ndim == 0:
        return solve_one(float(v_arr))
    return np.array([solve_one(vi) for vi in v_arr])


def _coth_coeff(n, kappa, r):
    """(n-1) * kappa * coth(kappa r), the first-order radial Laplacian coefficient."""
    if kappa == 0.0:
        return (n - 1) / r
    x = kappa * r
    if x < 1e-6:
        # series of coth keeps the coefficient finite near the pole
        return (n - 1) * (1.0 / r + kappa * x / 3.0 - kappa * x**3 / 45.0)
    return (n - 1) * kappa / math.tanh(x)


def _series_state(n, kappa, lam, r0):
    """Power-series start (psi, psi') at r0 removing the r = 0 coordinate pole."""
    a2 = -lam / (2.0 * n)
    a4 = lam * (lam + 2.0 * (n - 1) * kappa**2 / 3.0) / (8.0 * n * (n + 2))
    psi = 1.0 + a2 * r0**2 + a4 * r0**4
    dpsi = 2.0 * a2 * r0 + 4.0 * a4 * r0**3
    return psi, dpsi


def _series_psi(n, kappa, lam, r):
    a2 = -lam / (2.0 * n)
    a4 = lam * (lam + 2.0 * (n - 1) * kappa**2 / 3.0) / (8.0 * n * (n + 2))
    return 1.0 + a2 * r**2 + a4 * r**4


def _rhs(n, kappa, lam):
    def fun(r, y):
        c = _coth_coeff(n, kappa, r)
        return (y[1], -lam * y[0] - c * y[1])

    return fun


def _shoot_first_zero(n, kappa, lam, r_end):
    """First zero of the shot radial solution on (0, r_end], or None."""
    r0 = _SERIES_FRACTION * r_end
    y0 = _series_state(n, kappa, lam, r0)

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(
        _rhs(n, kappa, lam),
        (r0, r_end),
        y0,
        method="RK45",
        rtol=_SHOOT_RTOL,
        atol=_SHOOT_ATOL,
        events=hit_zero,
    )
    if not sol.success:
        raise SolverError(f"radial shooting failed at lambda={lam}: {sol.message}")
    return sol.t_events[0][0] if sol.t_events[0].size else None


def _shoot_endpoint(n, kappa, lam, r_end):
    """psi(r_end) for the shot radial solution (no event termination)."""
    r0 = _SERIES_FRACTION * r_end
    y0 = _series_state(n, kappa, lam, r0)
    sol = solve_ivp(
        _rhs(n, kappa, lam),
        (r0, r_end),
        y0,
        method="RK45",
        rtol=_SHOOT_RTOL,
        atol=_SHOOT_ATOL,
    )
    if not sol.success:
        raise SolverError(f"radial shooting failed at lambda={lam}: {sol.message}")
    return sol.y[0, -1]


def _bessel_zero_estimate(n):
    """McMahon-type estimate of the first positive zero of J_(n/2-1)."""
    nu = n / 2.0 - 1.0
    if abs(nu) < 1e-12:
        return 2.404825557695773
    if abs(nu - 0.5) < 1e-12:
        return math.pi
    return nu + 1.8557571 * nu ** (1.0 / 3.0) + 1.033150 * nu ** (-1.0 / 3.0)


@lru_cache(maxsize=256)
def _shoot_eigenvalue(n, kappa, r_max):
    """Smallest lambda whose shot solution first vanishes exactly at r_max."""
    floor = ((n - 1) * kappa) ** 2 / 4.0
    gap_est = (_bessel_zero_estimate(n) / r_max) ** 2

    def has_zero(lam):
        return _shoot_first_zero(n, kappa, lam, r_max) is not None

    lo_gap, hi_gap = 0.9 * gap_est, 1.1 * gap_est
    for _ in range(200):
        if has_zero(floor + hi_gap):
            break
        hi_gap *= 1.6
    else:
        raise SolverError(
            f"eigenvalue bracket expansion failed upward (n={n}, kappa={kappa}, r={r_max})"
        )
    for _ in range(200):
        if not has_zero(floor + lo_gap):
            break
        lo_gap /= 1.6
    else:
        raise SolverError(
            f"eigenvalue bracket expansion failed downward (n={n}, kappa={kappa}, r={r_max})"
        )
    # bisect on the zero-location predicate until the bracket is well inside
    # the first radial branch, then polish on the smooth endpoint value
    while hi_gap - lo_gap > 0.02 * lo_gap:
        mid = 0.5 * (lo_gap + hi_gap)
        if has_zero(floor + mid):
            hi_gap = mid
        else:
            lo_gap = mid

    def endpoint(lam_gap):
        return _shoot_endpoint(n, kappa, floor + lam_gap, r_max)

    gap = brentq(endpoint, lo_gap, hi_gap, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    return floor + gap


def ball_eigenvalue(ms, r):
    """First Dirichlet eigenvalue of the geodesic ball of radius r (shooting + bisection)."""
    if not r > 0:
        raise DomainError(f"ball radius must be > 0, got {r}")
    if ms.kappa == 0.0:
        # Euclidean balls scale exactly: lambda(B_r) = lambda(B_1) / r^2
        return _shoot_eigenvalue(ms.n, 0.0, 1.0) / r**2
    return _shoot_eigenvalue(ms.n, ms.kappa, float(r))


def ball_radius_for_eigenvalue(ms, lam):
    """Radius of the geodesic ball whose first eigenvalue equals lam.

    The shot solution psi(.; lam) started at the origin vanishes for the first
    time exactly at that radius, so a single integration with zero-crossing
    event detection inverts ``ball_eigenvalue``.
    """
    floor = ms.spectral_floor
    if not lam > floor:
        raise NoFiniteBallError(
            f"no finite ball attains eigenvalue {lam}; spectral floor is {floor}"
        )
    n, kappa = ms.n, ms.kappa
    if kappa == 0.0:
        return math.sqrt(_shoot_eigenvalue(n, 0.0, 1.0) / lam)
    r_est = _bessel_zero_estimate(n) / math.sqrt(lam - floor)
    r0 = _SERIES_FRACTION * min(r_est, 1.0 / kappa)
    span = max(4.0 * r_est, 4.0 / kappa)
    start, state = r0, _series_state(n, kappa, lam, r0)

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    for _ in range(64):
        sol = solve_ivp(
            _rhs(n, kappa, lam),
            (start, start + span),
            state,
            method="RK45",
            rtol=_SHOOT_RTOL,
            atol=_SHOOT_ATOL,
            events=hit_zero,
        )
        if not sol.success:
            raise SolverError(f"radial integration failed inverting lambda={lam}: {sol.message}")
        if sol.t_events[0].size:
            return float(sol.t_events[0][0])
        start = sol.t[-1]
        state = sol.y[:, -1]
    raise SolverError(f"no sign change found inverting lambda={lam} (kappa={kappa}, n={n})")


@dataclass(frozen=True)
class RadialEigenSolution:
    """Radial first eigenpair of a geodesic ball, sup-normalized to psi(0) = 1."""

    model: ModelSpace
    eigenvalue: float
    r_max: float
    radial_grid: np.ndarray  # columns (r, psi, psi')
    volume_profile: np.ndarray  # columns (v, psi*(v))
    sup_norm: float

    def psi(self, r):
        """Eigenfunction values at radii r (series near 0, dense ODE output beyond)."""
        r = np.asarray(r, dtype=float)
        dense, r0 = self._dense, self._r0
        out = np.empty(r.shape if r.ndim else (1,))
        rr = np.atleast_1d(r)
        near = rr < r0
        if near.any():
            out[near] = _series_psi(self.model.n, self.model.kappa, self.eigenvalue, rr[near])
        if (~near).any():
            out[~near] = dense(np.clip(rr[~near], r0, self.r_max))[0]
        return float(out[0]) if r.ndim == 0 else out

    def psi_prime(self, r):
        r = np.asarray(r, dtype=float)
        dense, r0 = self._dense, self._r0
        rr = np.atleast_1d(r)
        out = np.empty(rr.shape)
        near = rr < r0
        if near.any():
            n, kappa, lam = self.model.n, self.model.kappa, self.eigenvalue
            a2 = -lam / (2.0 * n)
            a4 = lam * (lam + 2.0 * (n - 1) * kappa**2 / 3.0) / (8.0 * n * (n + 2))
            out[near] = 2.0 * a2 * rr[near] + 4.0 * a4 * rr[near] ** 3
        if (~near).any():
            out[~near] = dense(np.clip(rr[~near], r0, self.r_max))[1]
        return float(out[0]) if r.ndim == 0 else out

    def psi_star(self, v):
        """Decreasing rearrangement psi*(v) = psi(r_kappa(v)) by monotone interpolation."""
        vp = self.volume_profile
        return np.interp(np.asarray(v, dtype=float), vp[:, 0], vp[:, 1])

    def lp_mass(self, p):
        """Integral of psi^p over the ball against the model volume element."""
        if not p > 0:
            raise DomainError(f"exponent must be > 0, got {p}")
        n, kappa = self.model.n, self.model.kappa
        nwn = n * unit_ball_volume(n)

        def f(s):
            return nwn * sinh_ratio(kappa, s) ** (n - 1) * np.maximum(self.psi(s), 0.0) ** p

        return gauss_legendre_panels(f, 0.0, self.r_max, rel_tol=1e-12)

    def volume_identity_residuals(self):
        """Residual of the once-integrated radial equation at interior grid points.

        In volume coordinates the eigenfunction satisfies
        -(psi*)'(v) = lambda (n omega_n)^-2 (sinh(kappa r)/kappa)^(2-2n) * integral(psi*, 0..v);
        both sides are evaluated from the ODE state, so the residual measures
        integration error only.
        """
        n, kappa, lam = self.model.n, self.model.kappa, self.eigenvalue
        nwn = n * unit_ball_volume(n)
        r = self.radial_grid[1:-1, 0]
        dpsi = self.radial_grid[1:-1, 2]
        mass = self._mass_grid[1:-1]
        sig = sinh_ratio(kappa, r)
        lhs = -dpsi / (nwn * sig ** (n - 1))
        rhs = lam * sig ** (2 - 2 * n) / nwn**2 * mass
        return np.abs(lhs - rhs)


@lru_cache(maxsize=64)
def _radial_solution(n, kappa, r_max, n_grid):
    ms = ModelSpace(n, kappa)
    lam = ball_eigenvalue(ms, r_max)
    r0 = _SERIES_FRACTION * r_max
    nwn = n * unit_ball_volume(n)

    def rhs(r, y):
        c = _coth_coeff(n, kappa, r)
        ring = nwn * sinh_ratio(kappa, r) ** (n - 1)
        return (y[1], -lam * y[0] - c * y[1], ring * y[0], ring)

    psi0, dpsi0 = _series_state(n, kappa, lam, r0)
    # leading-order starts for the cumulative mass and volume states
    wn = unit_ball_volume(n)
    v0 = wn * r0**n
    m0 = v0  # psi ~ 1 near the origin
    sol = solve_ivp(
        rhs,
        (r0, r_max),
        (psi0, dpsi0, m0, v0),
        method="RK45",
        rtol=_SHOOT_RTOL,
        atol=_SHOOT_ATOL,
        dense_output=True,
    )
    if not sol.success:
        raise SolverError(f"radial eigenfunction integration failed: {sol.message}")
    r_grid = np.linspace(0.0, r_max, n_grid)
    inner = r_grid < r0
    psi = np.where(inner, _series_psi(n, kappa, lam, r_grid), 0.0)
    dpsi = np.where(inner, -lam * r_grid / n, 0.0)
    states = sol.sol(np.clip(r_grid, r0, r_max))
    psi = np.where(inner, psi, states[0])
    dpsi = np.where(inner, dpsi, states[1])
    mass = np.where(inner, wn * r_grid**n, states[2])
    vols = np.where(inner, wn * r_grid**n, states[3])
    psi[-1] = 0.0  # Dirichlet boundary by construction of lambda
    radial = np.column_stack([r_grid, psi, dpsi])
    profile = np.column_stack([vols, psi])
    result = RadialEigenSolution(
        model=ms,
        eigenvalue=lam,
        r_max=float(r_max),
        radial_grid=radial,
        volume_profile=profile,
        sup_norm=1.0,
    )
    object.__setattr__(result, "_dense", sol.sol)
    object.__setattr__(result, "_r0", r0)
    object.__setattr__(result, "_mass_grid", mass)
    return result


def radial_eigenfunction(ms, r, n_grid=513):
    """Radial first eigenfunction of the geodesic ball of radius r with psi(0) = 1."""
    if not r > 0:
        raise DomainError(f"ball radius must be > 0, got {r}")
    return _radial_solution(ms.n, ms.kappa, float(r), int(n_grid))


def reverse_holder_constant(ms, lam, p, q):
    """Sharp constant C(n, p, q, kappa, lambda) of the reverse-Holder inequality.

    C = (integral of psi^p)^q / (integral of psi^q)^p over the geodesic ball
    whose first eigenvalue equals lam; the value does not depend on the
    normalization of psi.
    """
    if not (0 < p < q):
        raise ExponentOrderError(f"exponents must satisfy 0 < p < q, got p={p}, q={q}")
    r_star = ball_radius_for_eigenvalue(ms, lam)
    sol = radial_eigenfunction(ms, r_star)
    return sol.lp_mass(p) ** q / sol.lp_mass(q) ** p


@lru_cache(maxsize=64)
def _euclidean_K_cached(n, p, q):
    ms = ModelSpace(n, 0.0)
    lam1 = ball_eigenvalue(ms, 1.0)
    sol = radial_eigenfunction(ms, 1.0)
    return lam1 ** (n * (q - p) / 2.0) * sol.lp_mass(p) ** q / sol.lp_mass(q) ** p


def euclidean_K(n, p, q):
    """Scale-invariant Euclidean reverse-Holder constant K(n, p, q).

    Defined on the unit ball; for any lambda the ball constant factorizes as
    C = K * lambda^(n (p - q) / 2).
    """
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n}")
    if not (0 < p < q):
        raise ExponentOrderError(f"exponents must satisfy 0 < p < q, got p={p}, q={q}")
    return _euclidean_K_cached(int(n), float(p), float(q))
