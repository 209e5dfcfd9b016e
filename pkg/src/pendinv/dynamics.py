"""Direct integration of the spherical pendulum on the cotangent bundle.

Redundant Cartesian coordinates (r, p) in R^3 x R^3 with per-step
projection back onto the constraint set (r, r) = 1, (r, p) = 0 avoid the
polar coordinate singularity at the pole, which is exactly where the
interesting orbits climb.  Scaled units m = g = l = 1 throughout, so the
unstable equilibrium sits at r = e_z with energy zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .actions import energy_of_j, rotation_W_numeric
from .elliptic import DomainError, EnergyMomentum, cubic_roots


@dataclass
class PhaseState:
    """Point of the constrained phase space with its conserved quantities."""

    r: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.p = np.asarray(self.p, dtype=float)

    @property
    def angular_momentum(self) -> np.ndarray:
        return np.cross(self.r, self.p)

    @property
    def energy(self) -> float:
        norm = float(np.linalg.norm(self.r))
        ll = self.angular_momentum
        return 0.5 * float(ll @ ll) + self.r[2] / norm - 1.0

    @property
    def j2(self) -> float:
        return float(self.angular_momentum[2])

    @property
    def constraint_residuals(self) -> tuple[float, float]:
        return (abs(float(self.r @ self.r) - 1.0), abs(float(self.r @ self.p)))


def vector_field(state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side dr/dt = L x r, dp/dt = L x p - e_z/|r| + (e_z.r) r/|r|^3."""
    r, p = state.r, state.p
    ll = np.cross(r, p)
    norm = float(np.linalg.norm(r))
    dr = np.cross(ll, r)
    dp = (np.cross(ll, p)
          - np.array([0.0, 0.0, 1.0]) / norm
          + (r[2] / norm ** 3) * r)
    return dr, dp


def _rhs(_t: float, y: np.ndarray) -> np.ndarray:
    r = y[:3]
    p = y[3:]
    ll = np.cross(r, p)
    norm = math.sqrt(float(r @ r))
    dr = np.cross(ll, r)
    dp = np.cross(ll, p)
    dp[2] -= 1.0 / norm
    dp += (r[2] / norm ** 3) * r
    return np.concatenate([dr, dp])


def _project(y: np.ndarray) -> np.ndarray:
    r = y[:3]
    p = y[3:]
    r = r / math.sqrt(float(r @ r))
    p = p - float(r @ p) * r
    return np.concatenate([r, p])


@dataclass
class OrbitRecord:
    """Trajectory samples plus the reduced-period bookkeeping."""

    times: np.ndarray
    states: np.ndarray                  # shape (n, 6)
    reduced_period: float | None
    delta_phi: float | None
    rotation_number: float | None
    turning_times: list = field(default_factory=list)
    closure_error: float | None = None
    energy_drift: float = 0.0
    j2_drift: float = 0.0
    constraint_drift: float = 0.0

    def stereographic_trace(self) -> np.ndarray:
        """Projection (x, y)/(1 + z): unstable equilibrium at the origin."""
        xyz = self.states[:, :3]
        denom = 1.0 + xyz[:, 2]
        return np.column_stack([xyz[:, 0] / denom, xyz[:, 1] / denom])


class IntegrationError(RuntimeError):
    pass


def integrate(state0: PhaseState, t_end: float, tol: float = 1e-12,
              max_samples: int = 200000) -> OrbitRecord:
    """Adaptive eighth-order integration with per-step constraint projection.

    Records every accepted step, tracks the continuous azimuth, and refines
    each inclination turning point (maximum of z, the pericenter of the
    reduced motion) on the dense interpolant.  Energy and angular-momentum
    drift are reported and must stay within 10 * tol * t_end.
    """
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    y0 = _project(np.concatenate([state0.r, state0.p]))
    solver = DOP853(_rhs, 0.0, y0, t_end, rtol=tol, atol=tol)
    h0 = state0.energy
    j20 = state0.j2

    times = [0.0]
    states = [y0.copy()]
    phis = [math.atan2(y0[1], y0[0])]
    turning: list[tuple[float, float]] = []   # (time, unwrapped phi)

    def zdot(y: np.ndarray) -> float:
        r, p = y[:3], y[3:]
        return float(np.cross(np.cross(r, p), r)[2])

    def unwrap(prev: float, raw: float) -> float:
        while raw - prev > math.pi:
            raw -= 2 * math.pi
        while raw - prev < -math.pi:
            raw += 2 * math.pi
        return raw

    prev_zdot = zdot(y0)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"step failed: {msg}")
        dense = solver.dense_output()
        y = _project(solver.y)
        solver.y[:] = y
        solver.f = solver.fun(solver.t, solver.y)
        t = solver.t
        phi = unwrap(phis[-1], math.atan2(y[1], y[0]))
        cur_zdot = zdot(y)
        if prev_zdot > 0.0 and cur_zdot <= 0.0 and len(times) > 1:
            # z-maximum inside (t_prev, t): bisect the interpolant
            lo, hi = times[-1], t
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if zdot(dense(mid)) > 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-13 * max(1.0, abs(t)):
                    break
            t_star = 0.5 * (lo + hi)
            y_star = dense(t_star)
            phi_star = unwrap(phis[-1], math.atan2(y_star[1], y_star[0]))
            turning.append((t_star, phi_star))
        prev_zdot = cur_zdot
        times.append(t)
        states.append(y.copy())
        phis.append(phi)
        if len(times) > max_samples:
            raise IntegrationError("sample budget exhausted")

    arr = np.array(states)
    energies = 0.5 * np.sum(np.cross(arr[:, :3], arr[:, 3:]) ** 2, axis=1) \
        + arr[:, 2] / np.linalg.norm(arr[:, :3], axis=1) - 1.0
    j2s = np.cross(arr[:, :3], arr[:, 3:])[:, 2]
    res_r = np.abs(np.sum(arr[:, :3] ** 2, axis=1) - 1.0)
    res_rp = np.abs(np.sum(arr[:, :3] * arr[:, 3:], axis=1))

    reduced_period = None
    delta_phi = None
    rotation = None
    if len(turning) >= 2:
        periods = np.diff([t for t, _ in turning])
        dphis = np.diff([f for _, f in turning])
        reduced_period = float(np.mean(periods))
        delta_phi = float(np.mean(dphis))
        rotation = delta_phi / (2 * math.pi)
    return OrbitRecord(times=np.array(times), states=arr,
                       reduced_period=reduced_period, delta_phi=delta_phi,
                       rotation_number=rotation,
                       turning_times=[t for t, _ in turning],
                       energy_drift=float(np.max(np.abs(energies - h0))),
                       j2_drift=float(np.max(np.abs(j2s - j20))),
                       constraint_drift=float(max(res_r.max(), res_rp.max())))


def initial_condition(em: EnergyMomentum) -> PhaseState:
    """State at the inclination turning point closest to the upper pole.

    Places the orbit at zeta1 (maximum of z) in the x-z plane with purely
    azimuthal momentum carrying the requested angular momentum.
    """
    data = cubic_roots(em)
    z = data.zeta1
    sin_theta = math.sqrt(max(0.0, 1.0 - z * z))
    if sin_theta == 0.0:
        raise DomainError("turning point at the pole; no regular orbit there")
    r = np.array([sin_theta, 0.0, z])
    p = np.array([0.0, em.j2 / sin_theta, 0.0])
    return PhaseState(r, p)


def rotation_number_measured(em: EnergyMomentum, n_periods: int = 3,
                             tol: float = 1e-12) -> tuple[float, OrbitRecord]:
    """Rotation number from direct integration over a few reduced periods."""
    from .actions import period_T_numeric

    state = initial_condition(em)
    t_est = period_T_numeric(em)
    record = integrate(state, (n_periods + 0.25) * t_est, tol=tol)
    if record.rotation_number is None:
        raise IntegrationError("no full reduced period inside the time window")
    return record.rotation_number, record


@dataclass
class OrbitSearchResult:
    target: Fraction
    s: float
    j1: float
    j2: float
    h: float
    closure_error: float
    record: OrbitRecord


def periodic_orbit_search(w_target: Fraction, radius: float,
                          tol: float = 1e-12,
                          n_scan: int = 80) -> OrbitSearchResult:
    """Find the periodic orbit with rotation number p/q on a polar circle.

    The polar angle is measured from the positive j2 axis (j1 = r sin s,
    j2 = r cos s).  The model rotation number brackets the root, the
    elliptic-integral rotation number refines it to full accuracy, and the
    orbit is then integrated over q reduced periods and checked to close to
    1e-6 in phase space.
    """
    w_val = float(w_target)
    q = Fraction(w_target).denominator

    def w_of_s(s: float) -> float:
        j1 = radius * math.sin(s)
        j2 = radius * math.cos(s)
        return rotation_W_numeric(EnergyMomentum(energy_of_j(j1, j2), j2))

    eps = 1e-3
    grid = np.linspace(-math.pi / 2 + eps, math.pi / 2 - eps, n_scan)
    vals = []
    for s in grid:
        try:
            vals.append(w_of_s(s) - w_val)
        except DomainError:
            vals.append(math.nan)
    bracket = None
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if math.isnan(fa) or math.isnan(fb):
            continue
        if fa == 0.0:
            bracket = (a, a)
            break
        if fa * fb < 0:
            bracket = (a, b)
            break
    if bracket is None:
        raise DomainError(
            f"rotation number {w_target} not attained on the circle r = {radius}")
    s_root = bracket[0] if bracket[0] == bracket[1] else brentq(
        lambda s: w_of_s(s) - w_val, bracket[0], bracket[1], xtol=1e-14)

    j1 = radius * math.sin(s_root)
    j2 = radius * math.cos(s_root)
    h = energy_of_j(j1, j2)
    em = EnergyMomentum(h, j2)
    state0 = initial_condition(em)
    from .actions import period_T_numeric

    t_period = period_T_numeric(em)
    record = integrate(state0, q * t_period, tol=tol)
    y_end = record.states[-1]
    y_start = record.states[0]
    closure = float(np.linalg.norm(y_end - y_start))
    if closure > 1e-6:
        raise IntegrationError(
            f"orbit failed to close: |final - initial| = {closure:.3e}")
    return OrbitSearchResult(target=Fraction(w_target), s=s_root, j1=j1, j2=j2,
                             h=h, closure_error=closure, record=record)


def orbits_at_energy(h: float, w_target: Fraction,
                     n_scan: int = 400) -> list[EnergyMomentum]:
    """All j2 > 0 with the given rotation number at fixed energy.

    Two solutions straddling the twistless circle exist for targets just
    below the local maximum of W along the energy line.
    """
    w_val = float(w_target)
    j2_max = math.sqrt(max(0.0, 2 * (1 + h)))  # crude upper bound for scanning

    def f(j2: float) -> float:
        return rotation_W_numeric(EnergyMomentum(h, j2)) - w_val

    out = []
    prev = None
    for i in range(1, n_scan + 1):
        j2 = j2_max * i / (n_scan + 1)
        try:
            cur = (j2, f(j2))
        except DomainError:
            break
        if prev is not None and prev[1] * cur[1] < 0:
            root = brentq(f, prev[0], cur[0], xtol=1e-13)
            out.append(EnergyMomentum(h, root))
        prev = cur
    return out


@dataclass
class GeometryReport:
    theta_min: float
    theta_max: float
    north_asymptotic: float
    south_asymptotic: float
    excluded_radius: float
    excluded_radius_asymptotic: float
    outer_size: float
    outer_size_asymptotic: float


def geometry_report(radius: float, s: float) -> GeometryReport:
    """Orbit geometry at polar point (j1, j2) = r (sin s, cos s).

    Compares the exact inclination range from the cubic roots with the
    leading-order polar formulas: distance to the upper pole
    sqrt(r (1 - sin s)), to the lower pole r |cos s| / 2, the excluded-disk
    radius sqrt(r (1 - sin s))/2 and the overall stereographic size
    4 / (r |cos s|).
    """
    j1 = radius * math.sin(s)
    j2 = radius * math.cos(s)
    h = energy_of_j(j1, j2)
    data = cubic_roots(EnergyMomentum(h, j2))
    theta_min = math.acos(min(1.0, data.zeta1))
    theta_max = math.acos(max(-1.0, data.zeta0))
    north = math.sqrt(max(0.0, radius * (1 - math.sin(s))))
    south = radius * abs(math.cos(s)) / 2
    # stereographic radii for the projection (x, y)/(1 + z)
    excluded = math.sqrt(max(0.0, (1 - data.zeta1) / (1 + data.zeta1))) \
        if data.zeta1 > -1 else math.inf
    outer = math.sqrt((1 - data.zeta0) / (1 + data.zeta0)) \
        if data.zeta0 > -1 else math.inf
    return GeometryReport(
        theta_min=theta_min, theta_max=theta_max,
        north_asymptotic=north, south_asymptotic=math.pi - south,
        excluded_radius=excluded, excluded_radius_asymptotic=north / 2,
        outer_size=outer, outer_size_asymptotic=4 / (radius * abs(math.cos(s)))
        if math.cos(s) != 0 else math.inf)
