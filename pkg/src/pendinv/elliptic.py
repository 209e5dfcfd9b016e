"""Complete elliptic integrals, Heuman's Lambda0 and the curve geometry.

Carlson symmetric forms with duplication give K, E and Pi uniformly,
including the large-negative characteristics that appear on the axis of
small angular momentum.  Root data of the defining cubic is bundled in
:class:`EllipticData` together with every derived coefficient the action
formulas need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_EPS = 2.220446049250313e-16


class DomainError(ValueError):
    """Parameters outside the admissible region; message names the violation."""


class DivergenceError(ValueError):
    """Integral diverges at the requested parameter (k^2 -> 1 or n -> 1)."""


# -- Carlson symmetric forms -------------------------------------------------

def carlson_rf(x: float, y: float, z: float) -> float:
    """R_F(x, y, z) by duplication; arguments non-negative, at most one zero."""
    if min(x, y, z) < 0 or (x + y <= 0 or y + z <= 0 or z + x <= 0):
        raise DomainError("carlson_rf requires non-negative arguments, at most one zero")
    A = (x + y + z) / 3
    q = (3 * _EPS) ** (-1 / 8) * max(abs(A - x), abs(A - y), abs(A - z))
    f = 1.0
    while q * f >= abs(A):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
        A = (A + lam) / 4
        f /= 4
    return _rf_tail(x, y, z, A)


def _rf_tail(x: float, y: float, z: float, A: float) -> float:
    X = (A - x) / A
    Y = (A - y) / A
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    s = (1.0 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44
         - 5 * e2 ** 3 / 208 + 3 * e3 * e3 / 104 + e2 * e2 * e3 / 16)
    return s / math.sqrt(A)


def carlson_rc(x: float, y: float) -> float:
    """R_C(x, y) = R_F(x, y, y); y may be negative (principal value)."""
    if x < 0:
        raise DomainError("carlson_rc requires x >= 0")
    if y == 0:
        raise DomainError("carlson_rc pole at y = 0")
    if y < 0:
        # principal value transform
        return math.sqrt(x / (x - y)) * carlson_rc(x - y, -y)
    if x == y:
        return 1 / math.sqrt(x)
    if x == 0:
        return math.pi / (2 * math.sqrt(y))
    if x < y:
        return math.atan(math.sqrt((y - x) / x)) / math.sqrt(y - x)
    return math.atanh(math.sqrt((x - y) / x)) / math.sqrt(x - y)


def carlson_rd(x: float, y: float, z: float) -> float:
    """R_D(x, y, z) by duplication; z > 0, at most one of x, y zero."""
    if min(x, y) < 0 or z <= 0 or x + y <= 0:
        raise DomainError("carlson_rd requires x, y >= 0 (one may vanish), z > 0")
    A = (x + y + 3 * z) / 5
    q = (0.25 * _EPS) ** (-1 / 8) * max(abs(A - x), abs(A - y), abs(A - z))
    f = 1.0
    s = 0.0
    while q * f >= abs(A):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        s += f / (sz * (z + lam))
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
        A = (A + lam) / 4
        f /= 4
    return _rd_tail(x, y, z, A, f, s)


def _rd_tail(x, y, z, A, f, s):
    X = (A - x) / A
    Y = (A - y) / A
    Z = -(X + Y) / 3
    e2 = X * Y - 6 * Z * Z
    e3 = (3 * X * Y - 8 * Z * Z) * Z
    e4 = 3 * (X * Y - Z * Z) * Z * Z
    e5 = X * Y * Z ** 3
    series = (1 - 3 * e2 / 14 + e3 / 6 + 9 * e2 * e2 / 88 - 3 * e4 / 22
              - 9 * e2 * e3 / 52 + 3 * e5 / 26 - e2 ** 3 / 16
              + 3 * e3 * e3 / 40 + 3 * e2 * e4 / 20 + 45 * e2 * e2 * e3 / 272
              - 9 * (e3 * e4 + e2 * e5) / 68)
    return f * series / (A * math.sqrt(A)) + 3 * s


def carlson_rj(x: float, y: float, z: float, p: float) -> float:
    """R_J(x, y, z, p) by duplication; p > 0 here (no Cauchy principal value)."""
    if min(x, y, z) < 0 or x + y <= 0 or y + z <= 0 or z + x <= 0:
        raise DomainError("carlson_rj requires non-negative x, y, z, at most one zero")
    if p <= 0:
        raise DomainError("carlson_rj implemented for p > 0 only")
    A = (x + y + z + 2 * p) / 5
    delta = (p - x) * (p - y) * (p - z)
    q = (0.2 * _EPS) ** (-1 / 8) * max(abs(A - x), abs(A - y), abs(A - z), abs(A - p))
    f = 1.0
    s = 0.0
    while q * f >= abs(A):
        sx, sy, sz, sp = math.sqrt(x), math.sqrt(y), math.sqrt(z), math.sqrt(p)
        lam = sx * sy + sx * sz + sy * sz
        dn = (sp + sx) * (sp + sy) * (sp + sz)
        en = delta * f ** 3 / (dn * dn)
        if -1.5 < en < -0.5:
            rc_arg = 2 * sp * (p + sx * (sy + sz) + sy * sz) / dn
            s += f / dn * carlson_rc(1.0, rc_arg)
        else:
            s += f / dn * carlson_rc(1.0, 1.0 + en)
        x, y, z, p = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4, (p + lam) / 4
        A = (A + lam) / 4
        f /= 4
    return _rj_tail(x, y, z, p, A, f, s)


def _rj_tail(x, y, z, p, A, f, s):
    X = (A - x) / A
    Y = (A - y) / A
    Z = (A - z) / A
    P = -(X + Y + Z) / 2
    e2 = X * Y + X * Z + Y * Z - 3 * P * P
    e3 = X * Y * Z + 2 * e2 * P + 4 * P ** 3
    e4 = (2 * X * Y * Z + e2 * P + 3 * P ** 3) * P
    e5 = X * Y * Z * P * P
    series = (1 - 3 * e2 / 14 + e3 / 6 + 9 * e2 * e2 / 88 - 3 * e4 / 22
              - 9 * e2 * e3 / 52 + 3 * e5 / 26 - e2 ** 3 / 16
              + 3 * e3 * e3 / 40 + 3 * e2 * e4 / 20 + 45 * e2 * e2 * e3 / 272
              - 9 * (e3 * e4 + e2 * e5) / 68)
    return f * series / (A * math.sqrt(A)) + 6 * s


# -- Legendre complete integrals --------------------------------------------

def ellint_K(msq: float) -> float:
    """Complete integral of the first kind, parameter m = k^2."""
    if msq >= 1:
        raise DivergenceError(f"K diverges for k^2 = {msq} >= 1")
    if msq < 0:
        raise DomainError("k^2 must be non-negative")
    return carlson_rf(0.0, 1.0 - msq, 1.0)


def ellint_E(msq: float) -> float:
    """Complete integral of the second kind, parameter m = k^2."""
    if msq > 1:
        raise DomainError("k^2 must lie in [0, 1]")
    if msq < 0:
        raise DomainError("k^2 must be non-negative")
    if msq == 1:
        return 1.0
    return carlson_rf(0.0, 1.0 - msq, 1.0) - msq / 3 * carlson_rd(0.0, 1.0 - msq, 1.0)


def ellint_Pi(n: float, msq: float) -> float:
    """Complete integral of the third kind with 1/(1 - n sin^2) convention.

    n < 1 (the circular range); large negative n is fine and occurs for the
    axis limit, where callers must keep the accompanying j2^2 prefactor.
    """
    if n >= 1:
        raise DivergenceError(f"Pi has a pole at characteristic n = {n} >= 1")
    return ellint_Pi_from_p(1.0 - n, msq)


def ellint_Pi_from_p(p: float, msq: float) -> float:
    """Third kind parametrized by p = 1 - n, for callers that know the gap.

    Near-circular characteristics (n -> 1) lose all digits when the caller
    forms n first; passing the tiny complement p directly keeps them.
    """
    if msq >= 1:
        raise DivergenceError(f"Pi diverges for k^2 = {msq} >= 1")
    if msq < 0:
        raise DomainError("k^2 must be non-negative")
    if p <= 0:
        raise DivergenceError(f"Pi has a pole at p = 1 - n = {p} <= 0")
    if p == 1.0:
        return ellint_K(msq)
    return carlson_rf(0.0, 1.0 - msq, 1.0) + (1.0 - p) / 3 * carlson_rj(0.0, 1.0 - msq, 1.0, p)


def ellint_F_inc(phi: float, msq: float) -> float:
    """Incomplete first kind F(phi | m) for 0 <= phi <= pi/2."""
    s = math.sin(phi)
    c = math.cos(phi)
    if s == 0:
        return 0.0
    return s * carlson_rf(c * c, 1.0 - msq * s * s, 1.0)


def ellint_E_inc(phi: float, msq: float) -> float:
    """Incomplete second kind E(phi | m) for 0 <= phi <= pi/2."""
    s = math.sin(phi)
    c = math.cos(phi)
    if s == 0:
        return 0.0
    rf = carlson_rf(c * c, 1.0 - msq * s * s, 1.0)
    rd = carlson_rd(c * c, 1.0 - msq * s * s, 1.0)
    return s * rf - msq * s ** 3 / 3 * rd


def heuman_lambda0(phi: float, msq: float) -> float:
    """Heuman's Lambda0(phi, k) with parameter m = k^2.

    Normalized so Lambda0(pi/2, k) = 1; the incomplete integrals run at the
    complementary parameter.  Angles beyond pi/2 (which arise as
    phi = pi - arcsin(...)) reduce through Lambda0(pi - x) = 2 - Lambda0(x).
    """
    if not 0 <= msq <= 1:
        raise DomainError("k^2 must lie in [0, 1]")
    if phi < 0:
        return -heuman_lambda0(-phi, msq)
    if phi > math.pi / 2:
        if phi > math.pi + 1e-12:
            raise DomainError("phi must lie in [0, pi]")
        return 2.0 - heuman_lambda0(math.pi - phi, msq)
    if msq == 1:
        return 2 * phi / math.pi
    mc = 1.0 - msq
    K = ellint_K(msq)
    E = ellint_E(msq)
    F_c = ellint_F_inc(phi, mc)
    E_c = ellint_E_inc(phi, mc)
    return 2 / math.pi * (K * E_c - (K - E) * F_c)


# -- curve geometry ----------------------------------------------------------

@dataclass(frozen=True)
class EnergyMomentum:
    """Scaled energy (zero at the unstable equilibrium) and angular momentum."""

    h: float
    j2: float


@dataclass
class EllipticData:
    """Roots of the defining cubic and every derived Legendre-form coefficient."""

    zeta0: float
    zeta1: float
    zeta2: float
    ksq: float
    n_plus: float
    n_minus: float
    c0: float
    c1: float
    c2: float
    c3_plus: float
    c3_minus: float
    phi: float
    c1_tilde: float


def cubic_value(zeta: float, h: float, j2: float) -> float:
    return 2 * (1 - zeta * zeta) * (h + 1 - zeta) - j2 * j2


def _cubic_value_d(zeta: float, h: float) -> float:
    # derivative of the cubic: d/dz [2 z^3 - 2(h+1) z^2 - 2 z + const]
    return 6 * zeta * zeta - 4 * (h + 1) * zeta - 2


def cubic_roots(em: EnergyMomentum) -> EllipticData:
    """Ordered roots -1 <= zeta0 <= zeta1 <= 1 <= zeta2 plus derived data.

    Closed-form trigonometric solution polished by two Newton steps, which
    keeps the ordering bit-stable near double roots.  Raises DomainError
    when the requested (h, j2) admits no real motion.
    """
    h, j2 = em.h, em.j2
    if j2 == 0.0:
        if h < -2:
            raise DomainError(f"h = {h} below the potential minimum -2 at j2 = 0")
        roots = sorted([-1.0, min(1.0, 1.0 + h), max(1.0, 1.0 + h)])
    else:
        # monic form zeta^3 + a2 zeta^2 + a1 zeta + a0
        a2 = -(h + 1)
        a1 = -1.0
        a0 = (h + 1) - j2 * j2 / 2
        q = (3 * a1 - a2 * a2) / 9
        r = (9 * a2 * a1 - 27 * a0 - 2 * a2 ** 3) / 54
        disc = q ** 3 + r * r
        if disc > 1e-13 * max(1.0, abs(q) ** 3):
            raise DomainError(
                f"no real motion at (h, j2) = ({h}, {j2}): P has complex roots "
                "(h below the relative equilibrium energy)")
        ratio = r / math.sqrt(max((-q) ** 3, 1e-300))
        ratio = min(1.0, max(-1.0, ratio))
        theta = math.acos(ratio)
        m = 2 * math.sqrt(max(-q, 0.0))
        roots = sorted(m * math.cos((theta + 2 * math.pi * k) / 3) - a2 / 3
                       for k in range(3))
        for _ in range(2):  # Newton polish at working precision
            roots = [z - cubic_value(z, h, j2) / _cubic_value_d(z, h)
                     if abs(_cubic_value_d(z, h)) > 1e-30 else z
                     for z in roots]
        roots = sorted(roots)
    z0, z1, z2 = roots
    tol = 4e-12 * max(1.0, abs(h), j2 * j2)
    if z0 < -1 - tol or z1 > 1 + tol or z2 < 1 - tol:
        raise DomainError(
            f"root ordering -1 <= z0 <= z1 <= 1 <= z2 violated at (h, j2) = "
            f"({h}, {j2}): roots {roots}")
    z0 = max(z0, -1.0)
    z1 = min(z1, 1.0)
    z2 = max(z2, 1.0)

    span = z2 - z0
    ksq = (z1 - z0) / span if span > 0 else 0.0
    one_minus_z0 = 1 - z0
    one_plus_z0 = 1 + z0
    n_plus = (z1 - z0) / one_minus_z0 if one_minus_z0 != 0 else math.inf
    n_minus = (z1 - z0) / (-one_plus_z0) if one_plus_z0 != 0 else -math.inf
    c0 = 4 / (math.pi * math.sqrt(2 * span)) if span > 0 else math.inf
    c1 = 1 + h - z2
    c2 = span
    c3_plus = j2 * j2 / (4 * one_minus_z0) if one_minus_z0 != 0 else math.inf
    c3_minus = j2 * j2 / (4 * one_plus_z0) if one_plus_z0 != 0 else 0.0

    if z2 > z1:
        arg = (j2 * j2 / 2 - z1 - z0) / (z2 - z1)
        arg = min(1.0, max(0.0, arg))
        phi = math.pi - math.asin(math.sqrt(arg))
    else:
        phi = math.pi / 2
    rad = (z2 - 1) * (z2 - z1) / (2 * (z2 + 1))
    c1_tilde = (h + 1 - z2 - j2 * j2 / (4 * (1 + z2))
                - abs(j2) / 2 * math.sqrt(max(rad, 0.0)) * math.sin(phi))
    return EllipticData(z0, z1, z2, ksq, n_plus, n_minus, c0, c1, c2,
                        c3_plus, c3_minus, phi, c1_tilde)
