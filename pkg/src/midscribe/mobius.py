"""Mobius transformations of the extended plane and the unit-sphere lift.

Transformations are 2x2 complex matrices acting by (az+b)/(cz+d), with the
point at infinity represented as a complex number with an infinite part.
The lift is the inverse of the ball's chord-from-N chart: it identifies the
extended plane with the unit sphere, sending infinity to the north pole.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import DegenerateMarks

INFINITY = complex(math.inf, 0.0)


def is_infinity(z: complex) -> bool:
    return cmath.isinf(z)


def _to_zero_one_inf(a1: complex, a2: complex, a3: complex) -> np.ndarray:
    """Matrix of the Mobius map sending (a1, a2, a3) to (0, 1, inf)."""
    if is_infinity(a1):
        return np.array([[0.0, a2 - a3], [1.0, -a3]], dtype=complex)
    if is_infinity(a2):
        return np.array([[1.0, -a1], [1.0, -a3]], dtype=complex)
    if is_infinity(a3):
        return np.array([[1.0, -a1], [0.0, a2 - a1]], dtype=complex)
    return np.array([[a2 - a3, -a1 * (a2 - a3)],
                     [a2 - a1, -a3 * (a2 - a1)]], dtype=complex)


def mobius_through(sources, targets) -> np.ndarray:
    """Matrix of the unique Mobius map with sources[i] -> targets[i].

    Either triple may contain the point at infinity; each triple must consist
    of three distinct points.
    """
    for triple in (sources, targets):
        vals = list(triple)
        for i in range(3):
            for j in range(i + 1, 3):
                same_inf = is_infinity(vals[i]) and is_infinity(vals[j])
                if same_inf or (not is_infinity(vals[i]) and not is_infinity(vals[j])
                                and vals[i] == vals[j]):
                    raise DegenerateMarks("points %r are not distinct" % (vals,))
    S = _to_zero_one_inf(*sources)
    T = _to_zero_one_inf(*targets)
    Tinv = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]], dtype=complex)
    M = Tinv @ S
    return M / np.max(np.abs(M))


def apply_mobius(M: np.ndarray, z: complex) -> complex:
    a, b = M[0]
    c, d = M[1]
    if is_infinity(z):
        return a / c if c != 0 else INFINITY
    num = a * z + b
    den = c * z + d
    if den == 0:
        return INFINITY
    return num / den


def mobius_pole(M: np.ndarray) -> complex:
    """The preimage of infinity."""
    c, d = M[1]
    if c == 0:
        return INFINITY
    return -d / c


def lift_to_sphere(z: complex) -> np.ndarray:
    """Point of the unit sphere over z; infinity lifts to the north pole."""
    if is_infinity(z):
        return np.array([0.0, 0.0, 1.0])
    s = z.real * z.real + z.imag * z.imag + 4.0
    return np.array([4.0 * z.real / s, 4.0 * z.imag / s, 1.0 - 8.0 / s])


def sphere_chart(q) -> complex:
    """Inverse of lift_to_sphere on unit vectors."""
    q = np.asarray(q, dtype=float)
    if 1.0 - q[2] < 1e-14:
        return INFINITY
    return 2.0 * complex(q[0], q[1]) / (1.0 - q[2])


def cap_through_points(p1, p2, p3, interior):
    """Spherical cap through three sphere points, containing the interior point.

    Returns (n, d) with |n| = 1 describing the cap {x : <n, x> >= d}; the
    boundary circle is the sphere section of the plane <n, x> = d.
    """
    A = np.array([[p1[0], p1[1], p1[2], -1.0],
                  [p2[0], p2[1], p2[2], -1.0],
                  [p3[0], p3[1], p3[2], -1.0]])
    _, sv, vt = np.linalg.svd(A)
    null = vt[-1]
    n, d = null[:3], null[3]
    scale = np.linalg.norm(n)
    if scale < 1e-12 or sv[-1] < 1e-12 * sv[0]:
        raise DegenerateMarks("three circle points do not span a unique plane "
                              "(two nearly coincide)")
    n, d = n / scale, d / scale
    side = float(n @ np.asarray(interior, dtype=float)) - d
    if side < 0:
        n, d = -n, -d
    return n, float(d)
