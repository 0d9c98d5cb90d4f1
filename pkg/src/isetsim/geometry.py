"""Unit vectors, rational-cosine lattices, rotations and spherical caps.

Lattice values are kept as exact integer pairs over the lattice size ``N``.
Everything that decides lattice membership works on those integers (or on
:class:`fractions.Fraction`), never on floats.  Continuous geometry
(rotations, cap sampling, triangles) is plain numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .errors import DegeneracyError, ParameterError

Kind = Literal["single", "bell"]
KINDS = ("single", "bell")

NORM_TOL = 1e-12
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class UnitVector:
    """A point on the unit sphere.  Components are renormalized on construction."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not np.isfinite(norm) or norm == 0.0:
            raise ParameterError(f"cannot normalize vector ({self.x}, {self.y}, {self.z})")
        # already-normalized input is kept bit-for-bit so serialization round-trips
        if abs(norm - 1.0) > 4.0 * np.finfo(float).eps:
            object.__setattr__(self, "x", float(self.x) / norm)
            object.__setattr__(self, "y", float(self.y) / norm)
            object.__setattr__(self, "z", float(self.z) / norm)
        else:
            object.__setattr__(self, "x", float(self.x))
            object.__setattr__(self, "y", float(self.y))
            object.__setattr__(self, "z", float(self.z))

    @classmethod
    def from_array(cls, arr) -> "UnitVector":
        a = np.asarray(arr, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def from_angle(cls, degrees: float) -> "UnitVector":
        """Direction in the x-z plane, ``degrees`` measured from +z towards +x."""
        t = math.radians(degrees)
        return cls(math.sin(t), 0.0, math.cos(t))

    @classmethod
    def from_spherical(cls, theta: float, phi: float) -> "UnitVector":
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other) -> float:
        o = as_array(other)
        return float(self.x * o[0] + self.y * o[1] + self.z * o[2])

    def chord(self, other) -> float:
        return float(np.linalg.norm(self.as_array() - as_array(other)))

    def __neg__(self) -> "UnitVector":
        return UnitVector(-self.x, -self.y, -self.z)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z]


def as_array(v) -> np.ndarray:
    if isinstance(v, UnitVector):
        return v.as_array()
    return np.asarray(v, dtype=float)


def as_unit(v) -> UnitVector:
    if isinstance(v, UnitVector):
        return v
    return UnitVector.from_array(v)


def _normalize_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# rational-cosine lattices
# ---------------------------------------------------------------------------

def _lattice_size(params) -> int:
    N = params if isinstance(params, (int, np.integer)) else params.N
    N = int(N)
    if N < 4 or N % 2:
        raise ParameterError(f"N must be even and >= 4, got {N}")
    return N


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ParameterError(f"lattice kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True)
class RationalCosine:
    """Lattice cosine ``numerator / denominator`` with ``denominator == N``.

    single kind: ``1 - (2n-1)/(N/2)``, i.e. numerator ``N - 2(2n-1)``.
    bell kind:   ``1 - 4n/N``,         i.e. numerator ``N - 4n``.
    """

    numerator: int
    denominator: int
    kind: str
    n: int

    def __post_init__(self):
        _check_kind(self.kind)
        N = self.denominator
        if not 1 <= self.n <= N // 2:
            raise ParameterError(f"lattice index n={self.n} outside 1..{N // 2}")
        expected = N - 2 * (2 * self.n - 1) if self.kind == "single" else N - 4 * self.n
        if self.numerator != expected:
            raise ParameterError(
                f"numerator {self.numerator} inconsistent with n={self.n}, N={N}, kind={self.kind}"
            )

    @classmethod
    def from_index(cls, N: int, n: int, kind: str = "single") -> "RationalCosine":
        _check_kind(kind)
        if not 1 <= n <= N // 2:
            raise ParameterError(f"lattice index n={n} outside 1..{N // 2}")
        num = N - 2 * (2 * n - 1) if kind == "single" else N - 4 * n
        return cls(num, N, kind, n)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def __str__(self) -> str:
        v = self.value
        return f"{v.numerator}/{v.denominator}"


def lattice_index(value, N: int, kind: str = "single") -> int | None:
    """Exact inverse of the lattice map: the ``n`` with lattice value ``value``, or None.

    ``value`` must be exact (int, Fraction or RationalCosine); floats are rejected
    so that membership can never be decided by rounding.
    """
    _check_kind(kind)
    if isinstance(value, RationalCosine):
        value = value.value
    if isinstance(value, float):
        raise TypeError("lattice membership needs an exact value, not a float")
    v = Fraction(value)
    if kind == "single":
        twice = N * (1 - v) / 2  # = 2n - 1
        if twice.denominator != 1 or twice.numerator % 2 == 0:
            return None
        n = (twice.numerator + 1) // 2
    else:
        quarter = N * (1 - v) / 4  # = n
        if quarter.denominator != 1:
            return None
        n = quarter.numerator
    return n if 1 <= n <= N // 2 else None


def allowed_cosines(params, kind: str = "single") -> list[RationalCosine]:
    """All lattice cosines for ``N``, ordered by n (strictly decreasing value)."""
    N = _lattice_size(params)
    _check_kind(kind)
    return [RationalCosine.from_index(N, n, kind) for n in range(1, N // 2 + 1)]


def lattice_floats(N: int, kind: str = "single") -> np.ndarray:
    """Float copies of the lattice values, index ``n - 1``.  Geometry only."""
    n = np.arange(1, N // 2 + 1)
    num = N - 2 * (2 * n - 1) if kind == "single" else N - 4 * n
    return num / N


def lattice_spacing(N: int) -> Fraction:
    return Fraction(4, N)


def nearest_allowed(target_cos: float, params, kind: str = "single") -> RationalCosine:
    """Lattice value closest to ``target_cos``.  Ties go to the larger n."""
    N = _lattice_size(params)
    _check_kind(kind)
    if not -1.0 <= target_cos <= 1.0:
        raise ParameterError(f"target cosine {target_cos} outside [-1, 1]")
    t = Fraction(target_cos)
    if kind == "single":
        guess = (N * (1 - t) / 2 + 1) / 2
    else:
        guess = N * (1 - t) / 4
    base = math.floor(guess)
    candidates = {min(max(c, 1), N // 2) for c in (base - 1, base, base + 1, base + 2)}
    best = None
    for n in sorted(candidates):
        rc = RationalCosine.from_index(N, n, kind)
        d = abs(rc.value - t)
        if best is None or d <= best[0]:
            best = (d, rc)
    return best[1]


@dataclass(frozen=True)
class PhaseIndex:
    """Relative phase ``2*pi*l/N``; ``l = 0`` stands for zero phase."""

    l: int
    N: int

    def __post_init__(self):
        if not 0 <= self.l <= self.N:
            raise ParameterError(f"phase index l={self.l} outside 0..{self.N}")

    @property
    def turns(self) -> Fraction:
        return Fraction(self.l, self.N)

    @property
    def value(self) -> float:
        return 2.0 * math.pi * self.l / self.N


# ---------------------------------------------------------------------------
# Niven
# ---------------------------------------------------------------------------

def niven_rational_cosine(p: int, q: int) -> bool:
    """True iff cos(p*pi/q) is rational, i.e. lies in {0, +-1/2, +-1}.

    By Niven's theorem this happens exactly when the reduced denominator of
    ``p/q`` is 1, 2 or 3.
    """
    if q == 0:
        raise ParameterError("q must be nonzero")
    if q < 0:
        p, q = -p, -q
    return Fraction(p, q).denominator in (1, 2, 3)


def special_rational_cosine(value) -> bool:
    """True if an exact cosine is one of the Niven values {0, +-1/2, +-1}.

    A rational cosine outside this set belongs to an angle that is an
    irrational multiple of pi.
    """
    v = value.value if isinstance(value, RationalCosine) else Fraction(value)
    return v in (0, Fraction(1, 2), Fraction(-1, 2), 1, -1)


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

def cross(u, v) -> np.ndarray:
    """Row-wise cross product; cheaper than ``np.cross`` on small inputs."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    out = np.empty(u.shape)
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


def transport_many(v, frm, to) -> np.ndarray:
    """Apply the minimal rotation taking ``frm`` to ``to`` to ``v`` (broadcast over rows).

    Uses ``R v = c v + k x v + (k.v) k / (1 + c)`` with ``k = frm x to`` and
    ``c = frm . to``, which is singular only for antipodal pairs.
    """
    v = np.asarray(v, dtype=float)
    frm = np.asarray(frm, dtype=float)
    to = np.asarray(to, dtype=float)
    k = cross(frm, to)
    c = np.sum(frm * to, axis=-1, keepdims=True)
    kv = np.sum(k * v, axis=-1, keepdims=True)
    return c * v + cross(k, v) + kv * k / (1.0 + c)


class Rotation:
    """Minimal-angle rotation carrying one unit vector onto another."""

    def __init__(self, frm, to):
        self.frm = as_array(frm)
        self.to = as_array(to)
        if np.linalg.norm(self.frm + self.to) < DEGENERACY_TOL:
            raise DegeneracyError("rotation between antipodal vectors is not unique")

    @property
    def angle(self) -> float:
        return float(np.arctan2(np.linalg.norm(cross(self.frm, self.to)), self.frm @ self.to))

    @property
    def matrix(self) -> np.ndarray:
        return transport_many(np.eye(3), self.frm, self.to).T

    def transport(self, v) -> UnitVector:
        return UnitVector.from_array(transport_many(as_array(v), self.frm, self.to))

    def inverse(self) -> "Rotation":
        return Rotation(self.to, self.frm)

    __call__ = transport


def rotation_between(frm, to) -> Rotation:
    return Rotation(frm, to)


def orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic pair (e1, e2) completing ``axis`` to a right-handed frame.

    Works row-wise on an ``(..., 3)`` array.  The reference direction is +z,
    switching to +x when the axis is within ~25 degrees of the z axis.
    """
    a = np.asarray(axis, dtype=float)
    ref = np.zeros_like(a)
    near_z = np.abs(a[..., 2]) > 0.9
    ref[..., 2] = np.where(near_z, 0.0, 1.0)
    ref[..., 0] = np.where(near_z, 1.0, 0.0)
    e1 = ref - np.sum(ref * a, axis=-1, keepdims=True) * a
    e1 = _normalize_rows(e1)
    e2 = cross(a, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# spherical caps
# ---------------------------------------------------------------------------

def cap_cos_threshold(chord_radius: float) -> float:
    """``|v - c| < r``  <=>  ``v.c > 1 - r^2/2``."""
    return 1.0 - 0.5 * chord_radius * chord_radius


def cap_angular_radius(chord_radius: float) -> float:
    return 2.0 * math.asin(min(chord_radius / 2.0, 1.0))


def cap_polar_cdf(theta, chord_radius: float):
    """CDF of the polar angle (measured from the cap centre) under the uniform cap law."""
    lo = cap_cos_threshold(chord_radius)
    return (1.0 - np.cos(theta)) / (1.0 - lo)


def _check_chord(chord_radius: float) -> None:
    if not 0.0 < chord_radius <= math.sqrt(2.0) + 1e-15:
        raise ParameterError(f"chord radius must lie in (0, sqrt(2)], got {chord_radius}")


def sample_cap_many(center, chord_radius: float, size: int, rng: np.random.Generator,
                    bias_toward=None, bias_weight: float = 0.0) -> np.ndarray:
    """``size`` points uniform on the open cap ``{v : |v - center| < chord_radius}``.

    With ``bias_weight > 0`` the tangential offset is tilted towards
    ``bias_toward`` by rejection with acceptance ``(1 + w cos psi)/(1 + w)``.
    The support is unchanged.
    """
    _check_chord(chord_radius)
    c = as_array(center)
    e1, e2 = orthonormal_frame(c)
    lo = cap_cos_threshold(chord_radius)
    pref = None
    if bias_toward is not None and bias_weight > 0.0:
        if not 0.0 < bias_weight <= 1.0:
            raise ParameterError("bias_weight must lie in (0, 1]")
        t = as_array(bias_toward)
        pref = np.array([t @ e1, t @ e2])
        if np.linalg.norm(pref) < 1e-12:
            pref = None
        else:
            pref = pref / np.linalg.norm(pref)
    out = np.empty((size, 3))
    filled = 0
    while filled < size:
        m = size - filled
        z = 1.0 - rng.random(m) * (1.0 - lo)  # in (lo, 1]
        z = np.maximum(z, np.nextafter(lo, 1.0))
        phi = 2.0 * np.pi * rng.random(m)
        if pref is not None:
            cos_psi = np.cos(phi) * pref[0] + np.sin(phi) * pref[1]
            keep = rng.random(m) * (1.0 + bias_weight) < 1.0 + bias_weight * cos_psi
            z, phi = z[keep], phi[keep]
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = (z[:, None] * c + (s * np.cos(phi))[:, None] * e1
               + (s * np.sin(phi))[:, None] * e2)
        out[filled:filled + len(pts)] = pts
        filled += len(pts)
    return _normalize_rows(out)


def sample_cap(center, chord_radius: float, rng: np.random.Generator,
               bias_toward=None, bias_weight: float = 0.0) -> UnitVector:
    return UnitVector.from_array(
        sample_cap_many(center, chord_radius, 1, rng, bias_toward, bias_weight)[0])


# ---------------------------------------------------------------------------
# spherical triangles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalTriangle:
    A: UnitVector
    B: UnitVector
    C: UnitVector
    cos_a: float  # side BC
    cos_b: float  # side AC
    cos_c: float  # side AB
    alpha: float
    beta: float
    gamma: float

    def law_of_cosines_residual(self) -> float:
        def side(c):
            return math.sqrt(max(0.0, 1.0 - c * c))
        a, b, c = self.cos_a, self.cos_b, self.cos_c
        sa, sb, sc = side(a), side(b), side(c)
        r = (
            abs(a - (b * c + sb * sc * math.cos(self.alpha))),
            abs(b - (a * c + sa * sc * math.cos(self.beta))),
            abs(c - (a * b + sa * sb * math.cos(self.gamma))),
        )
        return max(r)

    def side_angles(self) -> tuple[float, float, float]:
        return tuple(math.acos(max(-1.0, min(1.0, x))) for x in (self.cos_a, self.cos_b, self.cos_c))


def _vertex_angle(opp: float, s1: float, s2: float) -> float:
    sin1 = math.sqrt(max(0.0, 1.0 - s1 * s1))
    sin2 = math.sqrt(max(0.0, 1.0 - s2 * s2))
    x = (opp - s1 * s2) / (sin1 * sin2)
    return math.acos(max(-1.0, min(1.0, x)))


def build_triangle(A, B, C) -> SphericalTriangle:
    A, B, C = as_unit(A), as_unit(B), as_unit(C)
    names = {"A": A, "B": B, "C": C}
    for p, q in (("A", "B"), ("B", "C"), ("A", "C")):
        u, v = names[p].as_array(), names[q].as_array()
        if np.linalg.norm(u - v) < DEGENERACY_TOL:
            raise DegeneracyError(f"degenerate triangle: vertices {p} and {q} coincide")
        if np.linalg.norm(u + v) < DEGENERACY_TOL:
            raise DegeneracyError(f"degenerate triangle: vertices {p} and {q} are antipodal")
    cos_a, cos_b, cos_c = B.dot(C), A.dot(C), A.dot(B)
    return SphericalTriangle(
        A, B, C, cos_a, cos_b, cos_c,
        alpha=_vertex_angle(cos_a, cos_b, cos_c),
        beta=_vertex_angle(cos_b, cos_a, cos_c),
        gamma=_vertex_angle(cos_c, cos_a, cos_b),
    )


def coplanar_vectors(degrees: Sequence[float]) -> list[UnitVector]:
    return [UnitVector.from_angle(d) for d in degrees]
