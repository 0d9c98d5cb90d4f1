"""Hidden variables, the apparatus-orienting mechanism and constrained sampling.

The mechanism moves the apparatus by the rotation the experimenter commands
(initial selected -> final selected) and carries the unknown initial error
along with it::

    A = R(p -> a) P

so ``|A - a| = |P - p| < delta`` and the map is exactly invertible.

Admissible exact settings are points on the rings ``partner . B = c_n`` of the
lattice that fall inside the resolution cap around the selected setting.  Each
ring is cut at ``azimuth_steps`` equally spaced azimuths about the partner
axis.  Float geometry finds the points; the lattice index ``n`` stored with
each point is what every constraint check uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleError, ParameterError
from .geometry import (
    DEGENERACY_TOL,
    RationalCosine,
    UnitVector,
    as_array,
    as_unit,
    cap_angular_radius,
    cap_cos_threshold,
    lattice_floats,
    lattice_index,
    orthonormal_frame,
    sample_cap_many,
    transport_many,
)

MAX_DELTA = 0.2
FEASIBILITY_PRODUCT = 8


@dataclass(frozen=True)
class ModelParams:
    """Global model constants.

    ``N`` is the (even) lattice size, ``delta`` the resolution bound as a chord
    distance, ``azimuth_steps`` the ring discretization (defaults to ``N``).
    """

    N: int = 1024
    delta: float = 0.02
    azimuth_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4:
            raise ParameterError(f"N must be an integer >= 4, got {self.N}")
        if self.N % 2:
            raise ParameterError("N must be even")
        if not 0.0 < self.delta <= MAX_DELTA:
            raise ParameterError(f"delta must lie in (0, {MAX_DELTA}], got {self.delta}")
        if self.azimuth_steps is None:
            object.__setattr__(self, "azimuth_steps", int(self.N))
        if self.azimuth_steps < 1:
            raise ParameterError("azimuth_steps must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def feasible(self) -> bool:
        return self.N * self.delta >= FEASIBILITY_PRODUCT

    def require_feasible(self) -> None:
        if not self.feasible:
            raise ParameterError(
                f"N*delta = {self.N * self.delta:g} < {FEASIBILITY_PRODUCT}: "
                f"resolution caps can miss every lattice ring (N={self.N}, delta={self.delta})"
            )

    def to_dict(self) -> dict:
        return {"N": self.N, "delta": self.delta, "azimuth_steps": self.azimuth_steps,
                "seed": self.seed}


@dataclass(frozen=True)
class ExperimenterChoice:
    initial_selected: UnitVector
    final_selected: UnitVector

    def __post_init__(self):
        object.__setattr__(self, "initial_selected", as_unit(self.initial_selected))
        object.__setattr__(self, "final_selected", as_unit(self.final_selected))

    @classmethod
    def fixed(cls, direction) -> "ExperimenterChoice":
        """Apparatus initially set where the experimenter then points it."""
        d = as_unit(direction)
        return cls(d, d)


@dataclass(frozen=True)
class ExactSettingPair:
    """An exact setting on the lattice relative to its partner."""

    exact: UnitVector
    partner: UnitVector
    lattice_point: RationalCosine
    azimuth_index: int = 0

    @property
    def n(self) -> int:
        return self.lattice_point.n

    @property
    def kind(self) -> str:
        return self.lattice_point.kind

    def constraint_holds(self) -> bool:
        """Exact check: N(1-c)/2 odd positive (single) or N(1-c)/4 positive (bell)."""
        lp = self.lattice_point
        return lattice_index(lp.value, lp.denominator, lp.kind) == lp.n

    def float_residual(self) -> float:
        return abs(self.exact.dot(self.partner) - float(self.lattice_point))

    def key(self) -> tuple[int, int]:
        return (self.n, self.azimuth_index)


@dataclass(frozen=True)
class HiddenVariableSingle:
    P_exact: UnitVector
    M_exact: UnitVector
    k: int


@dataclass(frozen=True)
class HiddenVariableBell:
    M1_exact: UnitVector
    M2_exact: UnitVector
    k: int
    singlet_marker: str = field(default="singlet")


# ---------------------------------------------------------------------------
# mechanism
# ---------------------------------------------------------------------------

def _check_mechanism_inputs(initial_selected, final_selected) -> None:
    if np.linalg.norm(initial_selected + final_selected) < DEGENERACY_TOL:
        raise DomainError("commanded rotation is a half-turn (initial and final selections antipodal)")


def mechanism(initial_exact, initial_selected, final_selected) -> UnitVector:
    """Final exact orientation from the initial exact one and the two selections."""
    P, p, a = as_array(initial_exact), as_array(initial_selected), as_array(final_selected)
    _check_mechanism_inputs(p, a)
    if np.linalg.norm(P + p) < DEGENERACY_TOL:
        raise DomainError("initial exact orientation is antipodal to its selection")
    return UnitVector.from_array(transport_many(P, p, a))


def mechanism_inverse(final_exact, initial_selected, final_selected) -> UnitVector:
    """Initial exact orientation that the mechanism maps onto ``final_exact``."""
    A, p, a = as_array(final_exact), as_array(initial_selected), as_array(final_selected)
    _check_mechanism_inputs(p, a)
    return UnitVector.from_array(transport_many(A, a, p))


def mechanism_many(initial_exact, initial_selected, final_selected) -> np.ndarray:
    p, a = as_array(initial_selected), as_array(final_selected)
    _check_mechanism_inputs(p, a)
    return transport_many(np.asarray(initial_exact, dtype=float), p, a)


def mechanism_inverse_many(final_exact, initial_selected, final_selected) -> np.ndarray:
    p, a = as_array(initial_selected), as_array(final_selected)
    _check_mechanism_inputs(p, a)
    return transport_many(np.asarray(final_exact, dtype=float), a, p)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_preparation_hv(choices: ExperimenterChoice, params: ModelParams,
                          rng: np.random.Generator, bias_weight: float = 0.0) -> UnitVector:
    """Initial exact orientation, uniform on the delta-cap around the initial selection.

    ``bias_weight`` tilts the draw towards the final selection (off by default).
    """
    pts = sample_cap_many(choices.initial_selected, params.delta, 1, rng,
                          bias_toward=choices.final_selected if bias_weight else None,
                          bias_weight=bias_weight)
    return UnitVector.from_array(pts[0])


def sample_k(params, rng: np.random.Generator) -> int:
    N = params if isinstance(params, int) else params.N
    return int(rng.integers(1, N + 1))


def sample_k_many(N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(1, N + 1, size=size)


# ---------------------------------------------------------------------------
# admissible rings
# ---------------------------------------------------------------------------

def _n_of_cos(c, N: int, kind: str):
    if kind == "single":
        return (N * (1.0 - c) / 2.0 + 1.0) / 2.0
    return N * (1.0 - c) / 4.0


@dataclass
class RingWindows:
    """Per-partner candidate rings and the azimuth window of each inside the cap.

    Arrays are ``(R, K)``; slot ``i`` of row ``r`` is lattice index
    ``n_min[r] + i``.  Grid points ``j_lo .. j_lo + count - 1`` (taken modulo
    ``steps``) are exactly the admissible points of that ring.
    """

    partner: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n: np.ndarray
    cos_n: np.ndarray
    sin_n: np.ndarray
    j_lo: np.ndarray
    count: np.ndarray
    steps: int
    N: int
    kind: str
    gap: np.ndarray  # angular distance from cap edge to nearest ring (<= 0 when one crosses)

    @property
    def totals(self) -> np.ndarray:
        return self.count.sum(axis=1)

    def points(self, rows, slots, j) -> np.ndarray:
        phi = 2.0 * np.pi * (np.asarray(j) % self.steps) / self.steps
        c = self.cos_n[rows, slots][:, None]
        s = self.sin_n[rows, slots][:, None]
        return (c * self.partner[rows] + s * np.cos(phi)[:, None] * self.e1[rows]
                + s * np.sin(phi)[:, None] * self.e2[rows])


def ring_windows(partner, center, delta: float, N: int, kind: str, steps: int) -> RingWindows:
    A = np.atleast_2d(np.asarray(partner, dtype=float))
    R = A.shape[0]
    b = np.broadcast_to(np.asarray(center, dtype=float), (R, 3))
    e1, e2 = orthonormal_frame(A)
    cos_ab = np.sum(A * b, axis=1)
    bx, by = np.sum(b * e1, axis=1), np.sum(b * e2, axis=1)
    sin_ab = np.hypot(bx, by)
    theta_ab = np.arctan2(sin_ab, cos_ab)
    phi_b = np.arctan2(by, bx)
    rho = cap_angular_radius(delta)
    kappa = cap_cos_threshold(delta)

    cos_hi = np.cos(np.maximum(theta_ab - rho, 0.0))
    cos_lo = np.cos(np.minimum(theta_ab + rho, np.pi))
    half = N // 2
    n_min = np.clip(np.floor(_n_of_cos(cos_hi, N, kind)).astype(np.int64), 1, half)
    n_max = np.clip(np.ceil(_n_of_cos(cos_lo, N, kind)).astype(np.int64), 1, half)
    K = int(np.max(n_max - n_min)) + 1
    n = n_min[:, None] + np.arange(K)[None, :]
    valid = n <= n_max[:, None]
    n = np.where(valid, n, n_min[:, None])

    lat = lattice_floats(N, kind)
    cos_n = lat[n - 1]
    sin_n = np.sqrt(np.maximum(0.0, 1.0 - cos_n * cos_n))
    point_ring = cos_n <= -1.0

    j_lo = np.zeros_like(n)
    count = np.zeros_like(n)

    # antipodal point ring (bell n = N/2): one point, -partner
    in_point = point_ring & (-cos_ab[:, None] > kappa)
    count = np.where(in_point, 1, count)

    flat = ~point_ring & (sin_ab[:, None] < 1e-15)
    in_flat = flat & ((cos_n * cos_ab[:, None]) > kappa)
    count = np.where(in_flat, steps, count)

    general = ~point_ring & ~flat
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (kappa - cos_n * cos_ab[:, None]) / (sin_n * sin_ab[:, None])
    full = general & (t < -1.0)
    count = np.where(full, steps, count)
    part = general & (t >= -1.0) & (t < 1.0)
    w = np.arccos(np.clip(t, -1.0, 1.0))
    scale = steps / (2.0 * np.pi)
    u_lo = (phi_b[:, None] - w) * scale
    u_hi = (phi_b[:, None] + w) * scale
    lo = np.floor(u_lo).astype(np.int64) + 1
    hi = np.ceil(u_hi).astype(np.int64) - 1
    cnt = np.clip(hi - lo + 1, 0, steps)
    count = np.where(part, cnt, count)
    j_lo = np.where(part, lo, j_lo)
    count = np.where(valid, count, 0)

    theta_n = np.arccos(np.clip(lat, -1.0, 1.0))
    # distance from the cap to the closest ring of the whole lattice
    idx = np.searchsorted(theta_n, theta_ab)
    lo_i = np.clip(idx - 1, 0, len(theta_n) - 1)
    hi_i = np.clip(idx, 0, len(theta_n) - 1)
    nearest = np.minimum(np.abs(theta_n[lo_i] - theta_ab), np.abs(theta_n[hi_i] - theta_ab))
    gap = nearest - rho

    return RingWindows(A, e1, e2, n, cos_n, sin_n, j_lo, count, steps, N, kind, gap)


def _infeasible(params: ModelParams, kind: str, gap: float) -> InfeasibleError:
    return InfeasibleError(
        f"no {kind}-lattice ring meets the resolution cap: N={params.N}, "
        f"delta={params.delta}, angular gap to nearest ring {max(gap, 0.0):.6g} rad"
    )


def admissible_exact_settings(partner_exact, final_selected, initial_selected,
                              params: ModelParams, kind: str = "single") -> list[ExactSettingPair]:
    """Every exact setting on the ``kind`` lattice relative to ``partner_exact``
    inside the delta-cap around ``final_selected``.

    Ordered by lattice index, then by azimuth.  ``initial_selected`` only has
    to admit the mechanism (not antipodal to ``final_selected``).
    """
    params.require_feasible()
    return _admissible(partner_exact, final_selected, initial_selected, params, kind)


def _admissible(partner_exact, final_selected, initial_selected, params, kind):
    _check_mechanism_inputs(as_array(initial_selected), as_array(final_selected))
    A = as_unit(partner_exact)
    win = ring_windows(A.as_array(), as_array(final_selected), params.delta,
                       params.N, kind, params.azimuth_steps)
    if win.totals[0] == 0:
        raise _infeasible(params, kind, float(win.gap[0]))
    out = []
    for slot in range(win.n.shape[1]):
        c = int(win.count[0, slot])
        if c == 0:
            continue
        n = int(win.n[0, slot])
        lp = RationalCosine.from_index(params.N, n, kind)
        js = win.j_lo[0, slot] + np.arange(c)
        pts = win.points(np.zeros(c, dtype=int), np.full(c, slot), js)
        for j, pt in sorted(zip((js % win.steps).tolist(), pts), key=lambda t: t[0]):
            out.append(ExactSettingPair(UnitVector.from_array(pt), A, lp, int(j)))
    return out


def sample_measurement_hv(admissible: list[ExactSettingPair], choices: ExperimenterChoice,
                          rng: np.random.Generator) -> tuple[UnitVector, ExactSettingPair]:
    """Uniform draw from the admissible list; returns (initial exact, exact pair)."""
    if not admissible:
        raise InfeasibleError("empty admissible set")
    pair = admissible[int(rng.integers(len(admissible)))]
    M = mechanism_inverse(pair.exact, choices.initial_selected, choices.final_selected)
    return M, pair


@dataclass
class AdmissibleDraw:
    exact: np.ndarray
    n: np.ndarray
    azimuth_index: np.ndarray
    set_size: np.ndarray


def sample_admissible_many(partner: np.ndarray, final_selected, params: ModelParams,
                           kind: str, rng: np.random.Generator) -> AdmissibleDraw:
    """Batch counterpart of ``admissible_exact_settings`` + a uniform draw.

    Each row gets a point drawn uniformly from exactly the set the list
    version would return for that partner.
    """
    win = ring_windows(partner, as_array(final_selected), params.delta,
                       params.N, kind, params.azimuth_steps)
    totals = win.totals
    if np.any(totals == 0):
        bad = int(np.argmax(totals == 0))
        raise _infeasible(params, kind, float(win.gap[bad]))
    u = np.floor(rng.random(len(totals)) * totals).astype(np.int64)
    u = np.minimum(u, totals - 1)
    cum = np.cumsum(win.count, axis=1)
    slot = np.sum(cum <= u[:, None], axis=1)
    rows = np.arange(len(totals))
    before = np.where(slot > 0, cum[rows, np.maximum(slot - 1, 0)], 0)
    offset = u - before
    j = win.j_lo[rows, slot] + offset
    pts = win.points(rows, slot, j)
    return AdmissibleDraw(pts, win.n[rows, slot], j % win.steps, totals)


def exact_pair_from_index(partner, N: int, n: int, j: int, steps: int, kind: str) -> np.ndarray:
    """Grid point ``j`` on ring ``n`` about ``partner`` (same construction as the rings)."""
    A = np.atleast_2d(as_array(partner))
    e1, e2 = orthonormal_frame(A)
    c = lattice_floats(N, kind)[n - 1]
    s = math.sqrt(max(0.0, 1.0 - c * c))
    phi = 2.0 * math.pi * (j % steps) / steps
    return (c * A + s * math.cos(phi) * e1 + s * math.sin(phi) * e2)[0]


def within_cap(v, center, delta: float) -> bool:
    return float(np.linalg.norm(as_array(v) - as_array(center))) < delta


def check_support(v, center, delta: float, what: str) -> None:
    if not within_cap(v, center, delta):
        raise DomainError(f"{what} lies outside its delta-cap")
