"""Runnable experiments: single-particle and Bell ensembles, CHSH, sequential runs.

Ensembles are split into fixed-size chunks.  Chunk ``c`` of stream ``s`` draws
from ``SeedSequence(seed, spawn_key=(s, c))``, so results do not depend on how
many workers process the chunks, and partial statistics are merged in chunk
order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bitstring import (
    BitStringSingle,
    BitStringSinglet,
    build_single,
    build_singlet,
    outcome_pair,
    outcome_single,
    single_outcomes,
    singlet_outcomes,
)
from .errors import ParameterError
from .geometry import (
    RationalCosine,
    UnitVector,
    as_array,
    as_unit,
    cap_angular_radius,
    lattice_index,
    nearest_allowed,
    orthonormal_frame,
    sample_cap,
    sample_cap_many,
)
from .ontology import (
    ExperimenterChoice,
    HiddenVariableBell,
    HiddenVariableSingle,
    ModelParams,
    admissible_exact_settings,
    mechanism,
    mechanism_inverse_many,
    mechanism_many,
    sample_admissible_many,
    sample_k,
    sample_k_many,
    sample_measurement_hv,
    sample_preparation_hv,
)

CHUNK = 8192
MIN_ENSEMBLE_RUNS = 1000


def resolve_seed(params: ModelParams, rng=None) -> int:
    if rng is None:
        return params.seed
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(0, 2**63))


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, chunk)))


# ---------------------------------------------------------------------------
# records and statistics
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    run_index: int
    hidden: object
    exact_settings: list
    bits: object = None
    outcomes: tuple = ()
    timestamps: tuple = ()
    context: dict = field(default_factory=dict)

    def recomputed_outcomes(self) -> tuple:
        k = self.hidden.k
        if isinstance(self.bits, BitStringSingle):
            return (outcome_single(self.bits, k),)
        if isinstance(self.bits, BitStringSinglet):
            return outcome_pair(self.bits, k)
        return ()

    def is_consistent(self) -> bool:
        return tuple(self.outcomes) == self.recomputed_outcomes()


@dataclass
class Accumulator:
    """Additive partial sums for one ensemble; ``merge`` is associative."""

    runs: int = 0
    sum_product: float = 0.0
    sum_o1: float = 0.0
    sum_o2: float = 0.0
    sum_model: float = 0.0
    sum_first: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sum_second: np.ndarray = field(default_factory=lambda: np.zeros(3))
    max_err_first: float = 0.0
    max_err_second: float = 0.0

    def merge(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(
            self.runs + other.runs,
            self.sum_product + other.sum_product,
            self.sum_o1 + other.sum_o1,
            self.sum_o2 + other.sum_o2,
            self.sum_model + other.sum_model,
            self.sum_first + other.sum_first,
            self.sum_second + other.sum_second,
            max(self.max_err_first, other.max_err_first),
            max(self.max_err_second, other.max_err_second),
        )


@dataclass
class EnsembleStats:
    """Aggregated estimators for one ensemble.

    For single-particle runs ``a_prime``/``b_prime`` are the mean exact
    preparation and measurement settings; for Bell runs ``b_prime``/``c_prime``
    are the mean exact settings at wings 1 and 2.
    """

    kind: str
    runs: int
    E_hat: float
    sigma: float
    quantum_E: float
    model_E: float
    prime_E: float
    a_prime: list | None
    b_prime: list | None
    c_prime: list | None
    marginal_1: float
    marginal_2: float | None
    delta: float
    seed: int
    max_setting_error: float

    @property
    def tolerance(self) -> float:
        return 2.0 * self.delta + 5.0 * self.sigma

    @property
    def deviation(self) -> float:
        return abs(self.E_hat - self.quantum_E)

    @property
    def passed(self) -> bool:
        return self.deviation < self.tolerance

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "runs": self.runs,
            "E_hat": self.E_hat,
            "sigma": self.sigma,
            "quantum_E": self.quantum_E,
            "model_E": self.model_E,
            "prime_E": self.prime_E,
            "a_prime": self.a_prime,
            "b_prime": self.b_prime,
            "c_prime": self.c_prime,
            "marginal_1": self.marginal_1,
            "marginal_2": self.marginal_2,
            "tolerance": self.tolerance,
            "deviation": self.deviation,
            "max_setting_error": self.max_setting_error,
            "seed": self.seed,
            "passed": self.passed,
        }


def _unit_mean(v: np.ndarray, runs: int) -> list:
    return (v / runs).tolist()


def _finish(acc: Accumulator, kind: str, quantum_E: float, params: ModelParams,
            seed: int) -> EnsembleStats:
    r = acc.runs
    E = acc.sum_product / r
    sigma = math.sqrt(max(0.0, 1.0 - E * E) / r)
    first = acc.sum_first / r
    second = acc.sum_second / r
    if kind == "single":
        prime_E = float(first @ second)
        a_p, b_p, c_p = first.tolist(), second.tolist(), None
        m2 = None
    else:
        prime_E = -float(first @ second)
        a_p, b_p, c_p = None, first.tolist(), second.tolist()
        m2 = acc.sum_o2 / r
    return EnsembleStats(kind, r, E, sigma, quantum_E, acc.sum_model / r, prime_E,
                         a_p, b_p, c_p, acc.sum_o1 / r, m2, params.delta, seed,
                         max(acc.max_err_first, acc.max_err_second))


def _run_chunks(fn: Callable[[int, int, np.random.Generator], Accumulator], runs: int,
                seed: int, stream: int, workers: int) -> Accumulator:
    sizes = [min(CHUNK, runs - start) for start in range(0, runs, CHUNK)]
    starts = list(range(0, runs, CHUNK))

    def job(i):
        return fn(starts[i], sizes[i], chunk_rng(seed, stream, i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    acc = Accumulator()
    for p in parts:  # fixed order keeps float sums reproducible
        acc = acc.merge(p)
    return acc


def _check_runs(runs: int) -> None:
    if runs < MIN_ENSEMBLE_RUNS:
        raise ParameterError(f"ensembles need at least {MIN_ENSEMBLE_RUNS} runs, got {runs}")


# ---------------------------------------------------------------------------
# single particle
# ---------------------------------------------------------------------------

def run_single_once(params: ModelParams, prep_choice: ExperimenterChoice,
                    meas_choice: ExperimenterChoice, rng: np.random.Generator,
                    run_index: int = 0) -> RunRecord:
    """One preparation/measurement run through the explicit admissible list."""
    P = sample_preparation_hv(prep_choice, params, rng)
    A = mechanism(P, prep_choice.initial_selected, prep_choice.final_selected)
    k = sample_k(params, rng)
    admissible = admissible_exact_settings(A, meas_choice.final_selected,
                                           meas_choice.initial_selected, params, "single")
    M, pair = sample_measurement_hv(admissible, meas_choice, rng)
    assert pair.constraint_holds()
    bits = build_single(params, pair.n, 0)
    hidden = HiddenVariableSingle(P, M, k)
    return RunRecord(run_index, hidden, [A, pair], bits, (outcome_single(bits, k),),
                     context={"admissible_size": len(admissible)})


def _single_chunk(params, prep, meas, start, size, rng, sink=None) -> Accumulator:
    p, a = prep.initial_selected.as_array(), prep.final_selected.as_array()
    m, b = meas.initial_selected.as_array(), meas.final_selected.as_array()
    P = sample_cap_many(p, params.delta, size, rng)
    A = mechanism_many(P, p, a)
    k = sample_k_many(params.N, size, rng)
    draw = sample_admissible_many(A, b, params, "single", rng)
    B = draw.exact
    o = single_outcomes(params.N, draw.n, k)
    if sink is not None:
        M = mechanism_inverse_many(B, m, b)
        for i in range(size):
            sink({"run_index": start + i, "P": P[i].tolist(), "M": M[i].tolist(),
                  "k": int(k[i]), "A": A[i].tolist(), "B": B[i].tolist(),
                  "n": int(draw.n[i]), "outcome": int(o[i])})
    return Accumulator(
        runs=size,
        sum_product=float(np.sum(o, dtype=np.int64)),
        sum_o1=float(np.sum(o, dtype=np.int64)),
        sum_model=float(np.sum(np.sum(A * B, axis=1))),
        sum_first=A.sum(axis=0),
        sum_second=B.sum(axis=0),
        max_err_first=float(np.max(np.linalg.norm(A - a, axis=1))),
        max_err_second=float(np.max(np.linalg.norm(B - b, axis=1))),
    )


def run_single_ensemble(params: ModelParams, prep_choice: ExperimenterChoice,
                        meas_choice: ExperimenterChoice, runs: int, rng=None,
                        workers: int = 1, stream: int = 0,
                        record_sink: Callable[[dict], None] | None = None) -> EnsembleStats:
    params.require_feasible()
    _check_runs(runs)
    seed = resolve_seed(params, rng)
    if record_sink is not None:
        workers = 1
    acc = _run_chunks(
        lambda start, size, r: _single_chunk(params, prep_choice, meas_choice, start, size, r,
                                             record_sink),
        runs, seed, stream, workers)
    q = prep_choice.final_selected.dot(meas_choice.final_selected)
    return _finish(acc, "single", q, params, seed)


# ---------------------------------------------------------------------------
# Bell scenario
# ---------------------------------------------------------------------------

def run_bell_once(params: ModelParams, wing1_choice: ExperimenterChoice,
                  wing2_choice: ExperimenterChoice, rng: np.random.Generator,
                  run_index: int = 0) -> RunRecord:
    """One Bell run; wing 1 is measured first in the preferred foliation."""
    m1, b = wing1_choice.initial_selected, wing1_choice.final_selected
    M1 = sample_cap(m1, params.delta, rng)
    B = mechanism(M1, m1, b)
    k = sample_k(params, rng)
    admissible = admissible_exact_settings(B, wing2_choice.final_selected,
                                           wing2_choice.initial_selected, params, "bell")
    M2, pair = sample_measurement_hv(admissible, wing2_choice, rng)
    assert pair.constraint_holds()
    bits = build_singlet(params, pair.n)
    hidden = HiddenVariableBell(M1, M2, k)
    return RunRecord(run_index, hidden, [B, pair], bits, outcome_pair(bits, k),
                     context={"admissible_size": len(admissible)})


def _bell_chunk(params, w1, w2, start, size, rng, sink=None) -> Accumulator:
    m1, b = w1.initial_selected.as_array(), w1.final_selected.as_array()
    m2, c = w2.initial_selected.as_array(), w2.final_selected.as_array()
    M1 = sample_cap_many(m1, params.delta, size, rng)
    B = mechanism_many(M1, m1, b)
    k = sample_k_many(params.N, size, rng)
    draw = sample_admissible_many(B, c, params, "bell", rng)
    C = draw.exact
    o1, o2 = singlet_outcomes(params.N, draw.n, k)
    prod = o1.astype(np.int64) * o2
    if sink is not None:
        M2 = mechanism_inverse_many(C, m2, c)
        for i in range(size):
            sink({"run_index": start + i, "M1": M1[i].tolist(), "M2": M2[i].tolist(),
                  "k": int(k[i]), "B": B[i].tolist(), "C": C[i].tolist(),
                  "n": int(draw.n[i]), "outcomes": [int(o1[i]), int(o2[i])]})
    return Accumulator(
        runs=size,
        sum_product=float(prod.sum()),
        sum_o1=float(np.sum(o1, dtype=np.int64)),
        sum_o2=float(np.sum(o2, dtype=np.int64)),
        sum_model=-float(np.sum(np.sum(B * C, axis=1))),
        sum_first=B.sum(axis=0),
        sum_second=C.sum(axis=0),
        max_err_first=float(np.max(np.linalg.norm(B - b, axis=1))),
        max_err_second=float(np.max(np.linalg.norm(C - c, axis=1))),
    )


def run_bell_ensemble(params: ModelParams, wing1_choice: ExperimenterChoice,
                      wing2_choice: ExperimenterChoice, runs: int, rng=None,
                      workers: int = 1, stream: int = 0,
                      record_sink: Callable[[dict], None] | None = None) -> EnsembleStats:
    params.require_feasible()
    _check_runs(runs)
    seed = resolve_seed(params, rng)
    if record_sink is not None:
        workers = 1
    acc = _run_chunks(
        lambda start, size, r: _bell_chunk(params, wing1_choice, wing2_choice, start, size, r,
                                           record_sink),
        runs, seed, stream, workers)
    q = -wing1_choice.final_selected.dot(wing2_choice.final_selected)
    return _finish(acc, "bell", q, params, seed)


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------

CHSH_DEFAULT_DEGREES = {"b": 0.0, "b_prime": 90.0, "c": 45.0, "c_prime": 135.0}


@dataclass
class CHSHResult:
    S: float
    sigma_max: float
    correlators: dict
    delta: float

    @property
    def threshold(self) -> float:
        return 2.0 * math.sqrt(2.0) - 8.0 * self.delta - 20.0 * self.sigma_max

    @property
    def passed(self) -> bool:
        return self.S >= self.threshold

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "sigma_max": self.sigma_max,
            "threshold": self.threshold,
            "quantum_S": 2.0 * math.sqrt(2.0),
            "passed": self.passed,
            "correlators": {k: v.to_dict() for k, v in self.correlators.items()},
        }


def chsh(params: ModelParams, settings: dict | None = None, runs_per_pair: int = 100_000,
         rng=None, workers: int = 1) -> CHSHResult:
    """``S = |E(b,c) - E(b,c') + E(b',c) + E(b',c')|`` from four Bell ensembles.

    ``settings`` maps ``b, b_prime, c, c_prime`` to unit vectors; the default is
    the coplanar 0, 90, 45, 135 degree set.
    """
    if settings is None:
        settings = {k: UnitVector.from_angle(v) for k, v in CHSH_DEFAULT_DEGREES.items()}
    s = {k: as_unit(v) for k, v in settings.items()}
    seed = resolve_seed(params, rng)
    pairs = {"bc": ("b", "c"), "bc'": ("b", "c_prime"),
             "b'c": ("b_prime", "c"), "b'c'": ("b_prime", "c_prime")}
    corr = {}
    for stream, (name, (x, y)) in enumerate(pairs.items()):
        corr[name] = run_bell_ensemble(params, ExperimenterChoice.fixed(s[x]),
                                       ExperimenterChoice.fixed(s[y]), runs_per_pair,
                                       rng=seed, workers=workers, stream=stream)
    S = abs(corr["bc"].E_hat - corr["bc'"].E_hat + corr["b'c"].E_hat + corr["b'c'"].E_hat)
    return CHSHResult(S, max(c.sigma for c in corr.values()), corr, params.delta)


# ---------------------------------------------------------------------------
# drift and sequential runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftModel:
    """Deterministic in-cap motion of an apparatus' exact initial orientation.

    The orientation starts at a point drawn uniformly on the delta-cap and moves
    at ``angular_rate`` along a straight line of the azimuthal-equidistant chart
    centred on the selected orientation, reflecting specularly at the cap rim.
    Start and heading are pseudo-random functions of
    ``(seed, run_index, apparatus_id)``.  ``offset_scale = 0`` pins the start
    to the selected orientation.
    """

    angular_rate: float = 0.01
    seed: int = 0
    offset_scale: float = 1.0

    @classmethod
    def none(cls) -> "DriftModel":
        return cls(angular_rate=0.0, seed=0, offset_scale=0.0)

    def _start(self, apparatus_id: int, run_index: int, rho: float):
        g = np.random.default_rng([self.seed, run_index, apparatus_id])
        u, phi, heading = g.random(3)
        r = math.acos(1.0 - u * (1.0 - math.cos(rho))) * self.offset_scale
        phi *= 2.0 * math.pi
        heading *= 2.0 * math.pi
        pos = np.array([r * math.cos(phi), r * math.sin(phi)])
        vel = self.angular_rate * np.array([math.cos(heading), math.sin(heading)])
        return pos, vel

    def chart_position(self, apparatus_id: int, run_index: int, delta: float,
                       t: float) -> np.ndarray:
        rho = cap_angular_radius(delta) * (1.0 - 1e-9)
        pos, vel = self._start(apparatus_id, run_index, rho)
        remaining = float(t)
        speed2 = float(vel @ vel)
        if speed2 == 0.0 or remaining <= 0.0:
            return pos
        for _ in range(100_000):
            pv = float(pos @ vel)
            s = (-pv + math.sqrt(max(0.0, pv * pv + speed2 * (rho * rho - pos @ pos)))) / speed2
            if s >= remaining:
                return pos + vel * remaining
            pos = pos + vel * s
            normal = pos / np.linalg.norm(pos)
            vel = vel - 2.0 * (vel @ normal) * normal
            remaining -= s
            pos = pos * (1.0 - 1e-12)
        return pos

    def state(self, apparatus_id: int, run_index: int, center, delta: float,
              t: float) -> UnitVector:
        c = as_array(center)
        e1, e2 = orthonormal_frame(c)
        x, y = self.chart_position(apparatus_id, run_index, delta, t)
        r = math.hypot(x, y)
        if r == 0.0:
            return as_unit(c)
        d = (x * e1 + y * e2) / r
        return UnitVector.from_array(math.cos(r) * c + math.sin(r) * d)


def snap_tolerance(N: int, snap_fraction: float) -> float:
    return snap_fraction * 4.0 / N


@dataclass(frozen=True)
class SnapResult:
    dot: float
    nearest: RationalCosine
    residual: float
    on_lattice: bool

    def to_dict(self) -> dict:
        return {"dot": self.dot, "nearest": str(self.nearest), "n": self.nearest.n,
                "residual": self.residual, "on_lattice": self.on_lattice}


def snap(u, v, N: int, kind: str, tol: float) -> SnapResult:
    """Snap ``u . v`` to the nearest lattice value; membership within ``tol``.

    Once snapped, membership is confirmed on the exact lattice value.
    """
    d = max(-1.0, min(1.0, as_unit(u).dot(v)))
    near = nearest_allowed(d, N, kind)
    res = abs(d - float(near))
    on = res <= tol and lattice_index(near.value, N, kind) == near.n
    return SnapResult(d, near, res, on)


SEQUENTIAL_TIMES = (0.0, 1.0, 2.0)


def run_sequential(params: ModelParams, choices: Sequence, times: Sequence[float] = SEQUENTIAL_TIMES,
                   drift: DriftModel | None = None, rng: np.random.Generator | None = None,
                   run_index: int = 0, initial_selected: Sequence | None = None,
                   snap_fraction: float = 0.05) -> RunRecord:
    """Three sequential Stern-Gerlach apparatuses with drifting exact orientations.

    ``choices`` are the final selected orientations (a, b, c); the initial
    selected orientations default to the same directions.  The record's
    context holds the constraint report for (A.B, B.C) on the single lattice.
    Reports, never rejects.
    """
    drift = drift or DriftModel(seed=params.seed)
    finals = [as_unit(c) for c in choices]
    initials = [as_unit(c) for c in (initial_selected or finals)]
    if len(finals) != 3 or len(initials) != 3 or len(times) != 3:
        raise ParameterError("sequential runs need three apparatuses and three times")
    Ms = [drift.state(i, run_index, initials[i], params.delta, times[i]) for i in range(3)]
    A, B, C = (mechanism(Ms[i], initials[i], finals[i]) for i in range(3))
    tol = snap_tolerance(params.N, snap_fraction)
    ab = snap(A, B, params.N, "single", tol)
    bc = snap(B, C, params.N, "single", tol)
    k = sample_k(params, rng) if rng is not None else None
    context = {
        "N": params.N,
        "delta": params.delta,
        "final_selected": finals,
        "initial_selected": initials,
        "times": tuple(float(t) for t in times),
        "snap_tol": tol,
        "drift": drift,
        "report": {"AB": ab, "BC": bc, "admissible": ab.on_lattice and bc.on_lattice},
    }
    hidden = _SequentialHidden(tuple(Ms), k)
    return RunRecord(run_index, hidden, [A, B, C], timestamps=tuple(times), context=context)


@dataclass(frozen=True)
class _SequentialHidden:
    M: tuple
    k: int | None


def run_bell_sequential(params: ModelParams, b, b_prime, c, rng: np.random.Generator,
                        drift: DriftModel | None = None, run_index: int = 0,
                        m1=None, m1_prime=None, m2=None, times=(0.0, 1.0),
                        snap_fraction: float = 0.05) -> RunRecord:
    """Bell run with two sequential apparatuses at wing 1 (settings b then b').

    Wing 2's exact setting is drawn from the bell-lattice admissible set of the
    first wing-1 apparatus, as in an ordinary Bell run.
    """
    drift = drift or DriftModel(seed=params.seed)
    b, b_prime, c = as_unit(b), as_unit(b_prime), as_unit(c)
    m1 = as_unit(m1 or b)
    m1_prime = as_unit(m1_prime or b_prime)
    m2 = as_unit(m2 or c)
    M1 = drift.state(0, run_index, m1, params.delta, times[0])
    M1p = drift.state(1, run_index, m1_prime, params.delta, times[1])
    B = mechanism(M1, m1, b)
    Bp = mechanism(M1p, m1_prime, b_prime)
    k = sample_k(params, rng)
    admissible = admissible_exact_settings(B, c, m2, params, "bell")
    M2, pair = sample_measurement_hv(admissible, ExperimenterChoice(m2, c), rng)
    bits = build_singlet(params, pair.n)
    hidden = HiddenVariableBell(M1, M2, k)
    context = {
        "b": b, "b_prime": b_prime, "c": c, "m1": m1, "m1_prime": m1_prime, "m2": m2,
        "M1_prime": M1p, "times": tuple(times),
        "snap_tol": snap_tolerance(params.N, snap_fraction),
    }
    return RunRecord(run_index, hidden, [B, Bp, pair], bits, outcome_pair(bits, k),
                     timestamps=tuple(times), context=context)
