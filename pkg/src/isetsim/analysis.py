"""Mechanized checks of the model's structural properties.

Each operation returns a report dataclass with a ``to_dict`` for JSON output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bitstring import build_singlet, differing_columns, outcome_pair, singlet_outcomes
from .errors import DegeneracyError, InfeasibleError, ParameterError
from .experiments import (
    DriftModel,
    RunRecord,
    run_bell_sequential,
    run_sequential,
    snap,
    snap_tolerance,
)
from .geometry import (
    RationalCosine,
    UnitVector,
    allowed_cosines,
    as_unit,
    build_triangle,
    lattice_floats,
    orthonormal_frame,
    sample_cap,
    sample_cap_many,
    special_rational_cosine,
)
from .ontology import (
    ModelParams,
    _admissible,
    admissible_exact_settings,
    mechanism,
    mechanism_inverse,
    mechanism_many,
    sample_admissible_many,
)

ALPHA = 0.05
N_BOOT = 2000
HIST_BINS = 32
MI_TOLERANCE = 0.05


# ---------------------------------------------------------------------------
# distances and estimators
# ---------------------------------------------------------------------------

def _codes(x, y):
    both = list(x) + list(y)
    index = {}
    codes = np.fromiter((index.setdefault(v, len(index)) for v in both), dtype=np.int64,
                        count=len(both))
    return codes[:len(x)], codes[len(x):], len(index)


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def tv_with_ci(x, y, rng: np.random.Generator, n_boot: int = N_BOOT,
               alpha: float = ALPHA) -> tuple[float, float, float]:
    """Plug-in total-variation distance between two samples with a bootstrap CI.

    By the triangle inequality ``|TV(p^, q^) - TV(p, q)| <= TV(p^, p) + TV(q^, q)``.
    The bootstrap estimates the (1 - alpha) quantile ``eps`` of the right-hand
    side by resampling each empirical law around itself; the interval is
    ``[TV^ - eps, TV^ + eps]`` clipped to [0, 1].  Unlike a percentile interval
    of the (upward-biased) plug-in estimate, it covers 0 for identical laws.
    """
    cx, cy, K = _codes(x, y)
    nx, ny = len(cx), len(cy)
    p = np.bincount(cx, minlength=K) / nx
    q = np.bincount(cy, minlength=K) / ny
    tv = 0.5 * float(np.abs(p - q).sum())
    ps = rng.multinomial(nx, p, size=n_boot) / nx
    qs = rng.multinomial(ny, q, size=n_boot) / ny
    err = 0.5 * np.abs(ps - p).sum(axis=1) + 0.5 * np.abs(qs - q).sum(axis=1)
    eps = float(np.quantile(err, 1.0 - alpha))
    return tv, max(0.0, tv - eps), min(1.0, tv + eps)


def plugin_mutual_information(x, y) -> float:
    """Plug-in mutual information in bits between two discrete samples."""
    x = np.asarray(x)
    y = np.asarray(y)
    if len(x) != len(y) or len(x) == 0:
        raise ParameterError("mutual information needs two equal-length, non-empty samples")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))


def mi_bias_bound(kx: int, ky: int, runs: int) -> float:
    return kx * ky / (2.0 * runs * math.log(2.0))


# ---------------------------------------------------------------------------
# measurement dependence
# ---------------------------------------------------------------------------

@dataclass
class DependenceReport:
    variant: str
    setting_pair: list
    distance: float
    ci_low: float
    ci_high: float
    sample_sizes: tuple
    support_sizes: tuple
    shared_support: int
    separation: float
    alpha: float = ALPHA

    @property
    def verdict(self) -> str:
        return "dependent" if self.ci_low > 0.0 else "independent-within-tolerance"

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "setting_pair": [as_unit(v).to_list() for v in self.setting_pair],
            "distance": self.distance,
            "ci": [self.ci_low, self.ci_high],
            "alpha": self.alpha,
            "sample_sizes": list(self.sample_sizes),
            "support_sizes": list(self.support_sizes),
            "shared_support": self.shared_support,
            "separation": self.separation,
            "verdict": self.verdict,
        }


def _m_key(v: UnitVector) -> tuple:
    return tuple(round(c, 9) for c in v.to_list())


def _check_selected_pair(s1, s2, delta: float) -> float:
    sep = as_unit(s1).chord(s2)
    if 0.0 < sep <= 2.0 * delta:
        raise ParameterError(
            f"selected settings {sep:.4g} apart: distinct selections must be more than 2*delta apart")
    return sep


def _dependence(variant, params, partners, selected, initial, kind, samples, rng):
    keys, sizes = [], []
    for partner, sel in zip(partners, selected):
        adm = admissible_exact_settings(partner, sel, initial, params, kind)
        Ms = [_m_key(mechanism_inverse(p.exact, initial, sel)) for p in adm]
        idx = rng.integers(len(adm), size=samples)
        keys.append([Ms[i] for i in idx])
        sizes.append(len(adm))
    tv, lo, hi = tv_with_ci(keys[0], keys[1], rng)
    shared = len(set(keys[0]) & set(keys[1]))
    return tv, lo, hi, tuple(sizes), shared


def measurement_dependence_single(params: ModelParams, A_exact, b1, b2, m,
                                  samples: int = 20_000,
                                  rng: np.random.Generator | None = None) -> DependenceReport:
    """Compare p(M | A, b1, m) with p(M | A, b2, m) over the admissible sets.

    The outcome alphabet is the exact identity of the discrete M points.
    """
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    sep = _check_selected_pair(b1, b2, params.delta)
    tv, lo, hi, sizes, shared = _dependence(
        "single", params, [A_exact, A_exact], [b1, b2], m, "single", samples, rng)
    return DependenceReport("single", [b1, b2], tv, lo, hi, (samples, samples), sizes,
                            shared, sep)


def measurement_dependence_bell(params: ModelParams, B1, B2, c, m2, samples: int = 20_000,
                                rng: np.random.Generator | None = None) -> DependenceReport:
    """Compare p(M2 | B1, c, m2) with p(M2 | B2, c, m2) on the bell lattice."""
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    sep = as_unit(B1).chord(B2)
    tv, lo, hi, sizes, shared = _dependence(
        "bell", params, [B1, B2], [c, c], m2, "bell", samples, rng)
    return DependenceReport("bell", [B1, B2], tv, lo, hi, (samples, samples), sizes, shared, sep)


def lattice_sharing_partners(params: ModelParams, C_exact, b1, b2,
                             rng: np.random.Generator) -> tuple[UnitVector, UnitVector]:
    """Two wing-1 exact settings near b1 and b2 that both satisfy the bell
    constraint with the same wing-2 exact setting ``C_exact``."""
    B1 = admissible_exact_settings(C_exact, b1, b1, params, "bell")
    B2 = admissible_exact_settings(C_exact, b2, b2, params, "bell")
    return B1[int(rng.integers(len(B1)))].exact, B2[int(rng.integers(len(B2)))].exact


# ---------------------------------------------------------------------------
# nonlocality
# ---------------------------------------------------------------------------

@dataclass
class NonlocalityWitness:
    found: bool
    trials: int
    N: int
    C_exact: UnitVector | None = None
    M2_exact: UnitVector | None = None
    k: int | None = None
    B1: UnitVector | None = None
    B2: UnitVector | None = None
    M1_for_B1: UnitVector | None = None
    M1_for_B2: UnitVector | None = None
    n1: int | None = None
    n2: int | None = None
    O2: tuple | None = None
    O1: int | None = None

    def replay(self) -> tuple[int, int]:
        """Re-evaluate O2 for both wing-1 settings from the stored trace."""
        outs = []
        for B, n in ((self.B1, self.n1), (self.B2, self.n2)):
            lp = RationalCosine.from_index(self.N, n, "bell")
            if abs(B.dot(self.C_exact) - float(lp)) > 1e-9:
                raise AssertionError("stored wing-1 setting is off its lattice ring")
            outs.append(outcome_pair(build_singlet(self.N, n), self.k)[1])
        return tuple(outs)

    def to_dict(self) -> dict:
        d = {"found": self.found, "trials": self.trials, "N": self.N}
        if self.found:
            d.update({
                "C_exact": self.C_exact.to_list(), "M2_exact": self.M2_exact.to_list(),
                "k": self.k, "B1": self.B1.to_list(), "B2": self.B2.to_list(),
                "M1_for_B1": self.M1_for_B1.to_list(), "M1_for_B2": self.M1_for_B2.to_list(),
                "n1": self.n1, "n2": self.n2, "O1": self.O1, "O2": list(self.O2),
            })
        return d


def default_witness_settings(N: int) -> tuple[UnitVector, UnitVector, UnitVector]:
    """Wing-2 selection along +z and two wing-1 selections on distinct bell rings."""
    n1, n2 = max(1, N // 8), max(2, N // 4)
    c1 = 1.0 - 4.0 * n1 / N
    c2 = 1.0 - 4.0 * n2 / N
    return (UnitVector.from_angle(0.0), UnitVector.from_angle(math.degrees(math.acos(c1))),
            UnitVector.from_angle(math.degrees(math.acos(c2))))


def nonlocality_witness(params: ModelParams, rng: np.random.Generator, max_trials: int = 1000,
                        c=None, b1=None, b2=None) -> NonlocalityWitness:
    """Search for (C, M2, k) and two bell-admissible wing-1 settings B1, B2 whose
    wing-2 outcomes differ.

    Each trial draws the wing-2 exact setting and one admissible B from each
    wing-1 cap, then scans the columns from a random k for a disagreement.
    Trials whose caps hold no admissible point are skipped.  Works for any even
    N (the N*delta feasibility rule is not required here).
    """
    dc, d1, d2 = default_witness_settings(params.N)
    c, b1, b2 = as_unit(c or dc), as_unit(b1 or d1), as_unit(b2 or d2)
    for trial in range(1, max_trials + 1):
        M2 = sample_cap(c, params.delta, rng)
        C = mechanism(M2, c, c)
        k0 = int(rng.integers(1, params.N + 1))
        try:
            L1 = _admissible(C, b1, b1, params, "bell")
            L2 = _admissible(C, b2, b2, params, "bell")
        except InfeasibleError:
            continue
        p1 = L1[int(rng.integers(len(L1)))]
        p2 = L2[int(rng.integers(len(L2)))]
        if p1.n == p2.n:
            continue
        ks = (np.arange(params.N) + k0 - 1) % params.N + 1
        _, r1 = singlet_outcomes(params.N, np.full(params.N, p1.n), ks)
        o1, r2 = singlet_outcomes(params.N, np.full(params.N, p2.n), ks)
        diff = np.nonzero(r1 != r2)[0]
        if len(diff) == 0:
            continue
        i = int(diff[0])
        k = int(ks[i])
        return NonlocalityWitness(
            True, trial, params.N, C, M2, k, p1.exact, p2.exact,
            mechanism_inverse(p1.exact, b1, b1), mechanism_inverse(p2.exact, b2, b2),
            p1.n, p2.n, (int(r1[i]), int(r2[i])), int(o1[i]))
    return NonlocalityWitness(False, max_trials, params.N)


def witness_count(N: int, n1: int, n2: int) -> int:
    """Columns k where row 2 differs between indices n1 and n2 (closed form)."""
    return differing_columns(N, n1, n2)


# ---------------------------------------------------------------------------
# psi-onticity
# ---------------------------------------------------------------------------

@dataclass
class PsiOnticReport:
    settings: list
    separation: float
    support_overlap: float
    histogram_overlap: float
    recomputable: bool
    samples: int
    delta: float

    @property
    def sub_resolution(self) -> bool:
        return self.separation < 2.0 * self.delta

    @property
    def disjoint(self) -> bool:
        return self.support_overlap == 0.0

    def to_dict(self) -> dict:
        return {
            "settings": [as_unit(v).to_list() for v in self.settings],
            "separation": self.separation,
            "support_overlap": self.support_overlap,
            "histogram_overlap": self.histogram_overlap,
            "disjoint": self.disjoint,
            "sub_resolution": self.sub_resolution,
            "state_recomputable": self.recomputable,
            "samples": self.samples,
        }


def _chart(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    e1, e2 = orthonormal_frame(center)
    cosr = np.clip(points @ center, -1.0, 1.0)
    r = np.arccos(cosr)
    x, y = points @ e1, points @ e2
    h = np.hypot(x, y)
    scale = np.where(h > 0, r / np.where(h > 0, h, 1.0), 0.0)
    return np.column_stack([x * scale, y * scale])


def psi_ontic_check(params: ModelParams, a1, a2, samples: int = 20_000,
                    rng: np.random.Generator | None = None, p1=None, p2=None) -> PsiOnticReport:
    """Support overlap of the exact prepared states under two preparations.

    ``support_overlap`` is the mean fraction of each preparation's exact states
    lying inside the other preparation's delta-cap.  ``histogram_overlap`` is
    the sum of bin-wise minima of 32x32 histograms on a shared chart.
    """
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    a1, a2 = as_unit(a1), as_unit(a2)
    p1, p2 = as_unit(p1 or a1), as_unit(p2 or a2)
    sets, recomputable = [], True
    for p, a in ((p1, a1), (p2, a2)):
        P = sample_cap_many(p, params.delta, samples, rng)
        A = mechanism_many(P, p.as_array(), a.as_array())
        # the exact state is a function of (P, p, a): recomputing gives the same points
        recomputable &= bool(np.array_equal(A, mechanism_many(P, p.as_array(), a.as_array())))
        for i in range(min(samples, 64)):
            again = mechanism(P[i], p, a).as_array()
            recomputable &= bool(np.allclose(again, A[i], rtol=0.0, atol=1e-14))
        sets.append(A)
    in2 = np.linalg.norm(sets[0] - a2.as_array(), axis=1) < params.delta
    in1 = np.linalg.norm(sets[1] - a1.as_array(), axis=1) < params.delta
    support = 0.5 * (float(in2.mean()) + float(in1.mean()))

    mid = a1.as_array() + a2.as_array()
    center = mid / np.linalg.norm(mid) if np.linalg.norm(mid) > 1e-9 else a1.as_array()
    x1, x2 = _chart(sets[0], center), _chart(sets[1], center)
    both = np.vstack([x1, x2])
    lo, hi = both.min(axis=0), both.max(axis=0) + 1e-12
    edges = [np.linspace(lo[d], hi[d], HIST_BINS + 1) for d in range(2)]
    h1, _, _ = np.histogram2d(x1[:, 0], x1[:, 1], bins=edges)
    h2, _, _ = np.histogram2d(x2[:, 0], x2[:, 1], bins=edges)
    hist = float(np.minimum(h1 / samples, h2 / samples).sum())
    return PsiOnticReport([a1, a2], a1.chord(a2), support, hist, recomputable, samples,
                          params.delta)


# ---------------------------------------------------------------------------
# counterfactuals
# ---------------------------------------------------------------------------

@dataclass
class CounterfactualVerdict:
    mode: str
    original: list
    swapped: list
    naive_checks: dict
    model_checks: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def naive_verdict(self) -> bool:
        return all(s.on_lattice for s in self.naive_checks.values())

    @property
    def model_verdict(self) -> bool:
        return all(s.on_lattice for s in self.model_checks.values())

    @property
    def differs(self) -> bool:
        return self.naive_verdict != self.model_verdict

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "original": [as_unit(v).to_list() for v in self.original],
            "swapped": [as_unit(v).to_list() for v in self.swapped],
            "naive_verdict": self.naive_verdict,
            "model_verdict": self.model_verdict,
            "naive_checks": {k: v.to_dict() for k, v in self.naive_checks.items()},
            "model_checks": {k: v.to_dict() for k, v in self.model_checks.items()},
            "diagnostics": self.diagnostics,
        }


def _triangle_diagnostics(names, vertices, checks) -> dict:
    try:
        tri = build_triangle(*vertices)
    except DegeneracyError as exc:
        return {"vertices": names, "degenerate": str(exc)}
    out = {
        "vertices": names,
        "vertex_angles": [tri.alpha, tri.beta, tri.gamma],
        "side_angles": list(tri.side_angles()),
        "law_of_cosines_residual": tri.law_of_cosines_residual(),
        "niven": {},
    }
    for label, s in checks.items():
        # a lattice cosine outside {0, +-1/2, +-1} forces an angle that is an
        # irrational multiple of pi
        out["niven"][label] = {
            "rational_cosine": s.on_lattice,
            "angle_rational_in_pi_possible": (not s.on_lattice) or special_rational_cosine(s.nearest),
        }
    return out


def counterfactual_sequential(record: RunRecord, mode: str = "orientations",
                              drift: DriftModel | None = None,
                              snap_fraction: float | None = None) -> CounterfactualVerdict:
    """Swap the order b -> c of the second and third measurements for one run.

    ``mode="orientations"`` re-points apparatuses 2 and 3 (their exact initial
    orientations stay as recorded); ``mode="order"`` swaps which apparatus is
    used when, so each reads its drifted orientation at the other's time.
    The naive verdict reorders the original exact settings; the model verdict
    uses the recomputed ones.
    """
    ctx = record.context
    A, B, C = record.exact_settings
    m = ctx["initial_selected"]
    a, b, c = ctx["final_selected"]
    M = record.hidden.M
    t = ctx["times"]
    N = ctx["N"]
    tol = ctx["snap_tol"] if snap_fraction is None else snap_tolerance(N, snap_fraction)
    if mode == "orientations":
        C_new = mechanism(M[1], m[1], c)
        B_new = mechanism(M[2], m[2], b)
    elif mode == "order":
        drift = drift or ctx["drift"]
        delta = ctx["delta"]
        M2p = drift.state(1, record.run_index, m[1], delta, t[2])
        M3p = drift.state(2, record.run_index, m[2], delta, t[1])
        C_new = mechanism(M3p, m[2], c)
        B_new = mechanism(M2p, m[1], b)
    else:
        raise ParameterError(f"mode must be 'orientations' or 'order', got {mode!r}")
    naive = {"AC": snap(A, C, N, "single", tol), "CB": snap(C, B, N, "single", tol)}
    model = {"AC": snap(A, C_new, N, "single", tol), "CB": snap(C_new, B_new, N, "single", tol)}
    diag = {
        "original_triangle": _triangle_diagnostics(["A", "B", "C"], [A, B, C], naive),
        "new_triangle": _triangle_diagnostics(["A", "B'", "C'"], [A, B_new, C_new], model),
        "settings_changed": not (np.allclose(B.as_array(), B_new.as_array(), atol=1e-12)
                                 and np.allclose(C.as_array(), C_new.as_array(), atol=1e-12)),
    }
    return CounterfactualVerdict(mode, [A, B, C], [A, C_new, B_new], naive, model, diag)


def counterfactual_bell(record: RunRecord, snap_fraction: float | None = None) -> CounterfactualVerdict:
    """Swap the two sequential wing-1 settings (b -> b' becomes b' -> b).

    Naive: the original triangle (B, B', C) with unchanged exact settings.
    Model: the triangle (B'_0, B_0, C) with the re-pointed apparatuses.
    """
    ctx = record.context
    B, Bp, pair = record.exact_settings
    C = pair.exact
    N = pair.lattice_point.denominator
    tol = ctx["snap_tol"] if snap_fraction is None else snap_tolerance(N, snap_fraction)
    M1, M1p = record.hidden.M1_exact, ctx["M1_prime"]
    Bp0 = mechanism(M1, ctx["m1"], ctx["b_prime"])
    B0 = mechanism(M1p, ctx["m1_prime"], ctx["b"])
    naive = {"B'C": snap(Bp, C, N, "bell", tol), "B'B": snap(Bp, B, N, "single", tol)}
    model = {"B'C": snap(Bp0, C, N, "bell", tol), "B'B": snap(Bp0, B0, N, "single", tol)}
    diag = {
        "original_triangle": _triangle_diagnostics(["B", "B'", "C"], [B, Bp, C], naive),
        "new_triangle": _triangle_diagnostics(["B0'", "B0", "C"], [Bp0, B0, C], model),
        "original_BC_n": pair.n,
        "settings_changed": not (np.allclose(Bp.as_array(), Bp0.as_array(), atol=1e-12)
                                 and np.allclose(B.as_array(), B0.as_array(), atol=1e-12)),
    }
    return CounterfactualVerdict("bell-swap", [B, Bp, C], [Bp0, B0, C], naive, model, diag)


SEQUENTIAL_DEGREES = (0.0, 50.0, 110.0)
BELL_SEQUENTIAL_DEGREES = {"b": 0.0, "b_prime": 40.0, "c": 70.0}


@dataclass
class CensusReport:
    kind: str
    mode: str
    runs: int
    differing: int
    naive_admissible: int
    model_admissible: int
    changed_settings: int
    zero_error: bool

    @property
    def fraction(self) -> float:
        return self.differing / self.runs

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "mode": self.mode, "runs": self.runs,
            "differing": self.differing, "fraction_differing": self.fraction,
            "naive_admissible": self.naive_admissible,
            "model_admissible": self.model_admissible,
            "changed_settings": self.changed_settings, "zero_error": self.zero_error,
        }


def counterfactual_census(params: ModelParams, runs: int = 10_000, mode: str = "orientations",
                          drift: DriftModel | None = None, choices=None,
                          times=(0.0, 1.0, 2.0), snap_fraction: float = 0.05) -> CensusReport:
    """Seeded census of sequential runs: how often naive and model verdicts differ."""
    drift = drift or DriftModel(seed=params.seed)
    choices = choices or [UnitVector.from_angle(d) for d in SEQUENTIAL_DEGREES]
    counts = dict(differing=0, naive=0, model=0, changed=0)
    for i in range(runs):
        rec = run_sequential(params, choices, times, drift, run_index=i,
                             snap_fraction=snap_fraction)
        v = counterfactual_sequential(rec, mode, drift)
        counts["differing"] += v.differs
        counts["naive"] += v.naive_verdict
        counts["model"] += v.model_verdict
        counts["changed"] += v.diagnostics["settings_changed"]
    zero = drift.angular_rate == 0.0 and drift.offset_scale == 0.0
    return CensusReport("sequential", mode, runs, counts["differing"], counts["naive"],
                        counts["model"], counts["changed"], zero)


def counterfactual_bell_census(params: ModelParams, runs: int = 10_000,
                               drift: DriftModel | None = None, settings=None,
                               snap_fraction: float = 0.05) -> CensusReport:
    drift = drift or DriftModel(seed=params.seed)
    s = settings or {k: UnitVector.from_angle(v) for k, v in BELL_SEQUENTIAL_DEGREES.items()}
    counts = dict(differing=0, naive=0, model=0, changed=0)
    for i in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(7, i)))
        rec = run_bell_sequential(params, s["b"], s["b_prime"], s["c"], rng, drift, i,
                                  snap_fraction=snap_fraction)
        v = counterfactual_bell(rec)
        counts["differing"] += v.differs
        counts["naive"] += v.naive_verdict
        counts["model"] += v.model_verdict
        counts["changed"] += v.diagnostics["settings_changed"]
    zero = drift.angular_rate == 0.0 and drift.offset_scale == 0.0
    return CensusReport("bell", "orientations", runs, counts["differing"], counts["naive"],
                        counts["model"], counts["changed"], zero)


# ---------------------------------------------------------------------------
# non-commutativity
# ---------------------------------------------------------------------------

@dataclass
class NoncommutativityReport:
    N: int
    orthogonal_triples: list
    two_on_lattice_pairs: int
    example_pairs: list
    max_pairwise_dot: float
    mean_pairwise_dot: float
    trials: int
    fourth_direction_example: dict

    @property
    def tension_flag(self) -> bool:
        return self.two_on_lattice_pairs > 0

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "orthogonal_triples": [[str(v) for v in t] for t in self.orthogonal_triples],
            "orthogonal_triple_count": len(self.orthogonal_triples),
            "two_on_lattice_pairs": self.two_on_lattice_pairs,
            "example_pairs": [[str(v) for v in p] for p in self.example_pairs],
            "tension_with_only_one_of_three": self.tension_flag,
            "lattice_only": True,
            "max_pairwise_dot": self.max_pairwise_dot,
            "mean_pairwise_dot": self.mean_pairwise_dot,
            "trials": self.trials,
            "fourth_direction_example": self.fourth_direction_example,
        }


def orthogonal_lattice_triples(N: int) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Sorted value triples (r1 <= r2 <= r3) on the single lattice with r1^2+r2^2+r3^2 = 1."""
    values = [c.value for c in allowed_cosines(N, "single")]
    by_square: dict[Fraction, list[Fraction]] = {}
    for v in values:
        by_square.setdefault(v * v, []).append(v)
    found = set()
    for i, r1 in enumerate(values):
        for r2 in values[i:]:
            rest = 1 - r1 * r1 - r2 * r2
            for r3 in by_square.get(rest, []):
                found.add(tuple(sorted((r1, r2, r3))))
    return sorted(found)


def two_on_lattice_pairs(N: int) -> list[tuple[Fraction, Fraction]]:
    """Unordered lattice pairs with r1^2 + r2^2 <= 1 (a third orthogonal axis exists)."""
    values = [c.value for c in allowed_cosines(N, "single")]
    return [(r1, r2) for i, r1 in enumerate(values) for r2 in values[i:]
            if r1 * r1 + r2 * r2 <= 1]


def _fourth_direction_example(N: int) -> dict:
    vals = allowed_cosines(N, "single")
    r1, r4 = vals[0], vals[min(1, len(vals) - 1)]
    A = np.array([0.0, 0.0, 1.0])
    t1, t4 = math.acos(float(r1)), math.acos(float(r4))
    X1 = np.array([math.sin(t1), 0.0, math.cos(t1)])
    X4 = np.array([math.sin(t4) * math.cos(1.0), math.sin(t4) * math.sin(1.0), math.cos(t4)])
    return {"A": A.tolist(), "X1": X1.tolist(), "X4": X4.tolist(),
            "A.X1": str(r1), "A.X4": str(r4), "X1.X4": float(X1 @ X4)}


def noncommutativity_census(params: ModelParams, A_exact=None, trials: int = 1000,
                            rng: np.random.Generator | None = None, axes=None,
                            m=None) -> NoncommutativityReport:
    """Exact lattice census of orthogonal triples plus a mechanism perturbation check.

    Only the cosine lattice is considered; a phase constraint is not part of
    the census.  The Monte-Carlo part points one apparatus (initial selection
    ``m``) at each of three orthogonal selections with a common exact initial
    orientation and reports how far the exact settings are from orthogonal.
    """
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    N = params.N
    triples = orthogonal_lattice_triples(N)
    pairs = two_on_lattice_pairs(N)
    axes = [as_unit(v) for v in (axes or np.eye(3))]
    m = as_unit(m or (np.ones(3) / math.sqrt(3.0)))
    Ms = sample_cap_many(m, params.delta, trials, rng)
    X = np.stack([mechanism_many(Ms, m.as_array(), x.as_array()) for x in axes], axis=1)
    dots = np.abs(np.stack([np.sum(X[:, i] * X[:, j], axis=1)
                            for i, j in ((0, 1), (0, 2), (1, 2))], axis=1))
    return NoncommutativityReport(N, triples, len(pairs), pairs[:5], float(dots.max()),
                                  float(dots.mean()), trials, _fourth_direction_example(N))


# ---------------------------------------------------------------------------
# conspiracy
# ---------------------------------------------------------------------------

@dataclass
class ConspiracyReport:
    apparatus_count: int
    runs: int
    mutual_information: float
    correlation_fraction: float
    null_model: bool
    bias_bound: float
    unique_satisfier: bool

    @property
    def log2_count(self) -> float:
        return math.log2(self.apparatus_count)

    def to_dict(self) -> dict:
        return {
            "apparatus_count": self.apparatus_count,
            "runs": self.runs,
            "mutual_information": self.mutual_information,
            "log2_apparatus_count": self.log2_count,
            "correlation_fraction": self.correlation_fraction,
            "null_model": self.null_model,
            "bias_bound": self.bias_bound,
            "unique_satisfier": self.unique_satisfier,
        }


def conspiracy_experiment(params: ModelParams, n_app: int, runs: int = 100_000,
                          rng: np.random.Generator | None = None, null: bool = False,
                          b=None, c=None) -> ConspiracyReport:
    """One apparatus at wing 1, ``n_app`` apparatuses at wing 2.

    Every run, all wing-2 apparatuses share the selected orientation ``c`` and
    get their own exact orientation.  The initial conditions place exactly one
    of them on the bell lattice relative to wing 1's exact setting.  The
    satisfier is identified by checking every apparatus against the lattice.
    In the coupled model the experimenter's choice coincides with it; in the
    null model the choice is uniform and independent.
    """
    if not 2 <= n_app <= 64:
        raise ParameterError("apparatus count must lie in 2..64")
    if runs < 10_000:
        raise ParameterError("conspiracy runs must be at least 10^4")
    bound = mi_bias_bound(n_app, n_app, runs)
    if bound > MI_TOLERANCE:
        raise ParameterError(
            f"plug-in bias bound {bound:.3g} bits exceeds {MI_TOLERANCE} for {n_app} apparatuses "
            f"and {runs} runs")
    params.require_feasible()
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    b = as_unit(b or UnitVector.from_angle(0.0)).as_array()
    c = as_unit(c or UnitVector.from_angle(45.0)).as_array()
    M1 = sample_cap_many(b, params.delta, runs, rng)
    B = mechanism_many(M1, b, b)
    placed = rng.integers(n_app, size=runs)
    C = mechanism_many(sample_cap_many(c, params.delta, runs * n_app, rng), c, c)
    C = C.reshape(runs, n_app, 3)
    draw = sample_admissible_many(B, c, params, "bell", rng)
    C[np.arange(runs), placed] = draw.exact

    d = np.einsum("rk,rjk->rj", B, C)
    n_near = np.clip(np.rint(params.N * (1.0 - d) / 4.0), 1, params.N // 2).astype(np.int64)
    residual = np.abs(d - lattice_floats(params.N, "bell")[n_near - 1])
    on = residual < 1e-12
    unique = bool(np.all(on.sum(axis=1) == 1))
    satisfier = np.argmax(on, axis=1)
    choice = rng.integers(n_app, size=runs) if null else satisfier.copy()
    mi = plugin_mutual_information(choice, satisfier)
    frac = float(np.mean(choice == satisfier))
    return ConspiracyReport(n_app, runs, mi, frac, null, bound, unique)

