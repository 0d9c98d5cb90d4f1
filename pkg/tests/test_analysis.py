import itertools
import json
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isetsim.analysis import (
    conspiracy_experiment,
    counterfactual_bell,
    counterfactual_bell_census,
    counterfactual_census,
    counterfactual_sequential,
    default_witness_settings,
    lattice_sharing_partners,
    measurement_dependence_bell,
    measurement_dependence_single,
    mi_bias_bound,
    noncommutativity_census,
    nonlocality_witness,
    orthogonal_lattice_triples,
    plugin_mutual_information,
    psi_ontic_check,
    tv_distance,
    tv_with_ci,
    two_on_lattice_pairs,
    witness_count,
)
from isetsim.bitstring import build_singlet
from isetsim.errors import ParameterError
from isetsim.experiments import DriftModel, run_bell_sequential, run_sequential
from isetsim.geometry import UnitVector, allowed_cosines, sample_cap
from isetsim.ontology import ModelParams, mechanism

U = UnitVector.from_angle


# estimators ---------------------------------------------------------------------

def _mi_oracle(x, y):
    n = len(x)
    pxy, px, py = Counter(zip(x, y)), Counter(x), Counter(y)
    return sum(c / n * math.log2(c * n / (px[a] * py[b])) for (a, b), c in pxy.items())


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=300))
def test_plugin_mi_matches_oracle(pairs):
    x, y = zip(*pairs)
    mi = plugin_mutual_information(x, y)
    assert mi == pytest.approx(_mi_oracle(x, y), abs=1e-9)
    assert -1e-12 <= mi <= math.log2(len(set(x))) + 1e-9


def test_mi_errors_and_bound():
    with pytest.raises(ParameterError):
        plugin_mutual_information([1, 2], [1])
    assert mi_bias_bound(16, 16, 100_000) == pytest.approx(256 / (2e5 * math.log(2)))


@given(st.lists(st.integers(0, 6), min_size=1, max_size=200),
       st.lists(st.integers(0, 6), min_size=1, max_size=200), st.integers(0, 100))
@settings(max_examples=60)
def test_tv_in_unit_interval(x, y, seed):
    tv, lo, hi = tv_with_ci(x, y, np.random.default_rng(seed), n_boot=200)
    assert 0.0 <= lo <= tv <= hi <= 1.0
    cx, cy = Counter(x), Counter(y)
    keys = sorted(set(cx) | set(cy))
    assert tv == pytest.approx(tv_distance([cx[k] for k in keys], [cy[k] for k in keys]))


def test_tv_extremes(rng):
    tv, lo, _ = tv_with_ci([0] * 500, [1] * 500, rng)
    assert tv == 1.0 and lo > 0.9
    x = rng.integers(10, size=5000)
    tv, lo, hi = tv_with_ci(x, x, rng)
    assert tv == 0.0 and lo == 0.0 and hi > 0.0


# measurement dependence -------------------------------------------------------------

def test_dependence_single_orthogonal_is_dependent(desk, rng):
    rep = measurement_dependence_single(desk, U(10), U(60), U(150), U(60), 5000, rng)
    assert rep.verdict == "dependent" and rep.distance == pytest.approx(1.0)
    assert rep.shared_support == 0
    json.dumps(rep.to_dict())


def test_dependence_single_control(desk, rng):
    rep = measurement_dependence_single(desk, U(10), U(60), U(60), U(60), 5000, rng)
    assert rep.ci_low == 0.0 and rep.verdict == "independent-within-tolerance"


def test_dependence_single_rejects_close_selections(desk, rng):
    with pytest.raises(ParameterError):
        measurement_dependence_single(desk, U(10), U(60), U(61), U(60), 100, rng)


def test_dependence_bell_lattice_sharing(desk, rng):
    c = U(0)
    C = mechanism(sample_cap(c, desk.delta, rng), c, c)
    B1, B2 = lattice_sharing_partners(desk, C, U(45), U(100), rng)
    # both wing-1 settings satisfy the bell constraint with the same C
    for B in (B1, B2):
        n = desk.N * (1 - B.dot(C)) / 4
        assert abs(n - round(n)) < 1e-9
    rep = measurement_dependence_bell(desk, B1, B2, c, c, 5000, rng)
    assert rep.verdict == "dependent"
    ctrl = measurement_dependence_bell(desk, B1, B1, c, c, 5000, rng)
    assert ctrl.verdict == "independent-within-tolerance"


# nonlocality ------------------------------------------------------------------

def test_n8_row2_layouts_differ_at_k2():
    r1, r2 = build_singlet(8, 1).row2, build_singlet(8, 2).row2
    assert (r1[1], r2[1]) == (-1, 1)  # k = 2
    assert r1[2] == r2[2] == -1  # k = 3


def test_witness_count_brute_force():
    for N in range(4, 65, 2):
        for n1, n2 in itertools.product(range(1, N // 2 + 1), repeat=2):
            a, b = build_singlet(N, n1).row2, build_singlet(N, n2).row2
            assert witness_count(N, n1, n2) == int(np.sum(a != b))
            if n1 == n2:
                assert witness_count(N, n1, n2) == 0


@pytest.mark.parametrize("params", [ModelParams(N=8, delta=0.2, azimuth_steps=4096),
                                    ModelParams(N=1024, delta=0.02)])
def test_witness_found_and_replayable(params, rng):
    w = nonlocality_witness(params, rng, 1000)
    assert w.found and w.O2[0] != w.O2[1]
    assert w.replay() == w.O2
    assert w.B1 != w.B2 and w.n1 != w.n2
    c, b1, b2 = default_witness_settings(params.N)
    assert w.C_exact.chord(c) < params.delta
    assert w.B1.chord(b1) < params.delta and w.B2.chord(b2) < params.delta
    assert mechanism(w.M1_for_B1, b1, b1).chord(w.B1) < 1e-12
    json.dumps(w.to_dict())


def test_witness_same_setting_never(rng):
    params = ModelParams(N=8, delta=0.2, azimuth_steps=4096)
    w = nonlocality_witness(params, rng, 50, b1=U(60), b2=U(60))
    # the two draws may pick the same ring; any witness still needs distinct rings
    assert not w.found or w.n1 != w.n2


# psi-ontic ----------------------------------------------------------------------

def test_psi_ontic_cases(desk, rng):
    sep = psi_ontic_check(desk, U(0), U(60), 5000, rng)
    assert sep.disjoint and sep.histogram_overlap == 0.0 and sep.recomputable
    same = psi_ontic_check(desk, U(0), U(0), 5000, rng)
    # 32x32 bins with 5000 draws each: overlap is below 1 from sampling noise alone
    assert same.support_overlap == 1.0 and same.histogram_overlap > 0.6
    near = psi_ontic_check(desk, U(0), U(0.5), 5000, rng)
    assert near.sub_resolution and 0.0 < near.support_overlap < 1.0
    json.dumps(near.to_dict())


# counterfactuals ------------------------------------------------------------------

SEQ = [U(0), U(50), U(110)]


@pytest.mark.parametrize("mode", ["orientations", "order"])
def test_counterfactual_zero_error_verdicts_coincide(desk, mode):
    d = DriftModel.none()
    for i in range(20):
        rec = run_sequential(desk, SEQ, drift=d, run_index=i)
        v = counterfactual_sequential(rec, mode, d)
        assert v.naive_verdict == v.model_verdict
        assert not v.diagnostics["settings_changed"]


@pytest.mark.parametrize("mode", ["orientations", "order"])
def test_counterfactual_is_pure(desk, mode):
    d = DriftModel(seed=4)
    rec = run_sequential(desk, SEQ, drift=d, run_index=3)
    a = counterfactual_sequential(rec, mode, d).to_dict()
    b = counterfactual_sequential(rec, mode, d).to_dict()
    assert a == b
    assert a["diagnostics"]["settings_changed"]
    json.dumps(a)


def test_counterfactual_orientations_recomputes_settings(desk):
    d = DriftModel(seed=4)
    rec = run_sequential(desk, SEQ, drift=d, run_index=3)
    v = counterfactual_sequential(rec, "orientations")
    A, Cn, Bn = v.swapped
    M = rec.hidden.M
    assert Cn == mechanism(M[1], SEQ[1], SEQ[2])
    assert Bn == mechanism(M[2], SEQ[2], SEQ[1])
    with pytest.raises(ParameterError):
        counterfactual_sequential(rec, "sideways")


def test_counterfactual_census_small(desk):
    rep = counterfactual_census(desk, runs=1500)
    assert rep.differing > 0 and not rep.zero_error
    ctrl = counterfactual_census(desk, runs=200, drift=DriftModel.none())
    assert ctrl.differing == 0 and ctrl.zero_error


def test_counterfactual_bell(desk):
    d = DriftModel(seed=2)
    rec = run_bell_sequential(desk, U(0), U(40), U(70), np.random.default_rng(1), d, 0)
    v = counterfactual_bell(rec)
    assert v.to_dict() == counterfactual_bell(rec).to_dict()
    assert v.diagnostics["settings_changed"]
    zero = run_bell_sequential(desk, U(0), U(40), U(70), np.random.default_rng(1),
                               DriftModel.none(), 0)
    z = counterfactual_bell(zero)
    assert z.naive_verdict == z.model_verdict and not z.diagnostics["settings_changed"]
    rep = counterfactual_bell_census(desk, runs=100, drift=DriftModel.none())
    assert rep.differing == 0


# non-commutativity ---------------------------------------------------------------

def _brute_triples(N):
    vals = [c.value for c in allowed_cosines(N, "single")]
    return sorted({tuple(sorted(t)) for t in itertools.product(vals, repeat=3)
                   if sum(v * v for v in t) == 1})


@pytest.mark.parametrize("N", [4, 6, 8, 10, 16, 24, 32])
def test_orthogonal_triples_match_brute_force(N):
    assert orthogonal_lattice_triples(N) == _brute_triples(N) == []


def test_n8_sums_and_pairs():
    vals = [c.value for c in allowed_cosines(8, "single")]
    sums = sorted({sum(v * v for v in t) for t in itertools.product(vals, repeat=3)})
    assert sums == [Fraction(3, 16), Fraction(11, 16), Fraction(19, 16), Fraction(27, 16)]
    pairs = two_on_lattice_pairs(8)
    assert (Fraction(1, 4), Fraction(3, 4)) in pairs or (Fraction(3, 4), Fraction(1, 4)) in pairs


def test_noncommutativity_report(rng):
    rep = noncommutativity_census(ModelParams(N=8, delta=0.2), trials=1000, rng=rng)
    d = rep.to_dict()
    assert d["orthogonal_triple_count"] == 0
    assert d["two_on_lattice_pairs"] > 0 and d["tension_with_only_one_of_three"]
    assert d["lattice_only"] and d["max_pairwise_dot"] > 0
    ex = d["fourth_direction_example"]
    assert np.dot(ex["A"], ex["X1"]) == pytest.approx(float(Fraction(ex["A.X1"])))
    assert np.dot(ex["A"], ex["X4"]) == pytest.approx(float(Fraction(ex["A.X4"])))
    json.dumps(d)


# conspiracy ----------------------------------------------------------------------

def test_conspiracy_small(desk, rng):
    rep = conspiracy_experiment(desk, 2, 10_000, rng)
    assert rep.unique_satisfier and rep.correlation_fraction == 1.0
    assert abs(rep.mutual_information - 1.0) < 0.05
    null = conspiracy_experiment(desk, 2, 10_000, rng, null=True)
    assert null.mutual_information < 0.05 and 0.4 < null.correlation_fraction < 0.6
    json.dumps(rep.to_dict())


def test_conspiracy_preconditions(desk, rng):
    with pytest.raises(ParameterError):
        conspiracy_experiment(desk, 1, 10_000, rng)
    with pytest.raises(ParameterError):
        conspiracy_experiment(desk, 65, 10_000, rng)
    with pytest.raises(ParameterError):
        conspiracy_experiment(desk, 4, 9_999, rng)
    with pytest.raises(ParameterError, match="bias bound"):
        conspiracy_experiment(desk, 64, 10_000, rng)
