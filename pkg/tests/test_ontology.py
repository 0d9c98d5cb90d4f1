import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from isetsim.errors import DomainError, InfeasibleError, ParameterError
from isetsim.geometry import UnitVector, lattice_floats, orthonormal_frame, sample_cap
from isetsim.ontology import (
    ExperimenterChoice,
    ModelParams,
    admissible_exact_settings,
    check_support,
    exact_pair_from_index,
    mechanism,
    mechanism_inverse,
    mechanism_inverse_many,
    mechanism_many,
    ring_windows,
    sample_admissible_many,
    sample_k,
    sample_k_many,
    sample_measurement_hv,
    sample_preparation_hv,
    within_cap,
)

angles = st.floats(-180, 180, allow_nan=False)


def test_model_params_validation():
    p = ModelParams()
    assert (p.N, p.delta, p.azimuth_steps, p.feasible) == (1024, 0.02, 1024, True)
    with pytest.raises(ParameterError, match="N must be even"):
        ModelParams(N=1023)
    with pytest.raises(ParameterError):
        ModelParams(N=2)
    with pytest.raises(ParameterError):
        ModelParams(delta=0.3)
    with pytest.raises(ParameterError):
        ModelParams(delta=0.0)
    with pytest.raises(ParameterError):
        ModelParams(azimuth_steps=0)
    low = ModelParams(N=100, delta=0.01)
    assert not low.feasible
    with pytest.raises(ParameterError, match="N\\*delta"):
        low.require_feasible()
    assert ModelParams(N=8, delta=0.2).to_dict()["azimuth_steps"] == 8


# mechanism ---------------------------------------------------------------

@given(angles, angles, st.floats(0, 2 * math.pi), st.floats(0.0, 0.2))
def test_mechanism_isometry_and_inverse(p_deg, a_deg, phi, r):
    p, a = UnitVector.from_angle(p_deg), UnitVector.from_angle(a_deg)
    if p.chord(-a) < 1e-3:
        return
    e1, e2 = orthonormal_frame(p.as_array())
    P = UnitVector.from_array(math.cos(r) * p.as_array()
                              + math.sin(r) * (math.cos(phi) * e1 + math.sin(phi) * e2))
    A = mechanism(P, p, a)
    assert A.chord(a) == pytest.approx(P.chord(p), abs=1e-12)
    back = mechanism_inverse(A, p, a)
    assert back.chord(P) < 1e-12


def test_mechanism_identity_cases():
    p, a = UnitVector.from_angle(20), UnitVector.from_angle(80)
    assert mechanism(p, p, a).chord(a) < 1e-15
    P = UnitVector.from_angle(21)
    assert mechanism(P, p, p) == P


def test_mechanism_orthogonal_selections_give_non_orthogonal_exact_settings(rng):
    m = UnitVector(1, 1, 1)
    axes = [UnitVector(1, 0, 0), UnitVector(0, 1, 0), UnitVector(0, 0, 1)]
    M = sample_cap(m, 0.02, rng)
    X = [mechanism(M, m, x) for x in axes]
    assert max(abs(X[0].dot(X[1])), abs(X[0].dot(X[2])), abs(X[1].dot(X[2]))) > 0


def test_mechanism_domain_errors():
    z = UnitVector(0, 0, 1)
    with pytest.raises(DomainError):
        mechanism(z, z, -z)
    with pytest.raises(DomainError):
        mechanism(-z, z, UnitVector(1, 0, 0))
    with pytest.raises(DomainError):
        mechanism_inverse(z, z, -z)


def test_vectorized_mechanism_matches_scalar(rng):
    p, a = UnitVector.from_angle(5), UnitVector.from_angle(100)
    P = np.stack([sample_cap(p, 0.02, rng).as_array() for _ in range(50)])
    A = mechanism_many(P, p.as_array(), a.as_array())
    for i in range(50):
        assert np.allclose(A[i], mechanism(P[i], p, a).as_array(), atol=1e-15)
    assert np.allclose(mechanism_inverse_many(A, p.as_array(), a.as_array()), P, atol=1e-14)


def test_preparation_sample_in_cap(desk, rng):
    ch = ExperimenterChoice.fixed(UnitVector.from_angle(30))
    for _ in range(100):
        P = sample_preparation_hv(ch, desk, rng)
        assert within_cap(P, ch.initial_selected, desk.delta)
    check_support(ch.initial_selected, ch.initial_selected, desk.delta, "P")
    with pytest.raises(DomainError):
        check_support(UnitVector.from_angle(40), ch.initial_selected, desk.delta, "P")


def test_sample_k_range_and_uniformity(rng):
    assert 1 <= sample_k(8, rng) <= 8
    k = sample_k_many(16, 160_000, rng)
    assert k.min() == 1 and k.max() == 16
    assert stats.chisquare(np.bincount(k)[1:]).pvalue > 1e-3


# admissible sets ------------------------------------------------------------

def _brute_force_admissible(A, b, params, kind):
    """Every grid point on every ring, filtered by the cap (independent of the windows)."""
    N, steps = params.N, params.azimuth_steps
    e1, e2 = orthonormal_frame(A.as_array())
    phi = 2 * np.pi * np.arange(steps) / steps
    keys = set()
    for n, c in enumerate(lattice_floats(N, kind), start=1):
        s = math.sqrt(max(0.0, 1 - c * c))
        pts = c * A.as_array() + s * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
        inside = np.linalg.norm(pts - b.as_array(), axis=1) < params.delta
        if s == 0.0:
            inside[1:] = False  # the point ring has one point
        keys.update((n, int(j)) for j in np.nonzero(inside)[0])
    return keys


@pytest.mark.parametrize("kind", ["single", "bell"])
@pytest.mark.parametrize("a_deg,b_deg", [(0, 60), (10, 95), (-30, 170), (45, 45.5)])
def test_admissible_list_matches_brute_force(kind, a_deg, b_deg, rng):
    params = ModelParams(N=256, delta=0.05)
    A = sample_cap(UnitVector.from_angle(a_deg), params.delta, rng)
    b = UnitVector.from_angle(b_deg)
    try:
        adm = admissible_exact_settings(A, b, b, params, kind)
    except InfeasibleError:
        assert _brute_force_admissible(A, b, params, kind) == set()
        return
    assert {p.key() for p in adm} == _brute_force_admissible(A, b, params, kind)
    for p in adm:
        assert p.constraint_holds()
        assert p.float_residual() < 1e-12
        assert p.exact.chord(b) < params.delta
        assert p.kind == kind
        pt = exact_pair_from_index(A, params.N, p.n, p.azimuth_index, params.azimuth_steps, kind)
        assert np.allclose(pt, p.exact.as_array(), atol=1e-14)


def test_vectorized_draw_uses_same_sets(desk, rng):
    b = UnitVector.from_angle(60)
    A = np.stack([sample_cap(UnitVector.from_angle(0), desk.delta, rng).as_array()
                  for _ in range(40)])
    draw = sample_admissible_many(A, b, desk, "single", rng)
    for i in range(40):
        adm = admissible_exact_settings(A[i], b, b, desk, "single")
        assert draw.set_size[i] == len(adm)
        assert (int(draw.n[i]), int(draw.azimuth_index[i])) in {p.key() for p in adm}


def test_vectorized_draw_is_uniform_over_the_set(desk, rng):
    b = UnitVector.from_angle(60)
    A = sample_cap(UnitVector.from_angle(0), desk.delta, rng)
    adm = admissible_exact_settings(A, b, b, desk, "single")
    index = {p.key(): i for i, p in enumerate(adm)}
    reps = 200 * len(adm)
    draw = sample_admissible_many(np.tile(A.as_array(), (reps, 1)), b, desk, "single", rng)
    counts = np.bincount([index[(int(n), int(j))] for n, j in zip(draw.n, draw.azimuth_index)],
                         minlength=len(adm))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_list_draw_returns_matching_initial_orientation(desk, rng):
    ch = ExperimenterChoice(UnitVector.from_angle(50), UnitVector.from_angle(60))
    A = UnitVector.from_angle(0)
    adm = admissible_exact_settings(A, ch.final_selected, ch.initial_selected, desk)
    M, pair = sample_measurement_hv(adm, ch, rng)
    assert mechanism(M, ch.initial_selected, ch.final_selected).chord(pair.exact) < 1e-12
    assert within_cap(M, ch.initial_selected, desk.delta)
    with pytest.raises(InfeasibleError):
        sample_measurement_hv([], ch, rng)


def test_bell_point_ring_is_the_antipode(rng):
    params = ModelParams(N=256, delta=0.05)
    B = sample_cap(UnitVector(0, 0, 1), params.delta, rng)
    adm = admissible_exact_settings(B, -UnitVector(0, 0, 1), -UnitVector(0, 0, 1), params, "bell")
    last = [p for p in adm if p.n == params.N // 2]
    assert len(last) == 1 and last[0].exact.chord(-B) < 1e-12


def test_infeasible_pole_reports_gap(desk):
    z = UnitVector(0, 0, 1)
    with pytest.raises(InfeasibleError, match="N=1024.*delta=0.02.*gap"):
        admissible_exact_settings(z, z, z, desk, "single")
    with pytest.raises(ParameterError):
        admissible_exact_settings(z, UnitVector.from_angle(60), z, ModelParams(N=100, delta=0.01))


def test_ring_windows_gap_sign(desk):
    z = np.array([0.0, 0.0, 1.0])
    w = ring_windows(z, z, desk.delta, desk.N, "single", desk.azimuth_steps)
    assert w.totals[0] == 0 and w.gap[0] > 0
    w = ring_windows(z, UnitVector.from_angle(60).as_array(), desk.delta, desk.N, "single",
                     desk.azimuth_steps)
    assert w.totals[0] > 0 and w.gap[0] <= 0
