import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from isetsim.errors import DegeneracyError, ParameterError
from isetsim.geometry import (
    PhaseIndex,
    RationalCosine,
    Rotation,
    UnitVector,
    allowed_cosines,
    build_triangle,
    cap_angular_radius,
    cap_polar_cdf,
    lattice_floats,
    lattice_index,
    lattice_spacing,
    nearest_allowed,
    niven_rational_cosine,
    orthonormal_frame,
    sample_cap_many,
    special_rational_cosine,
    transport_many,
)

even_N = st.integers(2, 2048).map(lambda h: 2 * h)
unit = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(
    lambda v: sum(c * c for c in v) > 1e-2).map(lambda v: UnitVector(*v))


# lattices ---------------------------------------------------------------

def test_single_lattice_n8_values():
    assert [c.value for c in allowed_cosines(8, "single")] == [
        Fraction(3, 4), Fraction(1, 4), Fraction(-1, 4), Fraction(-3, 4)]


def test_bell_lattice_n8_values():
    assert [c.value for c in allowed_cosines(8, "bell")] == [
        Fraction(1, 2), Fraction(0), Fraction(-1, 2), Fraction(-1)]


@given(even_N, st.data())
def test_lattice_index_inverts_lattice_map(N, data):
    n = data.draw(st.integers(1, N // 2))
    for kind in ("single", "bell"):
        rc = RationalCosine.from_index(N, n, kind)
        oracle = 1 - Fraction(2 * n - 1, N // 2) if kind == "single" else 1 - Fraction(4 * n, N)
        assert rc.value == oracle
        assert lattice_index(rc.value, N, kind) == n
        assert lattice_floats(N, kind)[n - 1] == pytest.approx(float(oracle), abs=1e-15)


def test_lattice_index_rejects_off_lattice_and_floats():
    assert lattice_index(Fraction(1, 3), 8, "single") is None
    assert lattice_index(1, 8, "single") is None
    assert lattice_index(1, 8, "bell") is None  # n = 0 is excluded
    with pytest.raises(TypeError):
        lattice_index(0.75, 8, "single")


def test_lattice_basics():
    assert lattice_spacing(1024) == Fraction(1, 256)
    assert len(allowed_cosines(1024)) == 512
    with pytest.raises(ParameterError):
        allowed_cosines(7)
    with pytest.raises(ParameterError):
        RationalCosine(5, 8, "single", 1)
    with pytest.raises(ParameterError):
        RationalCosine.from_index(8, 5, "single")
    with pytest.raises(ParameterError):
        RationalCosine.from_index(8, 1, "triplet")
    assert str(RationalCosine.from_index(8, 1)) == "3/4"


@given(even_N, st.floats(-1, 1, allow_nan=False), st.sampled_from(["single", "bell"]))
@settings(max_examples=200)
def test_nearest_allowed_matches_brute_force(N, t, kind):
    got = nearest_allowed(t, N, kind)
    exact = Fraction(t)
    dists = [(abs(c.value - exact), -c.n) for c in allowed_cosines(N, kind)]
    best = min(dists)
    assert (abs(got.value - exact), -got.n) == best


def test_nearest_allowed_tie_goes_to_larger_n():
    # midpoint between 3/4 (n=1) and 1/4 (n=2)
    assert nearest_allowed(0.5, 8, "single").n == 2
    with pytest.raises(ParameterError):
        nearest_allowed(1.5, 8)


def test_phase_index():
    assert PhaseIndex(2, 8).turns == Fraction(1, 4)
    assert PhaseIndex(0, 8).value == 0.0
    with pytest.raises(ParameterError):
        PhaseIndex(9, 8)


# Niven ------------------------------------------------------------------

def _oracle_rational_cos(p, q):
    """High-precision value followed by a continued-fraction rationality probe."""
    with mpmath.workdps(80):
        v = mpmath.cos(mpmath.pi * p / q)
        approx = Fraction(mpmath.nstr(v, 70)).limit_denominator(10**6)
        return abs(v - mpmath.mpf(approx.numerator) / approx.denominator) < mpmath.mpf(10) ** -50


def test_niven_classifier_matches_oracle_q_le_50():
    mismatches = [(p, q) for q in range(1, 51) for p in range(0, 2 * q + 1)
                  if niven_rational_cosine(p, q) != _oracle_rational_cos(p, q)]
    assert mismatches == []


def test_niven_examples():
    assert niven_rational_cosine(1, 3)
    assert niven_rational_cosine(2, 4)
    assert not niven_rational_cosine(1, 5)
    assert niven_rational_cosine(-1, -2)
    with pytest.raises(ParameterError):
        niven_rational_cosine(1, 0)
    assert special_rational_cosine(Fraction(-1, 2))
    assert not special_rational_cosine(RationalCosine.from_index(8, 1))


# vectors and rotations ----------------------------------------------------

def test_unit_vector_normalizes_and_angles():
    v = UnitVector(3.0, 0.0, 4.0)
    assert v.to_list() == pytest.approx([0.6, 0.0, 0.8])
    assert UnitVector.from_angle(90).to_list() == pytest.approx([1, 0, 0], abs=1e-15)
    assert UnitVector.from_spherical(0.0, 1.0).z == 1.0
    assert (-v).z == pytest.approx(-0.8)
    with pytest.raises(ParameterError):
        UnitVector(0, 0, 0)


@given(unit, unit, unit)
def test_transport_is_an_isometry_mapping_frm_to_to(v, a, b):
    if a.chord(-b) < 1e-3:
        return
    R = Rotation(a, b)
    assert np.allclose(R(a).as_array(), b.as_array(), atol=1e-12)
    assert R(v).chord(R(a)) == pytest.approx(v.chord(a), abs=1e-12)
    assert np.allclose(R.inverse()(R(v)).as_array(), v.as_array(), atol=1e-12)
    M = R.matrix
    assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(M) == pytest.approx(1.0)
    assert R.angle == pytest.approx(math.acos(max(-1, min(1, a.dot(b)))), abs=1e-7)


def test_transport_fixes_the_axis():
    a, b = UnitVector.from_angle(10), UnitVector.from_angle(70)
    axis = np.cross(a.as_array(), b.as_array())
    axis /= np.linalg.norm(axis)
    assert np.allclose(transport_many(axis, a.as_array(), b.as_array()), axis)


def test_rotation_antipodal_raises():
    with pytest.raises(DegeneracyError):
        Rotation(UnitVector(0, 0, 1), UnitVector(0, 0, -1))


@given(unit)
def test_orthonormal_frame(a):
    e1, e2 = orthonormal_frame(a.as_array())
    F = np.stack([e1, e2, a.as_array()])
    assert np.allclose(F @ F.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(F) == pytest.approx(1.0)


# caps ----------------------------------------------------------------

def test_cap_samples_inside_and_uniform(rng):
    c = UnitVector.from_angle(33)
    delta = 0.05
    pts = sample_cap_many(c, delta, 20000, rng)
    assert np.all(np.linalg.norm(pts - c.as_array(), axis=1) < delta)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    theta = np.arccos(np.clip(pts @ c.as_array(), -1, 1))
    assert theta.max() <= cap_angular_radius(delta)
    ks = stats.kstest(theta, lambda t: cap_polar_cdf(t, delta))
    assert ks.pvalue > 1e-3
    e1, e2 = orthonormal_frame(c.as_array())
    phi = np.mod(np.arctan2(pts @ e2, pts @ e1), 2 * np.pi)
    assert stats.kstest(phi / (2 * np.pi), "uniform").pvalue > 1e-3


def test_cap_bias_keeps_support_and_shifts_mean(rng):
    c = UnitVector(0, 0, 1)
    toward = UnitVector(1, 0, 0)
    pts = sample_cap_many(c, 0.05, 20000, rng, bias_toward=toward, bias_weight=1.0)
    assert np.all(np.linalg.norm(pts - c.as_array(), axis=1) < 0.05)
    assert pts[:, 0].mean() > 0.005
    with pytest.raises(ParameterError):
        sample_cap_many(c, 0.0, 10, rng)


# triangles ----------------------------------------------------------------

@given(unit, unit, unit)
def test_triangle_law_of_cosines(A, B, C):
    try:
        tri = build_triangle(A, B, C)
    except DegeneracyError:
        return
    if min(tri.side_angles()) < 1e-3 or max(tri.side_angles()) > math.pi - 1e-3:
        return
    assert tri.law_of_cosines_residual() < 1e-8


def test_degenerate_triangle_names_pair():
    a = UnitVector(0, 0, 1)
    with pytest.raises(DegeneracyError, match="A and C"):
        build_triangle(a, UnitVector(1, 0, 0), a)
    with pytest.raises(DegeneracyError, match="antipodal"):
        build_triangle(a, -a, UnitVector(1, 0, 0))


def test_octant_triangle_right_angles():
    tri = build_triangle(UnitVector(1, 0, 0), UnitVector(0, 1, 0), UnitVector(0, 0, 1))
    assert [tri.alpha, tri.beta, tri.gamma] == pytest.approx([math.pi / 2] * 3)
