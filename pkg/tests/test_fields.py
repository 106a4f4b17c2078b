import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import max_abs, rel_gap
from formprobe.fields import (FormField, GridSpec, Region, apply_R, apply_T,
                              complement_index, hodge_star, index_position,
                              insertion_sign, l2_inner, merge_sign,
                              multi_indices, norm, split_tangential_normal,
                              star_sign, wedge)
from formprobe.manufactured import random_band_limited, random_dyadic


# ---------------------------------------------------------------------------
# multi-index bookkeeping
# ---------------------------------------------------------------------------

def test_multi_index_order_is_lexicographic():
    assert multi_indices(3, 2) == ((1, 2), (1, 3), (2, 3))
    assert multi_indices(4, 0) == ((),)
    assert index_position(3, (1, 3)) == 1


def test_merge_sign_counts_inversions():
    assert merge_sign((1,), (2, 3)) == ((1, 2, 3), 1)
    assert merge_sign((2,), (1, 3)) == ((1, 2, 3), -1)
    assert merge_sign((2, 3), (1,)) == ((1, 2, 3), 1)
    assert merge_sign((1, 2), (2,)) is None


def test_insertion_sign():
    assert insertion_sign(1, (2, 3)) == 1
    assert insertion_sign(2, (1, 3)) == -1
    assert insertion_sign(4, (1, 2, 3)) == -1


def test_star_sign_matches_complement_parity():
    for dim in (2, 3, 4):
        for q in range(dim + 1):
            for mi in multi_indices(dim, q):
                comp = complement_index(mi, dim)
                assert star_sign(mi, dim) * star_sign(comp, dim) == \
                    (-1) ** (q * (dim - q))


# ---------------------------------------------------------------------------
# grid and regions
# ---------------------------------------------------------------------------

def test_gridspec_geometry():
    g = GridSpec(2, 1.0, 8)
    assert g.spacing == 0.25
    assert g.axis_coords()[0] == -1.0
    assert g.axis_coords()[4] == 0.0
    assert g.cell_volume == 0.25 ** 2


def test_gridspec_rejects_odd_points():
    with pytest.raises(ValueError):
        GridSpec(2, 1.0, 9)
    with pytest.raises(ValueError):
        GridSpec(0, 1.0, 8)
    with pytest.raises(ValueError):
        GridSpec(2, -1.0, 8)


def test_region_masks():
    g = GridSpec(2, 1.0, 16)
    ball = Region(g, "ball", radius=0.5)
    assert ball.mask()[8, 8]          # the origin
    assert not ball.mask()[0, 0]
    half = Region(g, "halfspace_lower")
    assert half.mask()[3, 0] and not half.mask()[3, 8]
    ann = Region(g, "annulus", radius=0.3, outer_radius=0.9)
    assert not ann.mask()[8, 8]
    with pytest.raises(ValueError):
        Region(g, "annulus", radius=0.9, outer_radius=0.3)
    with pytest.raises(ValueError):
        Region(g, "pentagon")


def test_formfield_shape_validation_and_immutability():
    g = GridSpec(2, 1.0, 8)
    e = FormField.zeros(g, 1)
    assert e.data.shape == (2, 8, 8)
    with pytest.raises(ValueError):
        e.data[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        FormField(g, 1, np.zeros((3, 8, 8), complex))


# ---------------------------------------------------------------------------
# wedge
# ---------------------------------------------------------------------------

def test_wedge_basis_covectors():
    g = GridSpec(2, 1.0, 8)
    dx1 = FormField.from_components(g, 1, {(1,): 1.0})
    dx2 = FormField.from_components(g, 1, {(2,): 1.0})
    assert np.all(wedge(dx1, dx2).component((1, 2)) == 1.0)
    assert np.all(wedge(dx2, dx1).component((1, 2)) == -1.0)


def test_wedge_rank_overflow_and_grid_mismatch():
    g = GridSpec(2, 1.0, 8)
    e = FormField.zeros(g, 1)
    with pytest.raises(ValueError):
        wedge(e, FormField.zeros(g, 2))
    with pytest.raises(ValueError):
        wedge(e, FormField.zeros(GridSpec(2, 1.0, 16), 1))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 4), st.integers(0, 4),
       st.integers(0, 10_000))
def test_wedge_graded_anticommutativity_exact_on_integer_data(dim, p, q, seed):
    if p + q > dim:
        p, q = p % (dim + 1), 0
    if p + q > dim:
        return
    g = GridSpec(dim, 1.0, 8)
    e = random_dyadic(g, p, seed, bits=12)
    f = random_dyadic(g, q, seed + 1, bits=12)
    sign = (-1) ** (p * q)
    assert np.array_equal(wedge(e, f).data, sign * wedge(f, e).data)


def test_wedge_anticommutativity_generic_fields_machine_level():
    g = GridSpec(3, 1.0, 16)
    e = random_band_limited(g, 1, 5, real=False)
    f = random_band_limited(g, 2, 6, real=False)
    assert rel_gap(wedge(e, f), wedge(f, e)) <= 1e-14


def test_wedge_against_multiindex_split_enumeration():
    # brute-force oracle: sum over all disjoint splits with merge signs
    g = GridSpec(3, 1.0, 8)
    e = random_band_limited(g, 1, 7, real=False)
    f = random_band_limited(g, 1, 8, real=False)
    product = wedge(e, f)
    for k_mi in multi_indices(3, 2):
        expected = np.zeros(g.shape, complex)
        for i_mi in multi_indices(3, 1):
            for j_mi in multi_indices(3, 1):
                merged = merge_sign(i_mi, j_mi)
                if merged is None or merged[0] != k_mi:
                    continue
                expected += merged[1] * e.component(i_mi) * f.component(j_mi)
        assert np.allclose(product.component(k_mi), expected, atol=1e-12)


# ---------------------------------------------------------------------------
# hodge star
# ---------------------------------------------------------------------------

def test_star_basis_examples_n3():
    g = GridSpec(3, 1.0, 8)
    dx1 = FormField.from_components(g, 1, {(1,): 1.0})
    dx2 = FormField.from_components(g, 1, {(2,): 1.0})
    s1 = hodge_star(dx1)
    assert np.all(s1.component((2, 3)) == 1.0)
    s2 = hodge_star(dx2)
    assert np.all(s2.component((1, 3)) == -1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(0, 4), st.integers(0, 10_000))
def test_double_star_identity_exact(dim, q, seed):
    q = q % (dim + 1)
    g = GridSpec(dim, 1.0, 8)
    e = random_dyadic(g, q, seed)
    sign = (-1) ** (q * (dim - q))
    assert np.array_equal(hodge_star(hodge_star(e)).data, sign * e.data)


# ---------------------------------------------------------------------------
# R and T
# ---------------------------------------------------------------------------

def test_apply_R_position_coordinates_pointwise():
    g = GridSpec(2, 4.0, 8)
    one = FormField.from_components(g, 0, {(): 1.0})
    re = apply_R(one, "position")
    # node with coordinates (1, 2)
    i = int(round((1.0 + 4.0) / g.spacing))
    j = int(round((2.0 + 4.0) / g.spacing))
    assert re.component((1,))[i, j] == pytest.approx(1.0)
    assert re.component((2,))[i, j] == pytest.approx(2.0)


def test_RR_and_TT_vanish_exactly_on_integer_data():
    for dim in (2, 3, 4):
        g = GridSpec(dim, 1.0, 16)
        for q in range(dim + 1):
            e = random_dyadic(g, q, seed=31 * q + dim)
            if q + 2 <= dim:
                assert max_abs(apply_R(apply_R(e))) == 0.0
            if q >= 2:
                assert max_abs(apply_T(apply_T(e))) == 0.0


def test_RT_plus_TR_is_radius_squared():
    for dim in (2, 3, 4):
        g = GridSpec(dim, 1.0, 16)
        for q in range(dim + 1):
            e = random_band_limited(g, q, seed=5 + q, real=False)
            parts = []
            if q < dim:
                parts.append(apply_T(apply_R(e)))
            if q > 0:
                parts.append(apply_R(apply_T(e)))
            total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
            assert rel_gap(total, e.scale_pointwise(g.radius_sq())) <= 1e-12


def test_R_T_adjoint_in_l2():
    g = GridSpec(3, 1.0, 16)
    for q in range(3):
        e = random_band_limited(g, q, seed=2 + q, real=False)
        h = random_band_limited(g, q + 1, seed=12 + q, real=False)
        lhs = l2_inner(apply_R(e), h)
        rhs = l2_inner(e, apply_T(h))
        assert abs(lhs - rhs) <= 1e-12 * norm(apply_R(e)) * norm(h)


def test_T_fiber_example_n2():
    # T(dx12) at the point (1, 2) comes out as -2 dx1 + 1 dx2
    g = GridSpec(2, 4.0, 8)
    h = FormField.from_components(g, 2, {(1, 2): 1.0})
    th = apply_T(h, "position")
    i = int(round(5.0 / g.spacing))
    j = int(round(6.0 / g.spacing))
    assert th.component((1,))[i, j] == pytest.approx(-2.0)
    assert th.component((2,))[i, j] == pytest.approx(1.0)


def test_rank_limits():
    g = GridSpec(2, 1.0, 8)
    with pytest.raises(ValueError):
        apply_R(FormField.zeros(g, 2))
    with pytest.raises(ValueError):
        apply_T(FormField.zeros(g, 0))


# ---------------------------------------------------------------------------
# tangential/normal split
# ---------------------------------------------------------------------------

def test_split_examples():
    g = GridSpec(3, 1.0, 8)
    e = FormField.from_components(g, 1, {(1,): 2.0, (3,): 5.0})
    tau, rho = split_tangential_normal(e)
    assert np.all(tau.component((1,)) == 2.0) and np.all(tau.component((3,)) == 0)
    assert np.all(rho.component((3,)) == 5.0) and np.all(rho.component((1,)) == 0)
    f = random_band_limited(g, 0, 3)
    tau0, rho0 = split_tangential_normal(f)
    assert np.array_equal(tau0.data, f.data) and max_abs(rho0) == 0.0


def test_split_is_idempotent_and_orthogonal():
    g = GridSpec(3, 1.0, 16)
    for q in range(4):
        e = random_band_limited(g, q, seed=q, real=False)
        tau, rho = split_tangential_normal(e)
        assert max_abs((tau + rho) - e) == 0.0
        assert l2_inner(tau, rho) == 0.0
        tau2, rho2 = split_tangential_normal(tau)
        assert np.array_equal(tau2.data, tau.data) and max_abs(rho2) == 0.0


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

def test_l2_inner_volume_normalization():
    g = GridSpec(2, 1.0, 16)
    one = FormField.from_components(g, 0, {(): 1.0})
    assert l2_inner(one, one) == pytest.approx(4.0)  # box volume (2L)^2


def test_l2_inner_orthogonal_covectors():
    g = GridSpec(2, 1.0, 16)
    e = FormField.from_components(g, 1, {(1,): 1.0})
    h = FormField.from_components(g, 1, {(2,): 1.0})
    assert l2_inner(e, h) == 0.0


def test_weighted_inner_refinement_oracle():
    # Gaussian bump with weight s=1 against a doubled-resolution quadrature
    values = {}
    for n in (64, 128):
        g = GridSpec(2, 3.0, n)
        r2 = g.radius_sq()
        f = FormField.from_components(g, 0, {(): np.exp(-2.0 * r2)})
        values[n] = l2_inner(f, f, weight_exponent=1.0).real
    assert values[64] == pytest.approx(values[128], rel=1e-6)


def test_inner_mismatch_errors():
    g = GridSpec(2, 1.0, 8)
    with pytest.raises(ValueError):
        l2_inner(FormField.zeros(g, 0), FormField.zeros(g, 1))
    with pytest.raises(ValueError):
        l2_inner(FormField.zeros(g, 0), FormField.zeros(GridSpec(2, 1.0, 16), 0))
