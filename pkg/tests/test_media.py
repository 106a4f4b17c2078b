import numpy as np
import pytest

from conftest import max_abs, rel_gap
from formprobe.fields import (FormField, GridSpec, l2_inner, norm,
                              split_tangential_normal)
from formprobe.manufactured import random_band_limited, random_dense_media
from formprobe.media import (AdmissibilityError, make_transformation,
                             reconstruct_from_split, reflected_transform,
                             scalar_catalog, transported_transform,
                             verify_decay)


def test_identity_transformation():
    g = GridSpec(2, 1.0, 16)
    eps = make_transformation(g, 1, "identity")
    assert eps.report.min_rayleigh == 1.0
    e = random_band_limited(g, 1, 3)
    assert eps.apply(e) is e


def test_scalar_gauss_well_admissibility():
    g = GridSpec(2, 3.0, 32)
    eps = scalar_catalog(g, "gauss_well", amplitude=1.0, width=1.0)
    assert eps.report.min_rayleigh >= 1.0
    assert eps.report.symmetric


def test_positivity_rejection_with_worst_node():
    g = GridSpec(2, 1.0, 8)
    # one node carries a symmetric perturbation with eigenvalue -1.1,
    # putting an eigenvalue of the full matrix at -0.1
    hat = np.zeros((2, 2) + g.shape)
    theta = 0.7
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    bad = rot @ np.diag([-1.1, 0.0]) @ rot.T
    hat[:, :, 3, 5] = bad
    with pytest.raises(AdmissibilityError) as err:
        make_transformation(g, 1, "dense", hat=hat)
    assert err.value.report.worst_node == (3, 5)
    assert err.value.report.min_rayleigh == pytest.approx(-0.1, abs=1e-12)


def test_symmetry_rejection():
    g = GridSpec(2, 1.0, 8)
    hat = np.zeros((2, 2) + g.shape)
    hat[0, 1] = 0.1
    with pytest.raises(AdmissibilityError, match="symmetry"):
        make_transformation(g, 1, "dense", hat=hat)


def test_apply_inverse_roundtrip_scalar_and_dense():
    g = GridSpec(2, 3.0, 16)
    e = random_band_limited(g, 1, 5, real=False)
    scalar = scalar_catalog(g, "gauss_well", amplitude=1.0, width=1.0)
    assert rel_gap(scalar.apply_inverse(scalar.apply(e)), e) <= 1e-12
    dense = random_dense_media(g, 1, 7, amplitude=0.5)
    assert rel_gap(dense.apply_inverse(dense.apply(e)), e) <= 1e-12


def test_symmetric_pairing():
    g = GridSpec(2, 3.0, 16)
    e = random_band_limited(g, 1, 11, real=False)
    h = random_band_limited(g, 1, 13, real=False)
    for eps in (scalar_catalog(g, "gauss_well"),
                random_dense_media(g, 1, 17, amplitude=0.5)):
        lhs = l2_inner(eps.apply(e), h)
        rhs = l2_inner(e, eps.apply(h))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))


def test_rank_binding_enforced():
    g = GridSpec(2, 1.0, 8)
    dense = random_dense_media(g, 1, 3)
    with pytest.raises(ValueError):
        dense.apply(FormField.zeros(g, 2))


# ---------------------------------------------------------------------------
# split reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_identity_material():
    g = GridSpec(3, 1.0, 8)
    e = random_band_limited(g, 2, 3, real=False)
    tau, rho = split_tangential_normal(e)
    eps = make_transformation(g, 2, "identity")
    rebuilt = reconstruct_from_split(tau, rho, eps)
    assert rel_gap(rebuilt, e) == 0.0


@pytest.mark.parametrize("rank", (0, 1, 2, 3))
def test_reconstruct_roundtrip_random_media(rank):
    g = GridSpec(3, 1.0, 12)
    e = random_band_limited(g, rank, 5 + rank, real=False)
    eps = random_dense_media(g, rank, 31 * (rank + 1), amplitude=0.5)
    tau, _ = split_tangential_normal(e)
    g_rho = split_tangential_normal(eps.apply(e))[1]
    rebuilt = reconstruct_from_split(tau, g_rho, eps)
    assert rel_gap(rebuilt, e) <= 1e-10


def test_reconstruct_top_rank_is_full_inverse():
    # every index of a top-rank form contains N: the solve is a full inverse
    g = GridSpec(2, 1.0, 12)
    e = random_band_limited(g, 2, 7, real=False)
    eps = random_dense_media(g, 2, 9, amplitude=0.5)
    tau, _ = split_tangential_normal(e)
    assert max_abs(tau) == 0.0
    rebuilt = reconstruct_from_split(tau, eps.apply(e), eps)
    assert rel_gap(rebuilt, eps.apply_inverse(eps.apply(e))) <= 1e-12


def test_singular_normal_block_reported():
    g = GridSpec(2, 1.0, 8)
    hat = np.zeros((2, 2) + g.shape)
    hat[1, 1, 2, 2] = -1.0   # kills the (2,) fiber entry at one node
    eps = make_transformation(g, 1, "dense", hat=hat, positivity_floor=-10.0)
    rhs = random_band_limited(g, 1, 3)
    with pytest.raises(AdmissibilityError, match="singular"):
        eps.solve_rho_block(rhs)


# ---------------------------------------------------------------------------
# transport under the reflection and signed permutations
# ---------------------------------------------------------------------------

def test_reflection_fixes_identity():
    g = GridSpec(3, 1.0, 8)
    for q in range(4):
        nc = len(FormField.zeros(g, q).data)
        dense_id = make_transformation(g, q, "dense",
                                       hat=np.zeros((nc, nc) + g.shape))
        refl = reflected_transform(dense_id, q)
        assert np.abs(refl.hat).max() == 0.0


def test_reflection_moves_scalar_coefficient():
    g = GridSpec(2, 2.0, 16)
    x1, x2 = g.coord_fields()
    hat = np.exp(-((x1 - 0.3) ** 2) - (x2 - 0.5) ** 2) * 0.5
    hat = np.broadcast_to(hat, g.shape).copy()
    eps = make_transformation(g, None, "scalar", mu_hat=hat)
    moved = reflected_transform(eps, 0)
    n = g.points
    idx = (-np.arange(n)) % n
    assert np.allclose(moved.hat, hat[:, idx], atol=1e-14)


def test_reflection_is_involution_and_preserves_admissibility():
    g = GridSpec(2, 1.0, 12)
    eps = random_dense_media(g, 1, 3, amplitude=0.4)
    refl = reflected_transform(eps, 1)
    assert refl.report.min_rayleigh > 0
    twice = reflected_transform(refl, 1)
    assert np.abs(twice.hat - eps.hat).max() <= 1e-12


def test_axis_swap_transport():
    g = GridSpec(2, 1.0, 12)
    eps = random_dense_media(g, 1, 5, amplitude=0.4)
    swapped = transported_transform(eps, 1, (2, 1), (1, 1))
    assert swapped.report.min_rayleigh > 0
    back = transported_transform(swapped, 1, (2, 1), (1, 1))
    assert np.abs(back.hat - eps.hat).max() <= 1e-12
    with pytest.raises(ValueError):
        transported_transform(eps, 1, (1, 1), (1, 1))


# ---------------------------------------------------------------------------
# decay classes
# ---------------------------------------------------------------------------

def test_gauss_well_is_second_kind_for_every_tau():
    g = GridSpec(2, 3.0, 48)
    for tau in (0.5, 1.0, 3.0):
        eps = scalar_catalog(g, "gauss_well", amplitude=1.0, width=1.0, tau=tau)
        report = verify_decay(eps)
        assert report["consistent"], report


def test_radial_power_decay_consistent_at_declared_tau():
    g = GridSpec(2, 3.0, 48)
    eps = scalar_catalog(g, "radial_power", amplitude=1.0, tau=2.0)
    report = verify_decay(eps)
    assert report["consistent"], report


def test_identity_decay_trivially_consistent():
    g = GridSpec(2, 1.0, 8)
    eps = make_transformation(g, None, "identity", tau=1.0)
    assert verify_decay(eps)["consistent"]
