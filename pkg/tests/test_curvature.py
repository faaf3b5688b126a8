"""Curvature engine: definitions against hand oracles and finite
differences, symmetry and Euler-contraction identities, Riemannian
collapse."""

import numpy as np
import pytest

from finslerdwp.curvature import (
    AdmissibilityError,
    TangentSample,
    angular_metric,
    berwald,
    cartan_and_mean,
    compute_bundle,
    douglas,
    dually_flat_residual,
    fundamental_tensor,
    landsberg_and_mean,
    max_norm,
    spray,
)
from finslerdwp.metrics import DiagonalRiemannianMetric, EuclideanMetric
from finslerdwp.oracles import FdParams, oracle_tensors

from support import draw_samples, euclidean, make_dwp, quartic, randers, riemannian

EUCLID = euclidean()
RIEM_X2 = DiagonalRiemannianMetric.from_strings(["1", "x1^2"])
RANDERS = randers(0)


def pts_of(samples):
    return np.array([np.concatenate([x, y]) for x, y in samples])


# ---------------------------------------------------------------------------
# fundamental tensor
# ---------------------------------------------------------------------------


def test_fundamental_euclidean_is_identity():
    g, g_inv = fundamental_tensor(EUCLID, ([0.0, 0.0], [1.0, 2.0]))
    np.testing.assert_allclose(g, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(g_inv, np.eye(2), atol=1e-14)


def test_fundamental_riemannian_diag_ignores_fiber():
    for y in ([1.0, 1.0], [0.3, -2.0]):
        g, _ = fundamental_tensor(RIEM_X2, ([2.0, 0.1], y))
        np.testing.assert_allclose(g, np.diag([1.0, 4.0]), atol=1e-12)


def test_fundamental_randers_matches_fd_hessian():
    rng = np.random.default_rng(0)
    samples = draw_samples(RANDERS, rng, 5)
    fd = oracle_tensors(RANDERS, pts_of(samples), which={"g"})["g"]
    for p, s in enumerate(samples):
        g, _ = fundamental_tensor(RANDERS, s)
        assert np.max(np.abs(g - fd[p])) < 1e-6 * max(1.0, np.max(np.abs(g)))


def test_nonconvex_sample_raises_admissibility_error():
    from finslerdwp.metrics import RandersMetric

    bad = RandersMetric.from_strings(["1", "1"], ["1.4", "0"])
    with pytest.raises(AdmissibilityError):
        fundamental_tensor(bad, ([0.0, 0.0], [-1.0, 0.05]))


def test_zero_fiber_rejected():
    with pytest.raises(AdmissibilityError):
        TangentSample(np.zeros(2), np.zeros(2))


# ---------------------------------------------------------------------------
# Cartan torsion
# ---------------------------------------------------------------------------


def test_cartan_vanishes_for_riemannian_families():
    rng = np.random.default_rng(1)
    for metric in (EUCLID, RIEM_X2, riemannian(0)):
        for s in draw_samples(metric, rng, 4):
            c, mean = cartan_and_mean(metric, s)
            assert max_norm(c) < 1e-12
            assert max_norm(mean) < 1e-12


def test_cartan_euler_contraction():
    rng = np.random.default_rng(2)
    for metric in (RANDERS, quartic()):
        for x, y in draw_samples(metric, rng, 10):
            c, _ = cartan_and_mean(metric, (x, y))
            contraction = np.einsum("i,ijk->jk", y, c)
            assert np.max(np.abs(contraction)) < 1e-10 * max(1e-30, max_norm(c))


def test_cartan_matches_fd_third_derivative():
    rng = np.random.default_rng(3)
    samples = draw_samples(RANDERS, rng, 5)
    fd = oracle_tensors(RANDERS, pts_of(samples), which={"C"})["C"]
    for p, s in enumerate(samples):
        c, _ = cartan_and_mean(RANDERS, s)
        assert np.max(np.abs(c - fd[p])) < 1e-5 * max(1.0, max_norm(c))


# ---------------------------------------------------------------------------
# angular metric
# ---------------------------------------------------------------------------


def test_angular_euclidean_along_axis():
    b = compute_bundle(EUCLID, ([0.0, 0.0], [1.0, 0.0]), tensors={"h"})
    np.testing.assert_allclose(b.angular, np.diag([0.0, 1.0]), atol=1e-14)


def test_angular_annihilates_fiber_and_has_corank_one():
    rng = np.random.default_rng(4)
    for metric in (RANDERS, quartic(), make_dwp(randers(0), riemannian(1))):
        for x, y in draw_samples(metric, rng, 17):
            b = compute_bundle(metric, (x, y), tensors={"h"})
            h = angular_metric(b)
            assert np.max(np.abs(h @ y)) < 1e-12 * max(1.0, max_norm(h))
            eig = np.sort(np.linalg.eigvalsh(h))
            assert abs(eig[0]) < 1e-10  # the kernel direction
            assert eig[1] > 1e-8  # all transverse directions metric


# ---------------------------------------------------------------------------
# spray
# ---------------------------------------------------------------------------


def test_spray_vanishes_without_base_dependence():
    rng = np.random.default_rng(5)
    for metric in (EUCLID, quartic()):
        for s in draw_samples(metric, rng, 5):
            assert max_norm(spray(metric, s)) < 1e-12


def test_spray_against_hand_christoffel():
    """For F^2 = (y1)^2 + (x1)^2 (y2)^2: Gamma^1_22 = -x1, Gamma^2_12 = 1/x1,
    so at x1 = 2, y = (1, 1): G^1 = -1, G^2 = 0.5."""
    g = spray(RIEM_X2, ([2.0, 0.0], [1.0, 1.0]))
    np.testing.assert_allclose(g, [-1.0, 0.5], atol=1e-11)


def test_spray_is_two_homogeneous():
    rng = np.random.default_rng(6)
    for metric in (RANDERS, make_dwp(randers(0), euclidean(), "proper")):
        for x, y in draw_samples(metric, rng, 5):
            g1 = spray(metric, (x, y))
            g2 = spray(metric, (x, 2.0 * y))
            assert np.max(np.abs(g2 - 4.0 * g1)) < 1e-10 * max(1.0, np.max(np.abs(g2)))


# ---------------------------------------------------------------------------
# Berwald and mean Berwald
# ---------------------------------------------------------------------------


def test_berwald_vanishes_for_riemannian_metrics():
    rng = np.random.default_rng(7)
    for metric in (RIEM_X2, riemannian(0), make_dwp(riemannian(0), euclidean(), "proper")):
        for s in draw_samples(metric, rng, 3):
            b, e = berwald(metric, s)
            assert max_norm(b) < 1e-9
            assert max_norm(e) < 1e-9


def test_berwald_nonzero_for_randers():
    rng = np.random.default_rng(8)
    found = 0.0
    for s in draw_samples(RANDERS, rng, 3):
        b, _ = berwald(RANDERS, s)
        found = max(found, max_norm(b))
    assert found > 1e-4


def test_berwald_euler_contraction():
    rng = np.random.default_rng(9)
    for metric in (RANDERS, make_dwp(randers(0), randers(1), "proper")):
        for x, y in draw_samples(metric, rng, 10):
            b, e = berwald(metric, (x, y))
            scale = max(1e-30, max_norm(b))
            assert np.max(np.abs(np.einsum("ijkl,l->ijk", b, y))) < 1e-8 * scale
            assert np.max(np.abs(e @ y)) < 1e-8 * scale


# ---------------------------------------------------------------------------
# Douglas
# ---------------------------------------------------------------------------


def test_douglas_vanishes_for_euclidean_and_riemannian():
    rng = np.random.default_rng(10)
    for metric in (EUCLID, riemannian(0)):
        for s in draw_samples(metric, rng, 3):
            bundle = compute_bundle(metric, s, tensors={"D"})
            assert max_norm(douglas(bundle)) < 1e-9


def test_douglas_fiber_contraction_vanishes():
    rng = np.random.default_rng(11)
    for x, y in draw_samples(RANDERS, rng, 5):
        bundle = compute_bundle(RANDERS, (x, y), tensors={"D", "B", "E"})
        d = douglas(bundle)
        contraction = np.einsum("ijkl,l->ijk", d, y)
        assert np.max(np.abs(contraction)) < 1e-7 * max(1e-30, max_norm(d))


# ---------------------------------------------------------------------------
# Landsberg and mean Landsberg
# ---------------------------------------------------------------------------


def test_landsberg_zero_for_berwald_metrics():
    rng = np.random.default_rng(12)
    for metric in (EUCLID, RIEM_X2, quartic()):
        for s in draw_samples(metric, rng, 3):
            bundle = compute_bundle(metric, s, tensors={"B", "L", "J"})
            l_tensor, j_vec = landsberg_and_mean(bundle)
            assert max_norm(l_tensor) < 1e-9
            assert max_norm(j_vec) < 1e-9


def test_landsberg_fiber_contraction():
    rng = np.random.default_rng(13)
    for x, y in draw_samples(RANDERS, rng, 10):
        bundle = compute_bundle(RANDERS, (x, y), tensors={"B", "L", "J"})
        l_tensor, _ = landsberg_and_mean(bundle)
        contraction = np.einsum("i,ijk->jk", y, l_tensor)
        assert np.max(np.abs(contraction)) < 1e-9 * max(1e-30, max_norm(l_tensor))


# ---------------------------------------------------------------------------
# dually flat residual
# ---------------------------------------------------------------------------


def test_dually_flat_for_base_independent_metrics():
    rng = np.random.default_rng(14)
    for metric in (EUCLID, quartic()):
        for s in draw_samples(metric, rng, 5):
            assert max_norm(dually_flat_residual(metric, s)) < 1e-12


def test_dually_flat_violated_by_nonconstant_warping():
    dwp = make_dwp(quartic(), quartic(), "proper")
    rng = np.random.default_rng(15)
    worst = 0.0
    for s in draw_samples(dwp, rng, 5):
        worst = max(worst, max_norm(dually_flat_residual(dwp, s)))
    assert worst > 1e-4


# ---------------------------------------------------------------------------
# invariant suite over the bundle
# ---------------------------------------------------------------------------


def assert_bundle_identities(bundle, y):
    tol_sym = 1e-9
    tol_euler = 1e-7
    g, c, h = bundle.g, bundle.cartan, bundle.angular
    b, e, d = bundle.berwald, bundle.mean_berwald, bundle.douglas
    l_tensor = bundle.landsberg

    def sym_defect(t, axes_groups):
        if t is None:
            return 0.0
        worst = 0.0
        base = max(1e-30, max_norm(t))
        for axes in axes_groups:
            worst = max(worst, np.max(np.abs(t - np.swapaxes(t, *axes))) / base)
        return worst

    assert sym_defect(g, [(0, 1)]) < tol_sym
    assert sym_defect(e, [(0, 1)]) < tol_sym
    assert sym_defect(h, [(0, 1)]) < tol_sym
    assert sym_defect(c, [(0, 1), (1, 2)]) < tol_sym
    assert sym_defect(l_tensor, [(0, 1), (1, 2)]) < tol_sym
    assert sym_defect(b, [(1, 2), (2, 3)]) < tol_sym
    assert sym_defect(d, [(1, 2), (2, 3)]) < tol_sym

    def rel(t, contraction):
        return np.max(np.abs(contraction)) / max(1e-30, max_norm(t))

    assert rel(c, np.einsum("i,ijk->jk", y, c)) < tol_euler or max_norm(c) < 1e-12
    assert rel(h, h @ y) < tol_euler
    assert rel(b, np.einsum("ijkl,l->ijk", b, y)) < tol_euler or max_norm(b) < 1e-12
    assert rel(e, e @ y) < tol_euler or max_norm(e) < 1e-12
    assert (
        rel(l_tensor, np.einsum("i,ijk->jk", y, l_tensor)) < tol_euler
        or max_norm(l_tensor) < 1e-12
    )
    assert rel(d, np.einsum("ijkl,l->ijk", d, y)) < tol_euler or max_norm(d) < 1e-12


def test_identity_suite_on_mixed_scenarios():
    rng = np.random.default_rng(16)
    metrics = [
        RANDERS,
        quartic(),
        make_dwp(randers(0), euclidean(), "proper"),
        make_dwp(randers(0), randers(1), "constant"),
    ]
    for metric in metrics:
        for x, y in draw_samples(metric, rng, 6):
            bundle = compute_bundle(metric, (x, y))
            assert_bundle_identities(bundle, y)


def test_riemannian_collapse_of_all_torsions():
    """Quadratic F^2 forces C, I, B, E, D, L, J below 1e-9."""
    rng = np.random.default_rng(17)
    metric = make_dwp(riemannian(0), riemannian(1), "proper")
    for s in draw_samples(metric, rng, 4):
        bundle = compute_bundle(metric, s)
        for name in (
            "cartan",
            "mean_cartan",
            "berwald",
            "mean_berwald",
            "douglas",
            "landsberg",
            "mean_landsberg",
        ):
            assert max_norm(getattr(bundle, name)) < 1e-9, name


# ---------------------------------------------------------------------------
# full finite-difference cross-check on one Randers sample
# ---------------------------------------------------------------------------


def test_full_oracle_agreement_on_a_proper_product():
    from finslerdwp.oracles import ORACLE_FLOORS, relative_deviation
    from support import draw_oracle_samples

    metric = make_dwp(randers(0), randers(1), "proper")
    rng = np.random.default_rng(18)
    samples = draw_oracle_samples(metric, rng, 4)
    pts = pts_of(samples)
    fd = oracle_tensors(metric, pts, which={"g", "C", "G", "B", "E", "D", "L", "J"})
    bundles = [compute_bundle(metric, s) for s in samples]
    for name, attr in [
        ("g", "g"),
        ("C", "cartan"),
        ("G", "spray"),
        ("B", "berwald"),
        ("E", "mean_berwald"),
        ("D", "douglas"),
        ("L", "landsberg"),
        ("J", "mean_landsberg"),
    ]:
        jet_val = np.array([getattr(b, attr) for b in bundles])
        dev = relative_deviation(jet_val, fd[name], ORACLE_FLOORS[name])
        assert dev < (1e-3 if name == "D" else 1e-4), (name, dev)
