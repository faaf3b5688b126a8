"""Doubly warped product assembly, index splitting, degeneration."""

import numpy as np
import pytest

from finslerdwp.curvature import compute_bundle, spray
from finslerdwp.metrics import EuclideanMetric, MetricError, Warping
from finslerdwp.oracles import fd_partials_vector, f2_batch_evaluator
from finslerdwp.products import (
    DoublyWarpedProduct,
    reassemble_tensor,
    split_tensor,
)
from finslerdwp.jets import extract, lift_variable

from support import euclidean, make_dwp, randers, riemannian, draw_samples


def test_product_of_euclideans_is_a_sum():
    dwp = make_dwp(euclidean(), euclidean(), "unit")
    val = dwp.f_squared([0.0] * 4, [1.0, 0.0, 0.0, 2.0])
    assert val == pytest.approx(5.0)


def test_constant_warping_scales_the_factor():
    m1, m2 = randers(0), riemannian(1)
    dwp = DoublyWarpedProduct(
        m1,
        m2,
        Warping.from_string("1", 2, slot=0),
        Warping.from_string("3", 2, slot=1),
    )
    rng = np.random.default_rng(0)
    for x, y in draw_samples(dwp, rng, 20):
        x1, x2, y1, y2 = x[:2], x[2:], y[:2], y[2:]
        expected = 9.0 * float(m1.f_squared(list(x1), list(y1))) + 1.0 * float(
            m2.f_squared(list(x2), list(y2))
        )
        got = float(dwp.f_squared(list(x), list(y)))
        assert abs(got - expected) < 1e-14 * max(1.0, abs(expected))


def test_combined_equals_sum_of_weighted_summands():
    dwp = make_dwp(randers(0), randers(1), "proper")
    rng = np.random.default_rng(1)
    for x, y in draw_samples(dwp, rng, 20):
        x1, x2, y1, y2 = x[:2], x[2:], y[:2], y[2:]
        f1 = float(dwp.w1.value(list(x1)))
        f2v = float(dwp.w2.value(list(x2)))
        expected = f2v**2 * float(dwp.m1.f_squared(list(x1), list(y1))) + f1**2 * float(
            dwp.m2.f_squared(list(x2), list(y2))
        )
        got = float(dwp.f_squared(list(x), list(y)))
        assert abs(got - expected) < 1e-14 * max(1.0, abs(expected))


def test_low_dimension_factors_rejected():
    with pytest.raises(MetricError):
        DoublyWarpedProduct(
            EuclideanMetric(1),
            EuclideanMetric(2),
            Warping.from_string("1", 1, slot=0),
            Warping.from_string("1", 2, slot=1),
        )


def test_proper_flag_is_numeric():
    rng = np.random.default_rng(2)
    pts1 = [rng.uniform(-0.9, 0.9, size=2) for _ in range(10)]
    pts2 = [rng.uniform(-0.9, 0.9, size=2) for _ in range(10)]
    assert make_dwp(euclidean(), euclidean(), "proper").is_proper(pts1, pts2)
    assert not make_dwp(euclidean(), euclidean(), "constant").is_proper(pts1, pts2)
    # one-sided warping is a warped product, not proper
    semi = DoublyWarpedProduct(
        euclidean(),
        euclidean(),
        Warping.from_string("exp(0.2*x1)", 2, slot=0),
        Warping.from_string("1", 2, slot=1),
    )
    assert not semi.is_proper(pts1, pts2)


def test_jet_evaluation_matches_fd_on_proper_scenario():
    """All mixed partials of the combined F^2 through order 3 agree with
    the finite-difference oracle."""
    dwp = make_dwp(euclidean(), riemannian(1), "proper")
    rng = np.random.default_rng(3)
    (x, y), = draw_samples(dwp, rng, 1)
    d = 2 * dwp.dim
    xj = [lift_variable(x[i], i, d, 3) for i in range(dwp.dim)]
    yj = [lift_variable(y[i], dwp.dim + i, d, 3) for i in range(dwp.dim)]
    j = dwp.f_squared(xj, yj)
    fn = f2_batch_evaluator(dwp)
    pt = np.concatenate([x, y])

    rng_alpha = np.random.default_rng(4)
    alphas = []
    for total in (1, 2, 3):
        for _ in range(6):
            alpha = np.zeros(d, dtype=int)
            for _ in range(total):
                alpha[rng_alpha.integers(0, d)] += 1
            alphas.append(tuple(alpha))
    parts = fd_partials_vector(fn, pt[None, :], alphas)
    for alpha in alphas:
        ref = float(parts[alpha][0])
        got = extract(j, alpha)
        assert abs(got - ref) < 1e-6 * max(1.0, abs(ref), abs(got)), alpha


def test_split_tensor_counts_and_sizes():
    rng = np.random.default_rng(5)
    t = rng.standard_normal((4, 4, 4, 4))
    blocks = split_tensor(t, 2)
    assert len(blocks) == 16
    assert sum(b.size for b in blocks.values()) == 4**4


def test_identity_splits_into_identity_blocks():
    blocks = split_tensor(np.eye(4), 2)
    np.testing.assert_array_equal(blocks[(0, 0)], np.eye(2))
    np.testing.assert_array_equal(blocks[(1, 1)], np.eye(2))
    np.testing.assert_array_equal(blocks[(0, 1)], np.zeros((2, 2)))


def test_split_reassemble_round_trip():
    rng = np.random.default_rng(6)
    for rank in (1, 2, 3, 4):
        t = rng.standard_normal((5,) * rank)
        assert np.array_equal(reassemble_tensor(split_tensor(t, 2), 2, 3), t)


def test_unwarped_product_spray_decouples():
    """With f1 = f2 = 1 the combined spray's first block equals the spray
    of F1 alone at the matching sub-sample."""
    m1, m2 = randers(0), riemannian(1)
    dwp = make_dwp(m1, m2, "unit")
    rng = np.random.default_rng(7)
    for x, y in draw_samples(dwp, rng, 5):
        g_full = spray(dwp, (x, y))
        g1 = spray(m1, (x[:2], y[:2]))
        g2 = spray(m2, (x[2:], y[2:]))
        scale = max(1.0, np.max(np.abs(g_full)))
        assert np.max(np.abs(g_full[:2] - g1)) < 1e-10 * scale
        assert np.max(np.abs(g_full[2:] - g2)) < 1e-10 * scale


def test_block_index_bijection():
    dwp = make_dwp(euclidean(3), euclidean(2), "unit")
    for i in range(5):
        tag, local = dwp.to_local(i)
        assert dwp.to_global(tag, local) == i
