"""Shared scenario builders and samplers for the test suite."""

import numpy as np

from finslerdwp.metrics import (
    DiagonalRiemannianMetric,
    EuclideanMetric,
    QuarticMinkowskiMetric,
    RandersMetric,
    Warping,
)
from finslerdwp.products import DoublyWarpedProduct


def euclidean(n=2):
    return EuclideanMetric(n)


def riemannian(slot=0, n=2):
    # positive, x-dependent diagonal coefficients
    names = ["1 + 0.5*{b}1^2", "1.5 + 0.3*{b}2^2", "1 + 0.2*{b}1^2"]
    b = "x" if slot == 0 else "u"
    return DiagonalRiemannianMetric.from_strings(
        [names[i].format(b=b) for i in range(n)], slot=slot
    )


def randers(slot=0, n=2, scale=0.3):
    b = "x" if slot == 0 else "u"
    alpha = ["1", f"1 + 0.4*{b}1^2", "1"][:n]
    beta = [f"{scale} + 0.1*{b}{min(2, n)}", "0.1", "0"][:n]
    return RandersMetric.from_strings(alpha, beta, slot=slot)


def quartic(n=2):
    return QuarticMinkowskiMetric(n, tuple([1.3] + [1.0] * (n - 1)))


def warpings(kind, n1=2, n2=2):
    """(f1, f2) pair: 'unit', 'constant' or 'proper'."""
    if kind == "unit":
        return (
            Warping.from_string("1", n1, slot=0),
            Warping.from_string("1", n2, slot=1),
        )
    if kind == "constant":
        return (
            Warping.from_string("1.2", n1, slot=0),
            Warping.from_string("0.8", n2, slot=1),
        )
    if kind == "proper":
        return (
            Warping.from_string("exp(0.2*x1)", n1, slot=0),
            Warping.from_string("1 + 0.1*u1^2", n2, slot=1),
        )
    raise ValueError(kind)


def make_dwp(m1, m2, kind="proper"):
    w1, w2 = warpings(kind, m1.dim, m2.dim)
    return DoublyWarpedProduct(m1, m2, w1, w2)


def scenario_matrix(kind="proper"):
    """The six-family scenario matrix used by the acceptance criteria."""
    return {
        "euclidean_x_euclidean": make_dwp(euclidean(), euclidean(), kind),
        "riemannian_x_euclidean": make_dwp(riemannian(0), euclidean(), kind),
        "randers_x_euclidean": make_dwp(randers(0), euclidean(), kind),
        "randers_x_randers": make_dwp(randers(0), randers(1), kind),
        "minkowski_x_minkowski": make_dwp(quartic(), quartic(), kind),
        "riemannian_x_riemannian": make_dwp(riemannian(0), riemannian(1), kind),
    }


def draw_samples(metric, rng, count, box=0.85, norms=(0.5, 1.0, 2.0), max_draws=1000):
    """Admissible tangent samples: base uniform in the shrunken chart box,
    fiber uniform on the sphere rescaled through the norm cycle."""
    n = metric.dim
    out = []
    draws = 0
    while len(out) < count and draws < max_draws:
        draws += 1
        x = rng.uniform(-box, box, size=n)
        y = rng.standard_normal(n)
        if np.linalg.norm(y) < 1e-3:
            continue
        if hasattr(metric, "n1"):
            # keep both factor fibers well away from their slit origins
            y1, y2 = y[: metric.n1], y[metric.n1 :]
            if np.linalg.norm(y1) < 0.3 or np.linalg.norm(y2) < 0.3:
                continue
        y = y / np.linalg.norm(y) * norms[len(out) % len(norms)]
        if metric.admissible(x, y):
            out.append((x, y))
    if len(out) < count:
        raise RuntimeError(f"only {len(out)} admissible samples in {draws} draws")
    return out


def draw_oracle_samples(
    metric, rng, count, norms=(0.5, 1.0, 2.0), min_coord=0.35, max_draws=100000
):
    """Samples for finite-difference comparisons: every fiber direction
    coordinate at least ``min_coord`` in magnitude, so the spray stencils
    never approach a factor slit."""
    n = metric.dim
    out = []
    draws = 0
    while len(out) < count and draws < max_draws:
        draws += 1
        x = rng.uniform(-0.8, 0.8, size=n)
        y = rng.standard_normal(n)
        y /= np.linalg.norm(y)
        if np.min(np.abs(y)) < min_coord:
            continue
        y = y * norms[len(out) % len(norms)]
        if metric.admissible(x, y):
            out.append((x, y))
    if len(out) < count:
        raise RuntimeError(f"only {len(out)} oracle samples in {draws} draws")
    return out
