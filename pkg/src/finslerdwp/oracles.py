"""Finite-difference oracles for every curvature tensor.

Independent reconstruction of the jet engine's output from plain real
evaluations of F^2: central-difference stencils composed per coordinate,
Richardson-extrapolated over halved steps.  Spray-level tensors (Berwald,
Douglas, Landsberg) difference a finite-difference spray evaluator, so
no jet arithmetic enters anywhere in this module.

Evaluators are expected to be vectorised: each coordinate may be passed
as a numpy array of sample values, which keeps the stencil batches to a
handful of array-valued F^2 calls.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

__all__ = [
    "FdParams",
    "fd_partial",
    "fd_partials_vector",
    "convergence_sweep",
    "f2_batch_evaluator",
    "fundamental_fd",
    "cartan_fd",
    "spray_fd",
    "berwald_fd",
    "spray_fourth_fd",
    "dually_flat_fd",
    "oracle_tensors",
    "ORACLE_FLOORS",
    "relative_deviation",
]

# univariate central stencils of O(h^2) accuracy; weights are divided by h^m
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
    5: ((-3, -2, -1, 1, 2, 3), (-0.5, 2.0, -2.5, 2.5, -2.0, 0.5)),
    6: ((-3, -2, -1, 0, 1, 2, 3), (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)),
}

# O(h^4) variants, used for the outer differentiation of the
# finite-difference spray where the inner noise floor forbids small steps
_STENCILS4 = {
    1: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
    2: ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12)),
    3: (
        (-3, -2, -1, 1, 2, 3),
        (1 / 8, -8 / 8, 13 / 8, -13 / 8, 8 / 8, -1 / 8),
    ),
    4: (
        (-3, -2, -1, 0, 1, 2, 3),
        (-1 / 6, 12 / 6, -39 / 6, 56 / 6, -39 / 6, 12 / 6, -1 / 6),
    ),
}


@dataclass(frozen=True)
class FdParams:
    """Step-size policy.  ``halvings`` counts step halvings beyond the
    initial step, so ``halvings=4`` evaluates h, h/2, ..., h/16.

    ``step``/``halvings`` apply to first and second derivatives; higher
    orders widen the step to stay above the rounding-noise floor
    (noise grows like eps/h^m).  ``outer_*`` control the differentiation
    of the finite-difference spray for Berwald/Douglas reconstruction.
    """

    step: float = 1e-2
    halvings: int = 4
    outer_step: float = 0.18
    outer_halvings: int = 3
    outer4_step: float = 0.25
    outer4_halvings: int = 3

    def outer_policy(self, order: int):
        """(step, halvings) for differentiating the fd spray."""
        if order >= 4:
            return self.outer4_step, self.outer4_halvings
        return self.outer_step, self.outer_halvings

    def policy(self, order: int):
        """(step, halvings) for a direct partial of the given total order."""
        if order <= 2:
            return self.step, self.halvings
        if order == 3:
            return 5.0 * self.step, 2
        if order <= 5:
            return 10.0 * self.step, 3
        return 10.0 * self.step, 2


def _composite_stencil(alpha, table=_STENCILS):
    """Tensor-product stencil for the mixed partial ``alpha``.

    Returns (offsets, weights): offsets has shape (S, d) in units of h,
    weights (S,) to be divided by h^|alpha|.
    """
    alpha = tuple(alpha)
    d = len(alpha)
    offsets = np.zeros((1, d))
    weights = np.array([1.0])
    for var, m in enumerate(alpha):
        if m == 0:
            continue
        offs, wts = table[m]
        new_offsets = []
        new_weights = []
        for o, w in zip(offs, wts):
            shifted = offsets.copy()
            shifted[:, var] += o
            new_offsets.append(shifted)
            new_weights.append(weights * w)
        offsets = np.concatenate(new_offsets)
        weights = np.concatenate(new_weights)
    return offsets, weights


def _richardson(rows, start_power=2):
    """Limit of a sequence of stencil estimates at h, h/2, ...

    The error series is assumed to run over even powers starting at
    ``start_power`` (2 for the plain central stencils, 4 for the wide
    ones).  ``rows`` is a list of arrays of identical shape.
    """
    table = [np.asarray(r, dtype=float) for r in rows]
    power = start_power
    while len(table) > 1:
        factor = 2.0**power
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]
        power += 2
    return table[0]


def fd_partials_vector(
    fn,
    points,
    alphas,
    step=None,
    halvings=None,
    params=FdParams(),
    scales=None,
    wide=False,
):
    """Mixed partials of a vector-valued function at a batch of points.

    ``fn`` maps an (N, d) array to an (N, ...) array.  Returns a dict
    ``alpha -> (P, ...)`` of Richardson-extrapolated derivatives.  One
    ``fn`` call is issued per alpha, covering every step level and
    stencil offset in a single stacked batch.  When ``step``/``halvings``
    are omitted they follow the order-aware policy of ``params``.

    ``scales`` (P, d) stretches the stencil per point and per coordinate;
    fiber steps are taken proportional to the fiber norm so the stencil
    resolution is scale-invariant under y -> lambda y.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    n_pts = points.shape[0]
    if scales is None:
        scales = np.ones_like(points)
    else:
        scales = np.asarray(scales, dtype=float)
    out = {}
    for alpha in alphas:
        alpha = tuple(alpha)
        order = sum(alpha)
        h0, nh = params.policy(order)
        if step is not None:
            h0 = step
        if halvings is not None:
            nh = halvings
        steps = [h0 / 2.0**j for j in range(nh + 1)]
        offsets, weights = _composite_stencil(
            alpha, _STENCILS4 if wide else _STENCILS
        )
        n_off = offsets.shape[0]
        stacked = []
        for h in steps:
            # (P, S, d) -> (P*S, d)
            shifted = points[:, None, :] + h * offsets[None, :, :] * scales[:, None, :]
            stacked.append(shifted.reshape(n_pts * n_off, -1))
        values = fn(np.concatenate(stacked, axis=0))
        values = np.asarray(values, dtype=float)
        tail_shape = values.shape[1:]
        values = values.reshape(len(steps), n_pts, n_off, *tail_shape)
        rows = []
        for li, h in enumerate(steps):
            w = weights / h**order
            # contract the stencil axis: (P, S, ...) x (S, ) -> (P, ...)
            rows.append(np.einsum("ps...,s->p...", values[li], w))
        est = _richardson(rows, start_power=4 if wide else 2)
        # the stencil measured d/d(tau) along scaled axes: undo per point
        factor = np.prod(scales ** np.asarray(alpha, dtype=float), axis=1)
        est = est / factor.reshape((n_pts,) + (1,) * (est.ndim - 1))
        out[alpha] = est
    return out


def fd_partial(fn, point, alpha, step=None, halvings=None, params=FdParams()):
    """Scalar mixed partial at a single point."""
    res = fd_partials_vector(
        fn, np.asarray(point)[None, :], [alpha], step, halvings, params
    )
    return float(res[tuple(alpha)][0])


def convergence_sweep(fn, point, alpha, steps):
    """Raw (un-extrapolated) stencil estimates for a list of steps.

    Used to demonstrate the O(h^2) convergence of the base stencils.
    """
    point = np.asarray(point, dtype=float)
    order = sum(alpha)
    offsets, weights = _composite_stencil(alpha)
    rows = []
    for h in steps:
        pts = point[None, :] + h * offsets
        vals = np.asarray(fn(pts), dtype=float)
        rows.append((float(h), float(vals @ (weights / h**order))))
    return rows


# ---------------------------------------------------------------------------
# tensor-level oracles
# ---------------------------------------------------------------------------


def f2_batch_evaluator(metric):
    """Wrap a metric as a function of stacked (x, y) rows."""
    n = metric.dim

    def fn(pts):
        xs = [pts[:, i] for i in range(n)]
        ys = [pts[:, n + i] for i in range(n)]
        return np.asarray(metric.f_squared(xs, ys), dtype=float)

    return fn


def _fiber_alpha(n, *fiber_vars):
    alpha = [0] * (2 * n)
    for v in fiber_vars:
        alpha[n + v] += 1
    return tuple(alpha)


def _base_alpha(n, *base_vars):
    alpha = [0] * (2 * n)
    for v in base_vars:
        alpha[v] += 1
    return tuple(alpha)


def _xy_scales(pts, n):
    """Unit base steps, fiber steps proportional to the fiber norm."""
    pts = np.asarray(pts, dtype=float)
    s = np.ones_like(pts)
    s[:, n:] = np.linalg.norm(pts[:, n:], axis=1)[:, None]
    return s


def fundamental_fd(metric, pts, params=FdParams()):
    """g_ij = (1/2) d^2 F^2 / dy_i dy_j by central differences."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = metric.dim
    fn = f2_batch_evaluator(metric)
    alphas = [_fiber_alpha(n, i, j) for i, j in combinations_with_replacement(range(n), 2)]
    parts = fd_partials_vector(fn, pts, alphas, params=params, scales=_xy_scales(pts, n))
    n_pts = pts.shape[0]
    g = np.zeros((n_pts, n, n))
    for (i, j) in combinations_with_replacement(range(n), 2):
        v = 0.5 * parts[_fiber_alpha(n, i, j)]
        g[:, i, j] = v
        g[:, j, i] = v
    return g


def cartan_fd(metric, pts, params=FdParams()):
    """C_ijk = (1/4) d^3 F^2 / dy_i dy_j dy_k."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = metric.dim
    fn = f2_batch_evaluator(metric)
    combos = list(combinations_with_replacement(range(n), 3))
    alphas = [_fiber_alpha(n, *c) for c in combos]
    parts = fd_partials_vector(fn, pts, alphas, params=params, scales=_xy_scales(pts, n))
    n_pts = pts.shape[0]
    c_tensor = np.zeros((n_pts, n, n, n))
    for combo in combos:
        v = 0.25 * parts[_fiber_alpha(n, *combo)]
        for perm in set(_permutations3(combo)):
            c_tensor[(slice(None),) + perm] = v
    return c_tensor


def _permutations3(combo):
    a, b, c = combo
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def spray_fd(metric, pts, params=FdParams()):
    """Spray coefficients from finite-differenced F^2 data.

    G^i = (1/4) g^{il} (d^2F^2/dx^k dy^l y^k - dF^2/dx^l), with g and the
    brace built by central differences and the inverse taken numerically.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    n = metric.dim
    fn = f2_batch_evaluator(metric)
    g = fundamental_fd(metric, pts, params)
    alphas = [_base_alpha(n, k) for k in range(n)]
    alphas += [
        tuple(np.add(_base_alpha(n, k), _fiber_alpha(n, l)))
        for k in range(n)
        for l in range(n)
    ]
    parts = fd_partials_vector(fn, pts, alphas, params=params, scales=_xy_scales(pts, n))
    y = pts[:, n:]
    brace = np.zeros((pts.shape[0], n))
    for l in range(n):
        acc = np.zeros(pts.shape[0])
        for k in range(n):
            alpha = tuple(np.add(_base_alpha(n, k), _fiber_alpha(n, l)))
            acc += parts[alpha] * y[:, k]
        brace[:, l] = acc - parts[_base_alpha(n, l)]
    g_inv = np.linalg.inv(g)
    return 0.25 * np.einsum("pil,pl->pi", g_inv, brace)


def _spray_fn(metric, params):
    def fn(pts):
        return spray_fd(metric, pts, params)

    return fn


def berwald_fd(metric, pts, params=FdParams()):
    """B^i_jkl = third fiber derivative of the finite-difference spray."""
    n = metric.dim
    combos = list(combinations_with_replacement(range(n), 3))
    alphas = [_fiber_alpha(n, *c) for c in combos]
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    step, halvings = params.outer_policy(3)
    parts = fd_partials_vector(
        _spray_fn(metric, params), pts, alphas,
        step=step, halvings=halvings,
        scales=_xy_scales(pts, n),
    )
    n_pts = pts.shape[0]
    b = np.zeros((n_pts, n, n, n, n))
    for combo in combos:
        v = parts[_fiber_alpha(n, *combo)]  # (P, n)
        for perm in set(_permutations3(combo)):
            b[:, :, perm[0], perm[1], perm[2]] = v
    return b


def spray_fourth_fd(metric, pts, params=FdParams()):
    """Fourth fiber derivatives of the spray, d^4 G^i / dy^4."""
    n = metric.dim
    combos = list(combinations_with_replacement(range(n), 4))
    alphas = [_fiber_alpha(n, *c) for c in combos]
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    step, halvings = params.outer_policy(4)
    parts = fd_partials_vector(
        _spray_fn(metric, params), pts, alphas,
        step=step, halvings=halvings,
        scales=_xy_scales(pts, n),
    )
    n_pts = pts.shape[0]
    d4 = np.zeros((n_pts, n, n, n, n, n))
    for combo in combos:
        v = parts[_fiber_alpha(n, *combo)]
        seen = set()
        for perm in _permutations4(combo):
            if perm in seen:
                continue
            seen.add(perm)
            d4[:, :, perm[0], perm[1], perm[2], perm[3]] = v
    return d4


def _permutations4(combo):
    from itertools import permutations

    return list(permutations(combo))


def dually_flat_fd(metric, pts, params=FdParams()):
    """R_l = d^2F^2/dx^k dy^l y^k - 2 dF^2/dx^l by central differences."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = metric.dim
    fn = f2_batch_evaluator(metric)
    alphas = [_base_alpha(n, k) for k in range(n)]
    alphas += [
        tuple(np.add(_base_alpha(n, k), _fiber_alpha(n, l)))
        for k in range(n)
        for l in range(n)
    ]
    parts = fd_partials_vector(fn, pts, alphas, params=params, scales=_xy_scales(pts, n))
    y = pts[:, n:]
    res = np.zeros((pts.shape[0], n))
    for l in range(n):
        acc = np.zeros(pts.shape[0])
        for k in range(n):
            alpha = tuple(np.add(_base_alpha(n, k), _fiber_alpha(n, l)))
            acc += parts[alpha] * y[:, k]
        res[:, l] = acc - 2.0 * parts[_base_alpha(n, l)]
    return res


def oracle_tensors(metric, pts, which, params=FdParams()):
    """Finite-difference reconstruction of the requested tensor families.

    ``which`` is an iterable of names from {"g", "C", "I", "h", "G", "B",
    "E", "D", "L", "J", "R"}.  Derived tensors pull in what they need.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    want = set(which)
    n = metric.dim
    out = {}
    need_g = want & {"g", "I", "h", "L", "J"}
    need_b = want & {"B", "E", "D", "L", "J"}
    if need_g:
        out["g"] = fundamental_fd(metric, pts, params)
    if want & {"C", "I"}:
        out["C"] = cartan_fd(metric, pts, params)
    if "I" in want:
        g_inv = np.linalg.inv(out["g"])
        out["I"] = np.einsum("pjk,pijk->pi", g_inv, out["C"])
    if "h" in want:
        fn = f2_batch_evaluator(metric)
        f2 = fn(pts)
        y = pts[:, n:]
        y_low = np.einsum("pij,pj->pi", out["g"], y)
        out["h"] = out["g"] - np.einsum("pi,pj->pij", y_low, y_low) / f2[:, None, None]
    if "G" in want:
        out["G"] = spray_fd(metric, pts, params)
    if need_b:
        b = berwald_fd(metric, pts, params)
        if "B" in want:
            out["B"] = b
        if want & {"E", "D"}:
            e = 0.5 * np.einsum("pmjkm->pjk", b)
            if "E" in want:
                out["E"] = e
        if "D" in want:
            d4 = spray_fourth_fd(metric, pts, params)
            de = 0.5 * np.einsum("pmjklm->pjkl", d4)
            y = pts[:, n:]
            eye = np.eye(n)
            out["D"] = (
                b
                - 2.0
                / (n + 1)
                * (
                    np.einsum("pjk,il->pijkl", e, eye)
                    + np.einsum("pjl,ik->pijkl", e, eye)
                    + np.einsum("pkl,ij->pijkl", e, eye)
                    + np.einsum("pjkl,pi->pijkl", de, y)
                )
            )
        if want & {"L", "J"}:
            y = pts[:, n:]
            y_low = np.einsum("pij,pj->pi", out["g"], y)
            l_tensor = -0.5 * np.einsum("pl,plijk->pijk", y_low, b)
            if "L" in want:
                out["L"] = l_tensor
            if "J" in want:
                g_inv = np.linalg.inv(out["g"])
                out["J"] = np.einsum("pjk,pijk->pi", g_inv, l_tensor)
    if "R" in want:
        out["R"] = dually_flat_fd(metric, pts, params)
    return out

# absolute tensor norms below which jet and oracle are both considered
# zero: the oracle's own noise resolution per tensor family
ORACLE_FLOORS = {
    "g": 1e-10,
    "C": 1e-8,
    "I": 1e-8,
    "h": 1e-10,
    "G": 1e-9,
    "B": 2e-5,
    "E": 2e-5,
    "D": 1e-4,
    "L": 2e-5,
    "J": 2e-5,
    "R": 1e-8,
}


def relative_deviation(jet_value, fd_value, floor: float) -> float:
    """max-norm deviation relative to the larger of the two tensors.

    Returns 0 when both sides sit below ``floor`` (indistinguishable from
    zero at the oracle's resolution).
    """
    jet_value = np.asarray(jet_value, dtype=float)
    fd_value = np.asarray(fd_value, dtype=float)
    scale = max(np.max(np.abs(jet_value)), np.max(np.abs(fd_value)))
    if scale <= floor:
        return 0.0
    return float(np.max(np.abs(jet_value - fd_value)) / scale)
