"""Generic curvature engine: every tensor from one jet evaluation.

For a metric evaluator of dimension n, base and fiber coordinates are
seeded as jet variables in a single 2n-dimensional jet space, F^2 is
evaluated once over the ring, and all tensors are read off that jet:

    g_ij   = (1/2) d^2 F^2 / dy^i dy^j          fundamental tensor
    C_ijk  = (1/4) d^3 F^2 / dy^i dy^j dy^k     Cartan torsion
    I_i    = g^{jk} C_ijk                       mean Cartan
    h_ij   = g_ij - F^-2 y_i y_j                angular metric
    G^i    = (1/4) g^{il} (F^2_{x^k y^l} y^k - F^2_{x^l})   spray
    B^i_jkl = d^3 G^i / dy^j dy^k dy^l          Berwald curvature
    E_jk   = (1/2) B^m_jkm                      mean Berwald
    D^i_jkl = B - 2/(n+1){E delta + ... + E_jk,l y^i}   Douglas
    L_ijk  = -(1/2) y_l B^l_ijk                 Landsberg
    J_i    = g^{jk} L_ijk                       mean Landsberg
    R_l    = F^2_{x^k y^l} y^k - 2 F^2_{x^l}    dually-flat residual

The spray is itself assembled in the jet ring (inverse metric jets via
:func:`jet_matrix_inverse`, mixed partials by exact coefficient shifts),
so its fiber derivatives through order 4 come out of the same pass.
Berwald-level tensors need jet order 5, the Douglas tensor (through
dE/dy) order 6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations

import numpy as np

from .jets import (
    derivative,
    extract,
    jet_matrix_inverse,
    lift_variable,
    truncated,
)

__all__ = [
    "AdmissibilityError",
    "TangentSample",
    "CurvatureBundle",
    "compute_bundle",
    "fundamental_tensor",
    "cartan_and_mean",
    "angular_metric",
    "spray",
    "berwald",
    "douglas",
    "landsberg_and_mean",
    "dually_flat_residual",
    "max_norm",
    "FIBER_TENSORS",
    "SPRAY_TENSORS",
    "BERWALD_TENSORS",
    "DOUGLAS_TENSORS",
    "ALL_TENSORS",
]


class AdmissibilityError(ValueError):
    pass


FIBER_TENSORS = frozenset({"g", "C", "I", "h"})
SPRAY_TENSORS = frozenset({"G", "R"})
BERWALD_TENSORS = frozenset({"B", "E", "L", "J"})
DOUGLAS_TENSORS = frozenset({"D"})
ALL_TENSORS = FIBER_TENSORS | SPRAY_TENSORS | BERWALD_TENSORS | DOUGLAS_TENSORS

_MIN_FIBER_NORM = 1e-6


@dataclass(frozen=True)
class TangentSample:
    """A point of the slit tangent bundle in chart coordinates."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if np.linalg.norm(self.y) <= _MIN_FIBER_NORM:
            raise AdmissibilityError("fiber vector too close to zero")


@dataclass
class CurvatureBundle:
    """All tensors sampled at one tangent point.

    Index layout: the first axis of ``berwald`` and ``douglas`` is the
    upper index; ``mean_berwald_dy[j, k, l]`` is dE_jk/dy^l.
    """

    sample: TangentSample
    dim: int
    f_squared: float
    g: np.ndarray = None
    g_inv: np.ndarray = None
    y_lower: np.ndarray = None
    cartan: np.ndarray = None
    mean_cartan: np.ndarray = None
    angular: np.ndarray = None
    spray: np.ndarray = None
    berwald: np.ndarray = None
    mean_berwald: np.ndarray = None
    mean_berwald_dy: np.ndarray = None
    douglas: np.ndarray = None
    landsberg: np.ndarray = None
    mean_landsberg: np.ndarray = None
    dually_flat: np.ndarray = None


def max_norm(tensor) -> float:
    """Max-absolute-component norm, the scale used by every threshold."""
    if tensor is None:
        return 0.0
    return float(np.max(np.abs(tensor)))


def _required_order(tensors) -> int:
    if tensors & DOUGLAS_TENSORS:
        return 6
    if tensors & BERWALD_TENSORS:
        return 5
    if tensors & SPRAY_TENSORS:
        return 2
    return 3


def _fiber_multi(space_dim, n, fiber_vars):
    alpha = [0] * space_dim
    for v in fiber_vars:
        alpha[(space_dim - n) + v] += 1
    return tuple(alpha)


def compute_bundle(metric, sample, tensors=ALL_TENSORS, order=None) -> CurvatureBundle:
    """Evaluate the requested tensor families at one tangent sample.

    ``tensors`` is a set of names from {"g","C","I","h","G","B","E","D",
    "L","J","R"}; prerequisites are pulled in automatically.  ``order``
    overrides the jet truncation order (must be at least the required
    one).
    """
    tensors = set(tensors)
    if isinstance(sample, TangentSample):
        x, y = sample.x, sample.y
    else:
        x, y = sample
        sample = TangentSample(np.asarray(x, float), np.asarray(y, float))
        x, y = sample.x, sample.y
    n = metric.dim
    if x.shape != (n,) or y.shape != (n,):
        raise AdmissibilityError(
            f"sample has shape {x.shape}/{y.shape}, expected ({n},)"
        )

    needed = _required_order(tensors)
    k = needed if order is None else order
    if k < needed:
        raise AdmissibilityError(
            f"jet order {k} too low for requested tensors (need {needed})"
        )

    mixed = bool(tensors & (SPRAY_TENSORS | BERWALD_TENSORS | DOUGLAS_TENSORS))
    if mixed:
        d = 2 * n
        xj = [lift_variable(x[i], i, d, k) for i in range(n)]
        yj = [lift_variable(y[i], n + i, d, k) for i in range(n)]
    else:
        d = n
        xj = [float(v) for v in x]
        yj = [lift_variable(y[i], i, d, k) for i in range(n)]

    j = metric.f_squared(xj, yj)
    f2 = j.value
    if f2 <= 0.0:
        raise AdmissibilityError(f"F^2 = {f2} is not positive at the sample")

    bundle = CurvatureBundle(sample=sample, dim=n, f_squared=f2)

    # fundamental tensor; always needed downstream
    g = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            g[a, b] = g[b, a] = 0.5 * extract(j, _fiber_multi(d, n, (a, b)))
    eig_min = np.linalg.eigvalsh(g)[0]
    if eig_min <= 0.0:
        raise AdmissibilityError(
            f"fundamental tensor not positive definite (min eigenvalue {eig_min:.3e})"
        )
    bundle.g = g
    bundle.g_inv = np.linalg.inv(g)
    bundle.y_lower = g @ y

    if tensors & {"C", "I", "L"}:
        c_tensor = np.empty((n, n, n))
        for combo in combinations_with_replacement(range(n), 3):
            v = 0.25 * extract(j, _fiber_multi(d, n, combo))
            for perm in set(permutations(combo)):
                c_tensor[perm] = v
        bundle.cartan = c_tensor
        bundle.mean_cartan = np.einsum("jk,ijk->i", bundle.g_inv, c_tensor)

    if "h" in tensors:
        bundle.angular = g - np.outer(bundle.y_lower, bundle.y_lower) / f2

    if "R" in tensors:
        res = np.empty(n)
        for l in range(n):
            alpha_l = [0] * d
            alpha_l[l] = 1
            acc = 0.0
            for kk in range(n):
                alpha = [0] * d
                alpha[kk] += 1
                alpha[n + l] += 1
                acc += extract(j, tuple(alpha)) * y[kk]
            res[l] = acc - 2.0 * extract(j, tuple(alpha_l))
        bundle.dually_flat = res

    if tensors & ({"G"} | BERWALD_TENSORS | DOUGLAS_TENSORS):
        g_jets = [
            [derivative(derivative(j, n + a), n + b) * 0.5 for b in range(n)]
            for a in range(n)
        ]
        g_inv_jets = jet_matrix_inverse(g_jets)
        y_trunc = [truncated(yj[i], k - 2) for i in range(n)]
        brace = []
        for l in range(n):
            acc = None
            for kk in range(n):
                term = derivative(derivative(j, kk), n + l) * y_trunc[kk]
                acc = term if acc is None else acc + term
            brace.append(acc - truncated(derivative(j, l), k - 2))
        spray_jets = []
        for i in range(n):
            acc = None
            for l in range(n):
                term = g_inv_jets[i][l] * brace[l]
                acc = term if acc is None else acc + term
            spray_jets.append(acc * 0.25)
        bundle.spray = np.array([gj.value for gj in spray_jets])

        if tensors & (BERWALD_TENSORS | DOUGLAS_TENSORS):
            b_tensor = np.empty((n, n, n, n))
            for combo in combinations_with_replacement(range(n), 3):
                alpha = _fiber_multi(d, n, combo)
                for i in range(n):
                    v = extract(spray_jets[i], alpha)
                    for perm in set(permutations(combo)):
                        b_tensor[(i,) + perm] = v
            bundle.berwald = b_tensor
            bundle.mean_berwald = 0.5 * np.einsum("mjkm->jk", b_tensor)

            if tensors & {"L", "J"}:
                l_tensor = -0.5 * np.einsum("l,lijk->ijk", bundle.y_lower, b_tensor)
                bundle.landsberg = l_tensor
                bundle.mean_landsberg = np.einsum(
                    "jk,ijk->i", bundle.g_inv, l_tensor
                )

            if "D" in tensors:
                e_dy = np.empty((n, n, n))
                for combo in combinations_with_replacement(range(n), 3):
                    acc = 0.0
                    for m in range(n):
                        alpha = _fiber_multi(d, n, combo + (m,))
                        acc += extract(spray_jets[m], alpha)
                    v = 0.5 * acc
                    for perm in set(permutations(combo)):
                        e_dy[perm] = v
                bundle.mean_berwald_dy = e_dy
                eye = np.eye(n)
                e = bundle.mean_berwald
                bundle.douglas = b_tensor - (2.0 / (n + 1)) * (
                    np.einsum("jk,il->ijkl", e, eye)
                    + np.einsum("jl,ik->ijkl", e, eye)
                    + np.einsum("kl,ij->ijkl", e, eye)
                    + np.einsum("jkl,i->ijkl", e_dy, y)
                )
    return bundle


# ---------------------------------------------------------------------------
# single-tensor entry points
# ---------------------------------------------------------------------------


def fundamental_tensor(metric, sample):
    """g_ij = (1/2) fiber Hessian of F^2, with its inverse."""
    b = compute_bundle(metric, sample, tensors={"g"})
    return b.g, b.g_inv


def cartan_and_mean(metric, sample):
    b = compute_bundle(metric, sample, tensors={"C", "I"})
    return b.cartan, b.mean_cartan


def angular_metric(bundle: CurvatureBundle) -> np.ndarray:
    if bundle.angular is None:
        bundle.angular = bundle.g - np.outer(
            bundle.y_lower, bundle.y_lower
        ) / bundle.f_squared
    return bundle.angular


def spray(metric, sample):
    return compute_bundle(metric, sample, tensors={"G"}).spray


def berwald(metric, sample):
    b = compute_bundle(metric, sample, tensors={"B", "E"})
    return b.berwald, b.mean_berwald


def douglas(bundle: CurvatureBundle) -> np.ndarray:
    if bundle.douglas is None:
        raise AdmissibilityError(
            "bundle lacks Douglas data; request 'D' in compute_bundle"
        )
    return bundle.douglas


def landsberg_and_mean(bundle: CurvatureBundle):
    if bundle.landsberg is None:
        if bundle.berwald is None:
            raise AdmissibilityError("bundle lacks Berwald data for Landsberg")
        bundle.landsberg = -0.5 * np.einsum(
            "l,lijk->ijk", bundle.y_lower, bundle.berwald
        )
        bundle.mean_landsberg = np.einsum(
            "jk,ijk->i", bundle.g_inv, bundle.landsberg
        )
    return bundle.landsberg, bundle.mean_landsberg


def dually_flat_residual(metric, sample):
    """R_l = F^2_{x^k y^l} y^k - 2 F^2_{x^l}; zero iff the adapted-chart
    identity holds at the sample."""
    return compute_bundle(metric, sample, tensors={"R"}).dually_flat
