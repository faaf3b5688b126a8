"""Factor Finsler metric families and warping functions.

Every family exposes ``f_squared(x, y)`` where the entries of ``x`` and
``y`` may be floats, numpy arrays or jets; the same code path serves
plain evaluation, the finite-difference oracles and the jet engine.

Families
--------
* ``EuclideanMetric``        F^2 = sum (y^i)^2
* ``DiagonalRiemannianMetric``  F^2 = sum a_i(x) (y^i)^2
* ``RandersMetric``          F = alpha + beta with diagonal alpha data
                             and a one-form beta = b_i(x) y^i
* ``QuarticMinkowskiMetric`` F^2 = sqrt(quartic form in y), x-independent
* ``ExpressionMetric``       arbitrary F^2 expression in (x, y)

Regularity is a cheap pointwise predicate (``admissible``); the Randers
family filters ``|b|_alpha < 0.90``, which keeps a 0.05 margin to the
0.95 sampling bound so finite-difference stencils stay inside the
domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets
from .expressions import Expression, parse_expression
from .jets import JetScalar, extract, lift_variable

__all__ = [
    "MetricError",
    "EuclideanMetric",
    "DiagonalRiemannianMetric",
    "RandersMetric",
    "QuarticMinkowskiMetric",
    "ExpressionMetric",
    "Warping",
    "base_names",
    "fiber_names",
    "check_strong_convexity",
    "ConvexityReport",
    "RANDERS_NORM_BOUND",
    "RANDERS_NORM_MARGIN",
]


class MetricError(ValueError):
    pass


RANDERS_NORM_BOUND = 0.95
RANDERS_NORM_MARGIN = 0.05

# coordinate naming convention: factor slot 0 uses x/y names, slot 1 u/v
_BASE_PREFIX = ("x", "u")
_FIBER_PREFIX = ("y", "v")


def base_names(dim: int, slot: int = 0):
    return [f"{_BASE_PREFIX[slot]}{i + 1}" for i in range(dim)]


def fiber_names(dim: int, slot: int = 0):
    return [f"{_FIBER_PREFIX[slot]}{i + 1}" for i in range(dim)]


def _is_zero_vector(y) -> bool:
    vals = []
    for s in y:
        if isinstance(s, JetScalar):
            vals.append(s.value)
        elif isinstance(s, np.ndarray):
            return False  # batched oracle input, caller controls the domain
        else:
            vals.append(float(s))
    return all(v == 0.0 for v in vals)


@dataclass(frozen=True)
class EuclideanMetric:
    dim: int
    family: str = field(default="euclidean", init=False)
    quadratic: bool = field(default=True, init=False)

    def f_squared(self, x, y):
        acc = y[0] * y[0]
        for s in y[1:]:
            acc = acc + s * s
        return acc

    def admissible(self, x, y) -> bool:
        return True


@dataclass(frozen=True)
class DiagonalRiemannianMetric:
    """F^2 = sum a_i(x) (y^i)^2 with positive coefficient expressions."""

    dim: int
    coefficients: tuple  # of Expression over the base names
    family: str = field(default="riemannian_diag", init=False)
    quadratic: bool = field(default=True, init=False)

    @classmethod
    def from_strings(cls, exprs: Sequence[str], slot: int = 0):
        names = base_names(len(exprs), slot)
        return cls(len(exprs), tuple(parse_expression(e, names) for e in exprs))

    def f_squared(self, x, y):
        acc = None
        for i in range(self.dim):
            term = self.coefficients[i](list(x)) * (y[i] * y[i])
            acc = term if acc is None else acc + term
        return acc

    def admissible(self, x, y) -> bool:
        return all(self.coefficients[i](list(x)) > 0.0 for i in range(self.dim))


@dataclass(frozen=True)
class RandersMetric:
    """F = alpha + beta, evaluated as F^2 = (alpha + beta)^2.

    alpha^2 = a_i(x) (y^i)^2 (diagonal Riemannian data), beta = b_i(x) y^i.
    """

    dim: int
    alpha_diag: tuple  # Expressions a_i(x)
    beta: tuple  # Expressions b_i(x)
    family: str = field(default="randers", init=False)
    quadratic: bool = field(default=False, init=False)

    @classmethod
    def from_strings(cls, alpha: Sequence[str], beta: Sequence[str], slot: int = 0):
        if len(alpha) != len(beta):
            raise MetricError("alpha and beta must have matching length")
        names = base_names(len(alpha), slot)
        return cls(
            len(alpha),
            tuple(parse_expression(e, names) for e in alpha),
            tuple(parse_expression(e, names) for e in beta),
        )

    def f_squared(self, x, y):
        if _is_zero_vector(y):
            raise MetricError("Randers metric is not smooth at y = 0")
        xs = list(x)
        alpha_sq = None
        for i in range(self.dim):
            term = self.alpha_diag[i](xs) * (y[i] * y[i])
            alpha_sq = term if alpha_sq is None else alpha_sq + term
        beta = None
        for i in range(self.dim):
            term = self.beta[i](xs) * y[i]
            beta = term if beta is None else beta + term
        f = jets.sqrt(alpha_sq) + beta
        return f * f

    def b_norm_alpha(self, x) -> float:
        """|b|_alpha at a base point: sqrt(sum b_i^2 / a_i) for diagonal a."""
        xs = [float(v) for v in x]
        return math.sqrt(
            sum(
                float(self.beta[i](xs)) ** 2 / float(self.alpha_diag[i](xs))
                for i in range(self.dim)
            )
        )

    def admissible(self, x, y) -> bool:
        return self.b_norm_alpha(x) < RANDERS_NORM_BOUND - RANDERS_NORM_MARGIN


@dataclass(frozen=True)
class QuarticMinkowskiMetric:
    """Locally Minkowski metric F^2 = sqrt(Q(y)) for the constant quartic
    form Q = sum c_i (y^i)^4 + kappa * sum_{i<j} (y^i)^2 (y^j)^2.

    With c_i = 1 and kappa = 2 this degenerates to the Euclidean metric;
    perturbing the coefficients gives a non-Riemannian, x-independent
    metric.  Convexity of the perturbed form is validated numerically at
    construction over a direction grid.
    """

    dim: int
    axis_coefficients: tuple
    cross_coefficient: float = 2.0
    family: str = field(default="minkowski_quartic", init=False)
    quadratic: bool = field(default=False, init=False)

    def __post_init__(self):
        if len(self.axis_coefficients) != self.dim:
            raise MetricError("axis coefficient count must equal dim")
        if min(self.axis_coefficients) <= 0.0:
            raise MetricError("quartic axis coefficients must be positive")
        self._validate_convexity()

    def f_squared(self, x, y):
        if _is_zero_vector(y):
            raise MetricError("quartic Minkowski metric is not smooth at y = 0")
        q = None
        for i in range(self.dim):
            sq = y[i] * y[i]
            term = self.axis_coefficients[i] * (sq * sq)
            q = term if q is None else q + term
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                q = q + self.cross_coefficient * (y[i] * y[i]) * (y[j] * y[j])
        return jets.sqrt(q)

    def admissible(self, x, y) -> bool:
        return True

    def _validate_convexity(self, grid: int = 40):
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((grid, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for y0 in dirs:
            yj = [lift_variable(y0[i], i, self.dim, 2) for i in range(self.dim)]
            j = self.f_squared([], yj)
            g = np.empty((self.dim, self.dim))
            for a in range(self.dim):
                for b in range(a, self.dim):
                    alpha = [0] * self.dim
                    alpha[a] += 1
                    alpha[b] += 1
                    g[a, b] = g[b, a] = 0.5 * extract(j, alpha)
            if np.linalg.eigvalsh(g)[0] <= 1e-8:
                raise MetricError(
                    "quartic coefficients give a non-convex metric "
                    f"(direction {y0}, min eigenvalue {np.linalg.eigvalsh(g)[0]:.2e})"
                )


@dataclass(frozen=True)
class ExpressionMetric:
    """Custom F^2 given as an expression over base and fiber names."""

    dim: int
    expr: Expression
    family: str = field(default="custom_expr", init=False)
    quadratic: bool = field(default=False, init=False)

    @classmethod
    def from_string(cls, dim: int, text: str, slot: int = 0):
        names = base_names(dim, slot) + fiber_names(dim, slot)
        return cls(dim, parse_expression(text, names))

    def f_squared(self, x, y):
        return self.expr(list(x) + list(y))

    def admissible(self, x, y) -> bool:
        return True


# ---------------------------------------------------------------------------
# warping functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Warping:
    """A positive function of one factor's base coordinates."""

    expr: Expression
    box: tuple  # ((lo, hi), ...) positivity box, len == dim

    @classmethod
    def from_string(cls, text: str, dim: int, box=None, slot: int = 0):
        if box is None:
            box = tuple((-1.0, 1.0) for _ in range(dim))
        return cls(parse_expression(text, base_names(dim, slot)), tuple(box))

    @property
    def dim(self) -> int:
        return len(self.box)

    def value(self, x):
        """f(x) in the scalar ring; raises if f <= 0 at a numeric point."""
        v = self.expr(list(x))
        check = v.value if isinstance(v, JetScalar) else v
        if isinstance(check, np.ndarray):
            if np.any(check <= 0.0):
                raise MetricError("warping function is not positive at a sample")
        elif check <= 0.0:
            raise MetricError(f"warping function value {check} is not positive")
        return v

    def sq_value(self, x):
        v = self.value(x)
        return v * v

    def sq_grad(self, x):
        """Gradient of f^2 at a numeric base point, via order-1 jets."""
        n = self.dim
        xj = [lift_variable(float(x[i]), i, n, 1) for i in range(n)]
        j = self.sq_value(xj)
        out = np.zeros(n)
        if not isinstance(j, JetScalar):  # constant expression folded away
            return out
        for h in range(n):
            alpha = [0] * n
            alpha[h] = 1
            out[h] = extract(j, alpha)
        return out

    def max_sq_grad_norm(self, points) -> float:
        """max |grad f^2| over base points; 0 for a constant warping."""
        return max(
            (float(np.max(np.abs(self.sq_grad(p)))) for p in points), default=0.0
        )


# ---------------------------------------------------------------------------
# strong convexity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityReport:
    eigenvalues: np.ndarray  # smallest fundamental-tensor eigenvalue per sample
    threshold: float
    passed: bool
    failures: tuple  # sample indices with min eigenvalue <= threshold


def check_strong_convexity(metric, samples, threshold: float = 1e-10):
    """Smallest eigenvalue of the fundamental tensor at each (x, y) sample.

    Does not raise on indefinite tensors; failures are reported.
    """
    n = metric.dim
    mins = np.empty(len(samples))
    for p, (x, y) in enumerate(samples):
        yj = [lift_variable(float(y[i]), i, n, 2) for i in range(n)]
        j = metric.f_squared([float(v) for v in x], yj)
        g = np.empty((n, n))
        for a in range(n):
            for b in range(a, n):
                alpha = [0] * n
                alpha[a] += 1
                alpha[b] += 1
                g[a, b] = g[b, a] = 0.5 * extract(j, alpha)
        mins[p] = np.linalg.eigvalsh(g)[0]
    failures = tuple(int(i) for i in np.nonzero(mins <= threshold)[0])
    return ConvexityReport(mins, threshold, len(failures) == 0, failures)
