"""Arithmetic of truncated multivariate Taylor polynomials ("jets").

A jet of dimension ``d`` and order ``K`` stores one real coefficient per
multi-index ``alpha`` with ``|alpha| <= K``, laid out in graded
lexicographic order: ascending total degree, ties broken by ascending
lexicographic comparison of the index tuple.  This ordering is part of
the module contract; all tensor extraction downstream relies on it.

Coefficients are Taylor-normalised, ``coeffs[alpha] = d^alpha f / alpha!``,
which keeps products well scaled at high order; :func:`extract` multiplies
the factorial back in to return the raw partial derivative.

Evaluating a composite function on variables lifted with
:func:`lift_variable` yields every partial derivative up to total order
``K`` in a single pass, exact up to float rounding.  The elementary
functions (:func:`exp`, :func:`log`, :func:`sin`, :func:`cos`,
:func:`sqrt`) dispatch on their argument, so the same evaluation code
runs on floats, numpy arrays and jets.
"""

from __future__ import annotations

import math
import numbers
from functools import lru_cache

import numpy as np

__all__ = [
    "JetError",
    "JetDomainError",
    "SingularJetMatrixError",
    "JetSpace",
    "JetScalar",
    "jet_space",
    "constant_jet",
    "lift_variable",
    "extract",
    "derivative",
    "truncated",
    "exp",
    "log",
    "sin",
    "cos",
    "sqrt",
    "jet_matrix_inverse",
]


class JetError(ValueError):
    """Base error for jet arithmetic."""


class JetDomainError(JetError):
    """Elementary function evaluated outside its domain.

    Carries the name of the offending function in ``function``.
    """

    def __init__(self, function: str, message: str):
        super().__init__(f"{function}: {message}")
        self.function = function


class SingularJetMatrixError(JetError):
    """Constant block of a jet matrix is numerically singular."""

    def __init__(self, smallest_singular_value: float):
        super().__init__(
            "jet matrix has singular constant block "
            f"(smallest singular value {smallest_singular_value:.3e})"
        )
        self.smallest_singular_value = smallest_singular_value


def _indices_of_degree(dim: int, degree: int):
    """All length-``dim`` tuples of non-negative ints summing to ``degree``,
    in ascending lexicographic order."""
    if dim == 1:
        yield (degree,)
        return
    for first in range(degree + 1):
        for rest in _indices_of_degree(dim - 1, degree - first):
            yield (first,) + rest


class JetSpace:
    """Index bookkeeping shared by every jet of a given (dim, order).

    Holds the graded-lex multi-index table, the multiplication
    gather/scatter table (built lazily, cached) and per-variable
    derivative shift maps.  Instances are obtained via :func:`jet_space`
    and are interned, so identity comparison is valid.
    """

    __slots__ = (
        "dim",
        "order",
        "indices",
        "n_terms",
        "_position",
        "_alpha",
        "_degrees",
        "_keys",
        "_degree_offsets",
        "alpha_factorial",
        "_mul_table",
        "_deriv_maps",
    )

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise JetError(f"jet dimension must be >= 1, got {dim}")
        if order < 0:
            raise JetError(f"jet order must be >= 0, got {order}")
        if dim * math.log2(order + 2) > 62:
            raise JetError(f"jet space ({dim}, {order}) too large to index")
        self.dim = dim
        self.order = order
        indices = []
        offsets = [0]
        for degree in range(order + 1):
            indices.extend(_indices_of_degree(dim, degree))
            offsets.append(len(indices))
        self.indices = tuple(indices)
        self.n_terms = len(indices)
        self._degree_offsets = tuple(offsets)
        self._position = {alpha: p for p, alpha in enumerate(indices)}
        self._alpha = np.array(indices, dtype=np.int64)
        self._degrees = self._alpha.sum(axis=1)
        base = order + 2
        self._keys = self._alpha @ (base ** np.arange(dim, dtype=np.int64))
        fact = np.ones(self.n_terms)
        for p, alpha in enumerate(indices):
            for a in alpha:
                fact[p] *= math.factorial(a)
        self.alpha_factorial = fact
        self._mul_table = None
        self._deriv_maps = {}

    def position(self, alpha) -> int:
        try:
            return self._position[tuple(alpha)]
        except KeyError:
            raise JetError(
                f"multi-index {tuple(alpha)} not in jet space "
                f"(dim={self.dim}, order={self.order})"
            ) from None

    def terms_up_to(self, order: int) -> int:
        """Number of leading coefficients covering total degree <= order."""
        return self._degree_offsets[min(order, self.order) + 1]

    def mul_table(self):
        """(ii, jj, kk) index arrays: coefficient products ``a[ii]*b[jj]``
        accumulate into result position ``kk``."""
        if self._mul_table is None:
            key_order = np.argsort(self._keys)
            sorted_keys = self._keys[key_order]
            ii_parts, jj_parts = [], []
            for da in range(self.order + 1):
                ia = np.arange(self._degree_offsets[da], self._degree_offsets[da + 1])
                ib = np.arange(0, self._degree_offsets[self.order + 1 - da])
                grid_a = np.repeat(ia, ib.size)
                grid_b = np.tile(ib, ia.size)
                keep = self._degrees[grid_b] <= self.order - da
                ii_parts.append(grid_a[keep])
                jj_parts.append(grid_b[keep])
            ii = np.concatenate(ii_parts)
            jj = np.concatenate(jj_parts)
            sum_keys = self._keys[ii] + self._keys[jj]
            kk = key_order[np.searchsorted(sorted_keys, sum_keys)]
            self._mul_table = (ii, jj, kk)
        return self._mul_table

    def deriv_map(self, var: int):
        """(src, factor) arrays mapping coefficients of a jet to the
        coefficients of its partial derivative in the (dim, order-1) space."""
        if var not in self._deriv_maps:
            target = jet_space(self.dim, self.order - 1)
            src = np.empty(target.n_terms, dtype=np.int64)
            factor = np.empty(target.n_terms)
            for p, beta in enumerate(target.indices):
                shifted = list(beta)
                shifted[var] += 1
                src[p] = self._position[tuple(shifted)]
                factor[p] = beta[var] + 1
            self._deriv_maps[var] = (src, factor)
        return self._deriv_maps[var]

    def __repr__(self):
        return f"JetSpace(dim={self.dim}, order={self.order})"


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    return JetSpace(dim, order)


class JetScalar:
    """One element of the truncated Taylor ring.

    Immutable after construction.  Arithmetic requires both operands to
    live in the same :class:`JetSpace`; plain numbers are promoted to
    constant jets automatically.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        coeffs = np.asarray(coeffs, dtype=float)
        coeffs.flags.writeable = False
        self.coeffs = coeffs

    # -- construction ------------------------------------------------

    @property
    def value(self) -> float:
        """The order-zero coefficient, i.e. the plain evaluation."""
        return float(self.coeffs[0])

    def coefficient(self, alpha) -> float:
        """Taylor-normalised coefficient at multi-index ``alpha``."""
        return float(self.coeffs[self.space.position(alpha)])

    # -- ring operations ----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, JetScalar):
            if other.space is not self.space:
                raise JetError(
                    f"jet space mismatch: {self.space} vs {other.space}"
                )
            return other
        if isinstance(other, numbers.Real):
            return None  # handled by the scalar fast path
        return NotImplemented

    def __add__(self, other):
        coerced = self._coerce(other)
        if coerced is NotImplemented:
            return NotImplemented
        if coerced is None:
            out = self.coeffs.copy()
            out[0] += float(other)
            return JetScalar(self.space, out)
        return JetScalar(self.space, self.coeffs + coerced.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        coerced = self._coerce(other)
        if coerced is NotImplemented:
            return NotImplemented
        if coerced is None:
            out = self.coeffs.copy()
            out[0] -= float(other)
            return JetScalar(self.space, out)
        return JetScalar(self.space, self.coeffs - coerced.coeffs)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return JetScalar(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __mul__(self, other):
        coerced = self._coerce(other)
        if coerced is NotImplemented:
            return NotImplemented
        if coerced is None:
            return JetScalar(self.space, self.coeffs * float(other))
        ii, jj, kk = self.space.mul_table()
        prod = self.coeffs[ii] * coerced.coeffs[jj]
        out = np.bincount(kk, weights=prod, minlength=self.space.n_terms)
        return JetScalar(self.space, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        coerced = self._coerce(other)
        if coerced is NotImplemented:
            return NotImplemented
        if coerced is None:
            return JetScalar(self.space, self.coeffs / float(other))
        return self * coerced._reciprocal()

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Real):
            return self._reciprocal() * float(other)
        return NotImplemented

    def __pow__(self, exponent):
        if not isinstance(exponent, numbers.Integral):
            raise JetError(f"jet exponent must be an integer, got {exponent!r}")
        exponent = int(exponent)
        if exponent < 0:
            return self._reciprocal() ** (-exponent)
        result = constant_jet(1.0, self.space.dim, self.space.order)
        base = self
        k = exponent
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def _reciprocal(self):
        u0 = self.value
        if u0 == 0.0:
            raise JetDomainError("divide", "division by a jet with zero constant term")
        # d^m (1/t) at u0 = (-1)^m m! / u0^(m+1)
        derivs = []
        c = 1.0
        for m in range(self.space.order + 1):
            derivs.append(c / u0 ** (m + 1))
            c *= -(m + 1)
        return _compose(self, derivs)

    def __repr__(self):
        return (
            f"JetScalar(dim={self.space.dim}, order={self.space.order}, "
            f"value={self.value!r})"
        )


def constant_jet(value: float, dim: int, order: int) -> JetScalar:
    space = jet_space(dim, order)
    coeffs = np.zeros(space.n_terms)
    coeffs[0] = float(value)
    return JetScalar(space, coeffs)


def lift_variable(value: float, var_index: int, dim: int, order: int) -> JetScalar:
    """Jet of the coordinate function ``x -> x[var_index]`` seeded at ``value``."""
    if order < 1:
        raise JetError("lifting a variable requires order >= 1")
    if not 0 <= var_index < dim:
        raise JetError(f"variable index {var_index} out of range for dim {dim}")
    space = jet_space(dim, order)
    coeffs = np.zeros(space.n_terms)
    coeffs[0] = float(value)
    unit = tuple(1 if i == var_index else 0 for i in range(dim))
    coeffs[space.position(unit)] = 1.0
    return JetScalar(space, coeffs)


def extract(jet: JetScalar, alpha) -> float:
    """Raw partial derivative ``d^alpha f = alpha! * coeffs[alpha]``."""
    alpha = tuple(alpha)
    if len(alpha) != jet.space.dim:
        raise JetError(
            f"multi-index length {len(alpha)} does not match dim {jet.space.dim}"
        )
    if sum(alpha) > jet.space.order:
        raise JetError(
            f"multi-index {alpha} exceeds truncation order {jet.space.order}"
        )
    p = jet.space.position(alpha)
    return float(jet.coeffs[p] * jet.space.alpha_factorial[p])


def derivative(jet: JetScalar, var: int) -> JetScalar:
    """Jet of ``df/dx_var``, one order lower in the same variables.

    Exact: the retained coefficients of the result are the true Taylor
    coefficients of the derivative function.
    """
    if jet.space.order < 1:
        raise JetError("cannot differentiate an order-0 jet")
    if not 0 <= var < jet.space.dim:
        raise JetError(f"variable index {var} out of range for dim {jet.space.dim}")
    src, factor = jet.space.deriv_map(var)
    target = jet_space(jet.space.dim, jet.space.order - 1)
    return JetScalar(target, jet.coeffs[src] * factor)


def truncated(jet: JetScalar, order: int) -> JetScalar:
    """Copy of ``jet`` truncated to a lower order.

    Graded ordering makes this a prefix slice of the coefficient array.
    """
    if order > jet.space.order:
        raise JetError(
            f"cannot raise truncation order from {jet.space.order} to {order}"
        )
    if order == jet.space.order:
        return jet
    target = jet_space(jet.space.dim, order)
    return JetScalar(target, jet.coeffs[: target.n_terms].copy())


def _compose(jet: JetScalar, taylor_derivs) -> JetScalar:
    """Univariate composition f(jet) from derivatives f^(m) at the
    constant term.  ``taylor_derivs[m]`` is the raw m-th derivative."""
    space = jet.space
    hat = jet.coeffs.copy()
    hat[0] = 0.0
    out = np.zeros(space.n_terms)
    out[0] = taylor_derivs[0]
    if not np.any(hat):
        return JetScalar(space, out)
    hat_jet = JetScalar(space, hat)
    power = hat_jet
    fact = 1.0
    for m in range(1, space.order + 1):
        fact *= m
        out += (taylor_derivs[m] / fact) * power.coeffs
        if m < space.order:
            power = power * hat_jet
    return JetScalar(space, out)


def exp(x):
    if isinstance(x, JetScalar):
        e0 = math.exp(x.value)
        return _compose(x, [e0] * (x.space.order + 1))
    return np.exp(x)


def log(x):
    if isinstance(x, JetScalar):
        u0 = x.value
        if u0 <= 0.0:
            raise JetDomainError("log", f"constant term {u0} is not positive")
        derivs = [math.log(u0)]
        for m in range(1, x.space.order + 1):
            derivs.append((-1.0) ** (m - 1) * math.factorial(m - 1) / u0**m)
        return _compose(x, derivs)
    return np.log(x)


def sin(x):
    if isinstance(x, JetScalar):
        s0, c0 = math.sin(x.value), math.cos(x.value)
        cycle = [s0, c0, -s0, -c0]
        return _compose(x, [cycle[m % 4] for m in range(x.space.order + 1)])
    return np.sin(x)


def cos(x):
    if isinstance(x, JetScalar):
        s0, c0 = math.sin(x.value), math.cos(x.value)
        cycle = [c0, -s0, -c0, s0]
        return _compose(x, [cycle[m % 4] for m in range(x.space.order + 1)])
    return np.cos(x)


def sqrt(x):
    if isinstance(x, JetScalar):
        u0 = x.value
        if u0 <= 0.0:
            raise JetDomainError("sqrt", f"constant term {u0} is not positive")
        # d^m sqrt at u0 = prod_{j<m}(1/2 - j) * u0^(1/2 - m)
        derivs = [math.sqrt(u0)]
        c = 1.0
        for m in range(1, x.space.order + 1):
            c *= 0.5 - (m - 1)
            derivs.append(c * u0 ** (0.5 - m))
        return _compose(x, derivs)
    return np.sqrt(x)


# relative floor below which a constant block counts as singular
_SINGULAR_RATIO = 1e-9


def jet_matrix_inverse(rows):
    """Inverse of a square matrix of jets sharing one space.

    The constant block is inverted numerically, then the full inverse is
    recovered by the Neumann/Horner recursion ``X <- B - B N X`` with
    ``B = A0^-1`` and ``N = A - A0``; ``N`` has no constant part, so
    ``order`` passes make the result exact in the truncated ring.
    """
    mat = [list(r) for r in rows]
    n = len(mat)
    if any(len(r) != n for r in mat):
        raise JetError("jet matrix must be square")
    space = mat[0][0].space
    if any(m.space is not space for r in mat for m in r):
        raise JetError("all matrix entries must share one jet space")

    a0 = np.array([[m.value for m in r] for r in mat])
    svals = np.linalg.svd(a0, compute_uv=False)
    if svals[-1] < _SINGULAR_RATIO * svals[0]:
        raise SingularJetMatrixError(float(svals[-1]))
    b = np.linalg.inv(a0)

    # N = A - A0 entrywise, constant parts zeroed
    n_mat = []
    for i in range(n):
        row = []
        for j in range(n):
            c = mat[i][j].coeffs.copy()
            c[0] = 0.0
            row.append(JetScalar(space, c))
        n_mat.append(row)

    def num_times_jets(num, jets):
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = np.zeros(space.n_terms)
                for k in range(n):
                    acc += num[i, k] * jets[k][j].coeffs
                row.append(JetScalar(space, acc))
            out.append(row)
        return out

    def jets_times_jets(a, bm):
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = a[i][0] * bm[0][j]
                for k in range(1, n):
                    acc = acc + a[i][k] * bm[k][j]
                row.append(acc)
            out.append(row)
        return out

    b_jets = [
        [constant_jet(b[i, j], space.dim, space.order) for j in range(n)]
        for i in range(n)
    ]
    x = b_jets
    for _ in range(space.order):
        nx = jets_times_jets(n_mat, x)
        bnx = num_times_jets(b, nx)
        x = [
            [
                JetScalar(space, b_jets[i][j].coeffs - bnx[i][j].coeffs)
                for j in range(n)
            ]
            for i in range(n)
        ]
    return x
