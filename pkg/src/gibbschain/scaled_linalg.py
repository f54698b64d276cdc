"""Overflow-safe arithmetic for huge nonnegative scalars, vectors and matrices.

Everything is stored in factored form: a mantissa array with entries in
[0, 1] (maximum entry exactly 1 unless the value is identically zero) times
exp(log_scale).  Products over chains of length 10^6 therefore never leave
the representable range; only the natural-log scale grows.

Conventions fixed here and relied on elsewhere:
  * scales are natural logs (display helpers convert to decimal),
  * after every public operation the mantissa is renormalized so its
    maximum entry is exactly 1,
  * matrix rows index the "from" state, columns the "to" state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN10 = math.log(10.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LogValue:
    """A nonnegative scalar held as its natural logarithm.

    ``is_zero`` marks an exact zero, in which case ``log`` is ignored.
    """

    log: float
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(0.0, is_zero=True)

    @classmethod
    def from_float(cls, x: float) -> "LogValue":
        if x < 0:
            raise ValueError("LogValue holds nonnegative scalars only")
        if x == 0:
            return cls.zero()
        return cls(math.log(x))

    @property
    def log10(self) -> float:
        if self.is_zero:
            return -math.inf
        return self.log / LN10

    def to_float(self) -> float:
        """Plain float value; overflows to inf for very large logs."""
        if self.is_zero:
            return 0.0
        try:
            return math.exp(self.log)
        except OverflowError:
            return math.inf

    def sci(self) -> str:
        """Decimal scientific display ``m.mmmmE+k`` with 5 significant digits."""
        if self.is_zero:
            return "0.0000E+00"
        exp10 = math.floor(self.log10)
        mant = 10.0 ** (self.log10 - exp10)
        if round(mant, 4) >= 10.0:
            mant /= 10.0
            exp10 += 1
        return f"{mant:.4f}E{exp10:+03d}"

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.is_zero or other.is_zero:
            return LogValue.zero()
        return LogValue(self.log + other.log)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.is_zero:
            return LogValue.zero()
        return LogValue(self.log - other.log)

    def __repr__(self) -> str:
        if self.is_zero:
            return "LogValue(0)"
        return f"LogValue({self.sci()}, ln={self.log:.15g})"


def _normalize(mant: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Scale an array so its max is 1; returns (array, log shift, is_zero)."""
    mx = float(mant.max()) if mant.size else 0.0
    if mx == 0.0:
        return mant, 0.0, True
    if mx == 1.0:
        return mant, 0.0, False
    return mant / mx, math.log(mx), False


@dataclass(frozen=True)
class ScaledVector:
    """Nonnegative vector stored as mantissa in [0, 1] times exp(log_scale)."""

    mantissa: np.ndarray
    log_scale: float
    orientation: str  # "row" or "column"

    def __post_init__(self):
        if self.orientation not in ("row", "column"):
            raise ValueError(f"bad orientation {self.orientation!r}")
        m = np.ascontiguousarray(self.mantissa, dtype=np.float64)
        if m.ndim != 1:
            raise ValueError("ScaledVector mantissa must be 1-d")
        if m.size and float(m.min()) < 0.0:
            raise ValueError("ScaledVector mantissa must be nonnegative")
        m, shift, zero = _normalize(m)
        object.__setattr__(self, "mantissa", _readonly(m))
        object.__setattr__(self, "log_scale", 0.0 if zero else self.log_scale + shift)

    @classmethod
    def ones(cls, n: int, orientation: str = "row") -> "ScaledVector":
        return cls(np.ones(n), 0.0, orientation)

    @classmethod
    def basis(cls, n: int, i: int, orientation: str = "column") -> "ScaledVector":
        v = np.zeros(n)
        v[i] = 1.0
        return cls(v, 0.0, orientation)

    @classmethod
    def from_log(cls, logs: np.ndarray, orientation: str = "row") -> "ScaledVector":
        logs = np.asarray(logs, dtype=np.float64)
        mx = float(logs.max())
        return cls(np.exp(logs - mx), mx, orientation)

    @classmethod
    def from_dense(cls, values, orientation: str = "row") -> "ScaledVector":
        return cls(np.asarray(values, dtype=np.float64), 0.0, orientation)

    @property
    def n(self) -> int:
        return self.mantissa.shape[0]

    @property
    def is_zero(self) -> bool:
        return bool(self.mantissa.max() == 0.0) if self.mantissa.size else True

    def represented(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.mantissa if not self.is_zero else np.zeros(self.n)

    def log_entries(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.mantissa) + self.log_scale

    def total(self) -> LogValue:
        """Sum of the entries as a LogValue."""
        s = float(self.mantissa.sum())
        if s == 0.0:
            return LogValue.zero()
        return LogValue(self.log_scale + math.log(s))


@dataclass(frozen=True)
class ScaledMatrix:
    """Nonnegative matrix stored as mantissa in [0, 1] times exp(log_scale).

    The invariant max(mantissa) == 1 (exact zeros excepted) is restored by
    the constructor, so every operation below may assume it.
    """

    mantissa: np.ndarray
    log_scale: float

    def __post_init__(self):
        m = np.ascontiguousarray(self.mantissa, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("ScaledMatrix mantissa must be 2-d")
        if m.size and float(m.min()) < 0.0:
            raise ValueError("ScaledMatrix mantissa must be nonnegative")
        m, shift, zero = _normalize(m)
        object.__setattr__(self, "mantissa", _readonly(m))
        object.__setattr__(self, "log_scale", 0.0 if zero else self.log_scale + shift)

    @classmethod
    def identity(cls, n: int) -> "ScaledMatrix":
        return cls(np.eye(n), 0.0)

    @classmethod
    def from_dense(cls, a) -> "ScaledMatrix":
        return cls(np.asarray(a, dtype=np.float64), 0.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mantissa.shape

    @property
    def is_zero(self) -> bool:
        return bool(self.mantissa.max() == 0.0) if self.mantissa.size else True

    def represented(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.mantissa

    def log_entries(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.mantissa) + self.log_scale


def from_log_table(h: np.ndarray) -> ScaledMatrix:
    """Entrywise exponential of a finite log table, in factored form.

    The factored representation is exact by construction: log_scale is the
    maximum entry of ``h`` and the mantissa is exp(h - max), so no entry
    ever overflows regardless of the magnitude of ``h``.
    """
    h = np.asarray(h, dtype=np.float64)
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite entry in log table")
    mx = float(h.max())
    return ScaledMatrix(np.exp(h - mx), mx)


def scaled_matmul(a: ScaledMatrix, b: ScaledMatrix) -> ScaledMatrix:
    """Product of two scaled matrices, renormalized to invariant form."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    prod = a.mantissa @ b.mantissa
    return ScaledMatrix(prod, a.log_scale + b.log_scale)


def scaled_matpow(a: ScaledMatrix, k: int) -> ScaledMatrix:
    """k-fold product of a square scaled matrix by repeated squaring."""
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix power requires a square matrix")
    if k < 0:
        raise ValueError("power must be nonnegative")
    result = ScaledMatrix.identity(a.shape[0])
    base = a
    while k:
        if k & 1:
            result = scaled_matmul(result, base)
        k >>= 1
        if k:
            base = scaled_matmul(base, base)
    return result


def rowvec_matmul(f: ScaledVector, m: ScaledMatrix) -> ScaledVector:
    """Row-vector times matrix, renormalized."""
    if f.orientation != "row":
        raise ValueError("left operand must be a row vector")
    if f.n != m.shape[0]:
        raise ValueError(f"dimension mismatch: {f.n} x {m.shape}")
    return ScaledVector(f.mantissa @ m.mantissa, f.log_scale + m.log_scale, "row")


def matmul_colvec(m: ScaledMatrix, b: ScaledVector) -> ScaledVector:
    """Matrix times column vector, renormalized."""
    if b.orientation != "column":
        raise ValueError("right operand must be a column vector")
    if m.shape[1] != b.n:
        raise ValueError(f"dimension mismatch: {m.shape} x {b.n}")
    return ScaledVector(m.mantissa @ b.mantissa, m.log_scale + b.log_scale, "column")


def vec_dot(f: ScaledVector, b: ScaledVector) -> LogValue:
    """Row . column contraction as a LogValue."""
    if f.orientation != "row" or b.orientation != "column":
        raise ValueError("dot requires a row vector and a column vector")
    if f.n != b.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {b.n}")
    s = float(f.mantissa @ b.mantissa)
    if s == 0.0:
        return LogValue.zero()
    return LogValue(f.log_scale + b.log_scale + math.log(s))


def quadratic_form(f: ScaledVector, ms, b: ScaledVector) -> LogValue:
    """Evaluate f . (prod of ms) . b by successive vector sweeps.

    The full matrix product is never materialized; cost is O(len(ms) * N^2).
    The sweep runs left to right, which fixes the reduction order.
    """
    v = f
    for m in ms:
        v = rowvec_matmul(v, m)
    return vec_dot(v, b)


def analytic_eig_2x2(alpha: float, beta: float) -> tuple[float, float, float]:
    """Closed-form eigenvalues of [[1, 1], [e^alpha, e^(alpha+beta)]].

    Returns (lambda1, lambda2, discriminant) with lambda1 <= lambda2.
    The discriminant (1 - e^(alpha+beta))^2 + 4 e^alpha is always positive,
    so both eigenvalues are real.
    """
    x = math.exp(alpha + beta)
    delta = (1.0 - x) ** 2 + 4.0 * math.exp(alpha)
    root = math.sqrt(delta)
    lam1 = (1.0 + x - root) / 2.0
    lam2 = (1.0 + x + root) / 2.0
    return lam1, lam2, delta


def _signed_logsumexp(logs, signs) -> tuple[float, float]:
    """log(|sum(signs * exp(logs))|) and the sign of the sum."""
    logs = np.asarray(logs, dtype=np.float64)
    signs = np.asarray(signs, dtype=np.float64)
    mx = float(logs.max())
    if not np.isfinite(mx):
        return -math.inf, 0.0
    total = float(np.sum(signs * np.exp(logs - mx)))
    if total == 0.0:
        return -math.inf, 0.0
    return mx + math.log(abs(total)), math.copysign(1.0, total)


def closed_form_constant_2x2(alpha: float, beta: float, length: int) -> LogValue:
    """Normalizing constant of the binary auto-logistic chain in closed form.

    The chain has states {0, 1}, per-site weight alpha on state 1 and pair
    weight beta on adjacent (1, 1); both boundary sites carry the full
    per-site weight.  Evaluated through the analytic eigenvalues so the
    cost is independent of the chain length; all arithmetic is carried in
    signed log space because lambda2^(T-1) overflows for long chains.
    """
    if length < 2:
        raise ValueError("chain length must be at least 2")
    lam1, lam2, delta = analytic_eig_2x2(alpha, beta)
    root = math.sqrt(delta)
    ea = math.exp(alpha)
    x = math.exp(alpha + beta)
    t = length - 1
    # C = [ l1^t (l2-1)(1+ea) + l2^t (1-l1)(1+ea)
    #       + ea (1+x) l2^t - ea (1+x) l1^t ] / sqrt(delta)
    coeffs = [(lam2 - 1.0) * (1.0 + ea), (1.0 - lam1) * (1.0 + ea),
              ea * (1.0 + x), -ea * (1.0 + x)]
    powers = [lam1, lam2, lam2, lam1]
    logs, signs = [], []
    for c, lam in zip(coeffs, powers):
        if c == 0.0 or lam == 0.0:
            continue
        logs.append(math.log(abs(c)) + t * math.log(abs(lam)))
        signs.append(math.copysign(1.0, c) * (math.copysign(1.0, lam) ** t))
    log_abs, sign = _signed_logsumexp(logs, signs)
    if sign <= 0.0:
        raise ArithmeticError("closed-form constant lost positivity")
    return LogValue(log_abs - math.log(root))


def matpow_via_eig(a: ScaledMatrix, k: int) -> ScaledMatrix:
    """Matrix power through a dense eigendecomposition.

    This is the generic "diagonalize first" route; the dense solver is
    numpy's.  The dominant eigenvalue is factored out so powers of very
    long chains stay in range.  Requires a diagonalizable matrix; tiny
    negative entries from rounding are clipped to zero.
    """
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix power requires a square matrix")
    if k == 0:
        return ScaledMatrix.identity(a.shape[0])
    if a.is_zero:
        return ScaledMatrix(np.zeros(a.shape), 0.0)
    w, v = np.linalg.eig(a.mantissa)
    rho = float(np.abs(w).max())
    scaled = (w / rho) ** k
    mk = (v * scaled) @ np.linalg.inv(v)
    mk = np.real(mk)
    np.clip(mk, 0.0, None, out=mk)
    return ScaledMatrix(mk, k * (a.log_scale + math.log(rho)))


@dataclass(frozen=True)
class RandomizedFactorization:
    """Low-rank factorization P diag(d) Q^T of a scaled matrix.

    ``left`` (rows x k) and ``right`` (cols x k) have orthonormal columns,
    ``singular_values`` is nonnegative and nonincreasing; the represented
    matrix is approximately exp(log_scale) * left @ diag @ right.T.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    log_scale: float

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def reconstruct_mantissa(self) -> np.ndarray:
        """Dense reconstruction on the mantissa scale (before exp(log_scale))."""
        return (self.left * self.singular_values) @ self.right.T

    def relative_frobenius_error(self, a: ScaledMatrix) -> float:
        """|| A - P D Q^T ||_F / || A ||_F on the common mantissa scale."""
        diff = a.mantissa - self.reconstruct_mantissa()
        denom = float(np.linalg.norm(a.mantissa))
        return float(np.linalg.norm(diff)) / denom if denom else 0.0


def randomized_factorize(a: ScaledMatrix, rank: int, oversample: int = 10,
                         rng=None) -> RandomizedFactorization:
    """Randomized low-rank factorization of a scaled matrix.

    A Gaussian random projection finds an orthonormal basis O that nearly
    spans the range, the small matrix B = O^T A is factored exactly, and
    the left factor is lifted back through O.  Deterministic for a fixed
    seed.

    Parameters
    ----------
    rank : target rank (the returned rank may be smaller if the matrix
        has fewer nonzero singular values)
    oversample : extra random probes beyond ``rank``
    rng : ``numpy.random.Generator``, seed int, or None
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    rows, cols = a.shape
    probes = rank + oversample
    if rank < 1 or probes > min(rows, cols):
        raise ValueError("rank parameters out of range: need 1 <= rank and "
                         f"rank + oversample <= {min(rows, cols)}")
    sample = rng.standard_normal((cols, probes))
    basis, _ = np.linalg.qr(a.mantissa @ sample)         # range finder
    small = basis.T @ a.mantissa                         # (probes, cols)
    u, d, vt = np.linalg.svd(small, full_matrices=False)
    keep = min(rank, int(np.count_nonzero(d > 0.0)))
    left = basis @ u[:, :keep]
    return RandomizedFactorization(
        left=_readonly(left),
        singular_values=_readonly(d[:keep]),
        right=_readonly(vt[:keep].T),
        log_scale=a.log_scale,
    )
