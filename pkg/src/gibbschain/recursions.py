"""Transfer-matrix recursions: constants, marginals, and window lifting.

The chain's per-step transfer matrices are the entrywise exponentials of
its log tables, kept in scaled form.  Constants come from the ones-vector
quadratic form over the full product; marginals keep only the free sites
and contract everything between them into segment products.  Homogeneous
interiors switch to repeated squaring when that is cheaper than a sweep.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from gibbschain import _kernels
from gibbschain.errors import CapacityError, ModelError
from gibbschain.models import ChainModel, RRangeModel
from gibbschain.scaled_linalg import (LogValue, ScaledMatrix, ScaledVector,
                                      from_log_table, matmul_colvec,
                                      rowvec_matmul, scaled_matmul,
                                      scaled_matpow, vec_dot)

DEFAULT_TABLE_CAP = 1 << 20


def _scaled_steps(m: ChainModel):
    """Stack of distinct transfer mantissas, their log scales, step index."""
    mats = [from_log_table(t) for t in m.tables]
    mant = np.ascontiguousarray(np.stack([s.mantissa for s in mats]))
    logs = np.array([s.log_scale for s in mats])
    return mant, logs, m.step_index()


def _transfer(m: ChainModel, s: int) -> ScaledMatrix:
    return from_log_table(m.log_potential(s))


def _prefer_power(m: ChainModel) -> bool:
    # sweep costs T*N^2, squaring costs N^3*log2(T); pick the cheaper
    if not m.shared_interior or m.length < 4:
        return False
    n, t = m.n_states, m.length
    return t * n * n >= n ** 3 * math.log2(t)


def normalizing_constant(m: ChainModel, method: str = "auto") -> LogValue:
    """Sum of exp(energy) over all N^T configurations.

    ``method`` is "sweep" (vector sweep over the steps, O(T N^2)),
    "power" (repeated squaring of the shared interior table, O(N^3 log T),
    homogeneous-interior chains only), or "auto" to pick by cost.
    """
    if method == "auto":
        method = "power" if _prefer_power(m) else "sweep"
    if method == "power":
        if not m.shared_interior:
            raise ModelError("power method needs a shared-interior chain")
        interior = from_log_table(m.tables[0])
        final = from_log_table(m.tables[-1])
        v = ScaledVector.ones(m.n_states, "row")
        v = rowvec_matmul(v, scaled_matpow(interior, m.length - 2))
        v = rowvec_matmul(v, final)
        return vec_dot(v, ScaledVector.ones(m.n_states, "column"))
    if method != "sweep":
        raise ModelError(f"unknown method {method!r}")
    mant, logs, idx = _scaled_steps(m)
    v, acc = _kernels.sweep_row_final(mant, logs, idx, np.ones(m.n_states))
    s = float(v.sum())
    if s == 0.0 or not np.isfinite(acc):
        return LogValue.zero()
    return LogValue(acc + math.log(s))


@dataclass(frozen=True)
class BackwardVectors:
    """Column vectors B_T..B_1 with B_T = ones and B_{t-1} = H_{t-1} B_t."""

    vectors: tuple  # vectors[t-1] is B_t

    def at(self, t: int) -> ScaledVector:
        return self.vectors[t - 1]

    @property
    def length(self) -> int:
        return len(self.vectors)

    def constant(self) -> LogValue:
        """1^T B_1, the normalizing constant."""
        b1 = self.vectors[0]
        return vec_dot(ScaledVector.ones(b1.n, "row"), b1)


@dataclass(frozen=True)
class ForwardVectors:
    """Row vectors F_1..F_T with F_1 = ones and F_t = F_{t-1} H_{t-1}."""

    vectors: tuple  # vectors[t-1] is F_t

    def at(self, t: int) -> ScaledVector:
        return self.vectors[t - 1]

    @property
    def length(self) -> int:
        return len(self.vectors)

    def constant(self) -> LogValue:
        """F_T 1, the normalizing constant."""
        ft = self.vectors[-1]
        return vec_dot(ft, ScaledVector.ones(ft.n, "column"))


def backward_vectors(m: ChainModel) -> BackwardVectors:
    mant, logs, idx = _scaled_steps(m)
    vecs, accs = _kernels.sweep_col_collect(mant, logs, idx[::-1].copy(),
                                            np.ones(m.n_states))
    out = [ScaledVector(vecs[i], accs[i], "column")
           for i in range(len(accs) - 1, -1, -1)]
    return BackwardVectors(tuple(out))


def forward_vectors(m: ChainModel) -> ForwardVectors:
    mant, logs, idx = _scaled_steps(m)
    vecs, accs = _kernels.sweep_row_collect(mant, logs, idx, np.ones(m.n_states))
    out = [ScaledVector(vecs[i], accs[i], "row") for i in range(len(accs))]
    return ForwardVectors(tuple(out))


def prefix_marginal(m: ChainModel, t: int, prefix,
                    backward: BackwardVectors | None = None) -> float:
    """Probability of observing ``prefix`` at sites 1..t.

    Equals C^-1 * prod of the step weights along the prefix * B_t(z_t);
    pass a precomputed ``backward`` set when issuing many queries.
    """
    if not 1 <= t <= m.length:
        raise ModelError(f"prefix length {t} out of range 1..{m.length}")
    prefix = tuple(int(v) for v in prefix)
    if len(prefix) != t:
        raise ModelError(f"expected {t} states, got {len(prefix)}")
    for v in prefix:
        if not 0 <= v < m.n_states:
            raise ModelError(f"state {v} out of range 0..{m.n_states - 1}")
    if backward is None:
        backward = backward_vectors(m)
    log_num = 0.0
    for s in range(1, t):
        log_num += float(m.log_potential(s)[prefix[s - 1], prefix[s]])
    bt = backward.at(t)
    tail = float(bt.mantissa[prefix[-1]])
    if tail == 0.0:
        return 0.0
    log_num += math.log(tail) + bt.log_scale
    log_c = backward.constant()
    return math.exp(log_num - log_c.log)


def bilateral_conditional(m: ChainModel, t: int, z_left: int, z_right: int) -> np.ndarray:
    """Conditional law of site t given both neighbours (interior sites).

    For a pairwise chain the conditional given everything else depends on
    the two adjacent sites only; this is its closed form.
    """
    if not 2 <= t <= m.length - 1:
        raise ModelError(f"site {t} is not interior")
    w = m.log_potential(t - 1)[z_left, :] + m.log_potential(t)[:, z_right]
    w = w - w.max()
    p = np.exp(w)
    return p / p.sum()


def _segment_product(m: ChainModel, lo: int, hi: int) -> ScaledMatrix:
    """Product of the step matrices for steps lo..hi-1 (sites lo -> hi)."""
    if m.shared_interior:
        interior = from_log_table(m.tables[0])
        if hi == m.length:  # segment ends with the final step
            out = scaled_matpow(interior, m.length - 1 - lo)
            return scaled_matmul(out, from_log_table(m.tables[-1]))
        return scaled_matpow(interior, hi - lo)
    out = _transfer(m, lo)
    for s in range(lo + 1, hi):
        out = scaled_matmul(out, _transfer(m, s))
    return out


def _left_log_vector(m: ChainModel, site: int) -> np.ndarray:
    """Log entries of 1^T prod_{s<site} H_s (ones when site is 1)."""
    if site == 1:
        return np.zeros(m.n_states)
    mant, logs, idx = _scaled_steps(m)
    v, acc = _kernels.sweep_row_final(mant, logs, idx[:site - 1], np.ones(m.n_states))
    with np.errstate(divide="ignore"):
        return np.log(v) + acc


def _right_log_vector(m: ChainModel, site: int) -> np.ndarray:
    """Log entries of prod_{s>=site} H_s 1 (ones when site is T)."""
    if site == m.length:
        return np.zeros(m.n_states)
    mant, logs, idx = _scaled_steps(m)
    v, acc = _kernels.sweep_col_final(mant, logs, idx[site - 1:][::-1].copy(),
                                      np.ones(m.n_states))
    with np.errstate(divide="ignore"):
        return np.log(v) + acc


@dataclass(frozen=True)
class MarginalTable:
    """Probability table over the configurations of a site subset."""

    sites: tuple
    probs: np.ndarray
    state_labels: tuple | None = None

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != len(sites):
            raise ModelError("probability table rank must match number of sites")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-10:
            raise ModelError(f"marginal table sums to {total}, not 1")
        if float(probs.min()) < -1e-12 or float(probs.max()) > 1.0 + 1e-12:
            raise ModelError("marginal table entry outside [0, 1]")
        probs = np.clip(probs, 0.0, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    def prob(self, config) -> float:
        config = tuple(int(v) for v in config)
        if len(config) != len(self.sites):
            raise ModelError("configuration length must match number of sites")
        return float(self.probs[config])

    def _label(self, state: int) -> str:
        if self.state_labels is not None:
            return self.state_labels[state]
        return str(state)

    def to_csv(self) -> str:
        """One row per configuration plus a trailing checksum row."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"site_{s}" for s in self.sites] + ["probability"])
        for config in np.ndindex(*self.probs.shape):
            writer.writerow([self._label(v) for v in config]
                            + [f"{float(self.probs[config]):.15g}"])
        writer.writerow(["sum"] + [""] * (len(self.sites) - 1)
                        + [f"{float(self.probs.sum()):.15g}"])
        return buf.getvalue()


def subset_marginal(m: ChainModel, sites, cap: int = DEFAULT_TABLE_CAP,
                    ) -> MarginalTable:
    """Exact marginal law on an increasing subset of sites.

    Sites before the first and after the last requested site are contracted
    with ones vectors; the gaps in between are contracted into segment
    products, so only the |S|-dimensional table is ever materialized.
    """
    sites = tuple(int(s) for s in sites)
    if not sites:
        raise ModelError("site subset must be nonempty")
    if any(b <= a for a, b in zip(sites, sites[1:])):
        raise ModelError("sites must be strictly increasing")
    if sites[0] < 1 or sites[-1] > m.length:
        raise ModelError(f"sites must lie in 1..{m.length}")
    q = len(sites)
    if m.n_states ** q > cap:
        raise CapacityError(f"marginal table of {m.n_states}^{q} entries "
                            f"exceeds the cap {cap}")
    log_tab = _left_log_vector(m, sites[0]).reshape((m.n_states,) + (1,) * (q - 1))
    for i in range(q - 1):
        seg = _segment_product(m, sites[i], sites[i + 1])
        shape = (1,) * i + (m.n_states, m.n_states) + (1,) * (q - 2 - i)
        log_tab = log_tab + seg.log_entries().reshape(shape)
    log_tab = log_tab + _right_log_vector(m, sites[-1]).reshape(
        (1,) * (q - 1) + (m.n_states,))
    mx = float(log_tab.max())
    w = np.exp(log_tab - mx)
    return MarginalTable(sites, w / w.sum(), m.state_labels)


# ---------------------------------------------------------------------------
# window lifting for r-range models


@dataclass(frozen=True)
class LiftedChain:
    """A window-lifted chain in direct transfer-matrix form.

    States are (r+1)-site windows y_s = (z_s, ..., z_{s+r}); the lifted
    chain has T - r positions.  ``initial`` carries the first window
    factor as a row vector and each step matrix pairs the shift indicator
    with the next window factor, so every factor of the underlying model
    appears exactly once in the product.  Zero entries (shift violations)
    are exact zeros, which is why this is not a log-table chain model.
    """

    n_states: int        # number of lifted states, N^(r+1)
    length: int          # number of windows, T - r
    base_states: int
    r: int
    initial: ScaledVector
    steps: tuple         # length-1 when shared
    shared: bool

    def step(self, s: int) -> ScaledMatrix:
        """Transfer matrix from window s to window s+1, s in 1..length-1."""
        if not 1 <= s <= self.length - 1:
            raise ModelError(f"step {s} out of range 1..{self.length - 1}")
        return self.steps[0] if self.shared else self.steps[s - 1]

    def normalizing_constant(self) -> LogValue:
        v = self.initial
        for s in range(1, self.length):
            v = rowvec_matmul(v, self.step(s))
        return vec_dot(v, ScaledVector.ones(self.n_states, "column"))

    def window_marginal(self, t: int) -> MarginalTable:
        """Marginal law of the original sites (t, ..., t+r)."""
        if not 1 <= t <= self.length:
            raise ModelError(f"window {t} out of range 1..{self.length}")
        left = self.initial
        for s in range(1, t):
            left = rowvec_matmul(left, self.step(s))
        right = ScaledVector.ones(self.n_states, "column")
        for s in range(self.length - 1, t - 1, -1):
            right = matmul_colvec(self.step(s), right)
        log_entries = left.log_entries() + right.log_entries()
        mx = float(log_entries.max())
        w = np.exp(log_entries - mx)
        probs = (w / w.sum()).reshape((self.base_states,) * (self.r + 1))
        return MarginalTable(tuple(range(t, t + self.r + 1)), probs)


def lift_r_range(m: RRangeModel, cap: int = DEFAULT_TABLE_CAP) -> LiftedChain:
    """Lift window factors onto a chain over (r+1)-tuples of states.

    The first factor becomes the initial row vector; the step matrix into
    window s carries the shift indicator (consecutive windows must agree
    on their overlap) times that window's factor.  The constant of the
    lifted chain equals the sum of the factor products over all original
    configurations, which is the defining correctness property.
    """
    n, r = m.n_states, m.r
    lifted_n = n ** (r + 1)
    if lifted_n > cap:
        raise CapacityError(f"lifted alphabet of {lifted_n} states exceeds cap {cap}")
    initial = ScaledVector.from_log(m.factor(1).ravel(), "row")

    tail = n ** r
    rows = np.arange(lifted_n, dtype=np.int64)
    # window y' follows y iff y' = (y mod N^r) * N + w for some symbol w
    succ = (rows % tail)[:, None] * n + np.arange(n, dtype=np.int64)[None, :]

    def step_matrix(factor: np.ndarray) -> ScaledMatrix:
        flat = factor.ravel()
        mx = float(flat.max())
        col = np.exp(flat - mx)
        mat = np.zeros((lifted_n, lifted_n))
        mat[rows[:, None], succ] = col[succ]
        return ScaledMatrix(mat, mx)

    if m.shared:
        steps = (step_matrix(m.factors[0]),)
    else:
        steps = tuple(step_matrix(m.factor(s)) for s in range(2, m.length - r + 1))
    return LiftedChain(lifted_n, m.length - r, n, r, initial, steps, m.shared)
