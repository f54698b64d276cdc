"""Marginals through future-conditional contribution vectors.

For a singleton+pair chain, the conditional law of a prefix given the
future depends on the next site only.  The contribution vector of a prefix
holds, per candidate next state u, the exponential of the prefix energy
augmented by its interaction with u; it updates by a single row pick and
rescale per site.  Pairing contribution vectors with a backward-swept
family of selector vectors yields prefix marginals and an alternative
route to the normalizing constant.

The step matrices used here are H_t(u, v) = exp(theta_t(u) + psi_t(u, v))
for t = 1..T, with psi at the last site identically zero, so H_T has all
columns equal to exp(theta_T).  The backward family starts from the first
basis vector: because the final contribution vector is constant in u, any
convex selector works, and the basis vector makes H_T D_T collapse to the
exp(theta_T) column.

The same scheme runs over pair-of-sites lookahead for chains whose energy
couples sites two steps apart ("2-lag" models); there the contribution
vectors live on N^2 components and the recursion is carried directly in
log space.
"""

from __future__ import annotations

import math

import numpy as np

from gibbschain import _kernels
from gibbschain.errors import CapacityError, ModelError
from gibbschain.models import SingletonPairModel, _as_table, _check_labels
from gibbschain.scaled_linalg import (LogValue, ScaledMatrix, ScaledVector,
                                      from_log_table, rowvec_matmul, vec_dot)


def _step_log_table(m: SingletonPairModel, t: int) -> np.ndarray:
    """log H_t = theta_t(u) + psi_t(u, v); psi vanishes at t = T."""
    if t == m.length:
        return np.broadcast_to(m.theta(t)[:, None], (m.n_states, m.n_states))
    return m.theta(t)[:, None] + m.psi(t)


def d_vectors(m: SingletonPairModel) -> list[ScaledVector]:
    """Backward selector family: D_T is the first basis vector and
    D_{t-1} = H_t D_t.  Returned list is indexed so that [t-1] is D_t."""
    n, t_max = m.n_states, m.length
    # H_T D_T is the exp(theta_T) column; sweep the remaining steps
    start = np.exp(m.theta(t_max) - m.theta(t_max).max())
    start_log = float(m.theta(t_max).max())
    if m.shared and t_max > 2:
        mat = from_log_table(_step_log_table(m, 2))
        mant = np.ascontiguousarray(mat.mantissa[None, :, :])
        logs = np.array([mat.log_scale])
        idx = np.zeros(t_max - 2, dtype=np.int64)
    else:
        mats = [from_log_table(_step_log_table(m, t)) for t in range(2, t_max)]
        if mats:
            mant = np.ascontiguousarray(np.stack([s.mantissa for s in mats]))
            logs = np.array([s.log_scale for s in mats])
        else:
            mant = np.zeros((0, n, n))
            logs = np.zeros(0)
        idx = np.arange(t_max - 2, dtype=np.int64)[::-1].copy()
    vecs, accs = _kernels.sweep_col_collect(mant, logs, idx, start)
    out = [ScaledVector(vecs[i], accs[i] + start_log, "column")
           for i in range(len(accs) - 1, -1, -1)]
    out.append(ScaledVector.basis(n, 0, "column"))  # D_T
    return out


def gamma_init(m: SingletonPairModel, z1: int) -> ScaledVector:
    """Contribution vector of the length-1 prefix (z1)."""
    if not 0 <= z1 < m.n_states:
        raise ModelError(f"state {z1} out of range 0..{m.n_states - 1}")
    return ScaledVector.from_log(_step_log_table(m, 1)[z1, :], "row")


def gamma_step(g: ScaledVector, z_t: int, m: SingletonPairModel, t: int) -> ScaledVector:
    """Extend a contribution vector by site t taking state z_t.

    Picks component z_t of the previous vector and rescales row z_t of the
    step matrix H_t.
    """
    if not 2 <= t <= m.length:
        raise ModelError(f"site {t} out of range 2..{m.length}")
    if not 0 <= z_t < m.n_states:
        raise ModelError(f"state {z_t} out of range 0..{m.n_states - 1}")
    pick = float(g.mantissa[z_t])
    row = _step_log_table(m, t)[z_t, :]
    if pick == 0.0:
        return ScaledVector(np.zeros(m.n_states), 0.0, "row")
    return ScaledVector.from_log(row + (math.log(pick) + g.log_scale), "row")


def gamma_vector(m: SingletonPairModel, prefix) -> ScaledVector:
    """Contribution vector of an arbitrary prefix."""
    prefix = tuple(int(v) for v in prefix)
    if not 1 <= len(prefix) <= m.length:
        raise ModelError(f"prefix length must be 1..{m.length}")
    g = gamma_init(m, prefix[0])
    for t, z_t in enumerate(prefix[1:], start=2):
        g = gamma_step(g, z_t, m, t)
    return g


def constant_via_future(m: SingletonPairModel) -> LogValue:
    """Normalizing constant from the backward selector sweep.

    Equals ones . H_1 . D_1; the product H_2 ... H_T D_T is exactly the
    selector family's D_1.
    """
    d1 = d_vectors(m)[0]
    ones = ScaledVector.ones(m.n_states, "row")
    row = rowvec_matmul(ones, from_log_table(_step_log_table(m, 1)))
    return vec_dot(row, d1)


def marginal_via_future(m: SingletonPairModel, t: int, prefix,
                        dvecs: list[ScaledVector] | None = None) -> float:
    """Probability of the prefix at sites 1..t via contribution vectors."""
    prefix = tuple(int(v) for v in prefix)
    if len(prefix) != t:
        raise ModelError(f"expected {t} states, got {len(prefix)}")
    if dvecs is None:
        dvecs = d_vectors(m)
    g = gamma_vector(m, prefix)
    num = vec_dot(g, dvecs[t - 1])
    if num.is_zero:
        return 0.0
    ones = ScaledVector.ones(m.n_states, "row")
    row = rowvec_matmul(ones, from_log_table(_step_log_table(m, 1)))
    denom = vec_dot(row, dvecs[0])
    return math.exp(num.log - denom.log)


# ---------------------------------------------------------------------------
# chains with two-step lookahead


class TwoLagModel:
    """Chain energy with per-site terms plus pair terms at lags 1 and 2.

    Pair tables beyond the chain end are identically zero, hence absent:
    there are T-1 lag-1 tables and T-2 lag-2 tables.
    """

    def __init__(self, n_states: int, length: int, thetas, psi1, psi2, *,
                 state_labels=None):
        if n_states < 2:
            raise ModelError("n_states must be at least 2")
        if length < 3:
            raise ModelError("length must be at least 3")
        self.n_states = n_states
        self.length = length
        self.thetas = tuple(_as_table(t, (n_states,), f"site vector {i}")
                            for i, t in enumerate(thetas, start=1))
        self.psi1 = tuple(_as_table(p, (n_states, n_states), f"lag-1 table {i}")
                          for i, p in enumerate(psi1, start=1))
        self.psi2 = tuple(_as_table(p, (n_states, n_states), f"lag-2 table {i}")
                          for i, p in enumerate(psi2, start=1))
        if len(self.thetas) != length:
            raise ModelError(f"expected {length} site vectors")
        if len(self.psi1) != length - 1:
            raise ModelError(f"expected {length - 1} lag-1 tables")
        if len(self.psi2) != length - 2:
            raise ModelError(f"expected {length - 2} lag-2 tables")
        self.state_labels = _check_labels(state_labels, n_states)

    def energy(self, z) -> float:
        z = tuple(int(v) for v in z)
        if len(z) != self.length:
            raise ModelError(f"configuration length {len(z)} != {self.length}")
        total = 0.0
        for s in range(self.length):
            total += float(self.thetas[s][z[s]])
        for s in range(self.length - 1):
            total += float(self.psi1[s][z[s], z[s + 1]])
        for s in range(self.length - 2):
            total += float(self.psi2[s][z[s], z[s + 2]])
        return total


def _two_lag_gamma_log(m: TwoLagModel, prefix) -> np.ndarray:
    """Log contribution table over the two lookahead states (u, v).

    Entry (u, v) is the prefix energy plus its interaction with the next
    two sites taking states (u, v); interactions past the chain end are
    zero by the boundary convention.
    """
    n, t_max = m.n_states, m.length
    z1 = prefix[0]
    g = np.full((n, n), float(m.thetas[0][z1]))
    g += m.psi1[0][z1, :][:, None]
    g += m.psi2[0][z1, :][None, :]
    for t, z_t in enumerate(prefix[1:], start=2):
        g = g[z_t, :].copy()[:, None] + float(m.thetas[t - 1][z_t]) \
            + (m.psi1[t - 1][z_t, :][:, None] if t <= t_max - 1 else 0.0) \
            + (m.psi2[t - 1][z_t, :][None, :] if t <= t_max - 2 else 0.0)
    return g


def _two_lag_d_log(m: TwoLagModel) -> list[np.ndarray]:
    """Backward selector tables over (u, v), carried in log space.

    [t-1] holds log D_t; D_T selects the (0, 0) component and
    D_{t-1}(w, a) = sum_v exp(theta_t(w) + psi1_t(w, a) + psi2_t(w, v))
    D_t(a, v).
    """
    n, t_max = m.n_states, m.length
    d = np.full((n, n), -np.inf)
    d[0, 0] = 0.0
    out = [d]
    for t in range(t_max, 1, -1):
        theta = m.thetas[t - 1]
        p1 = m.psi1[t - 1] if t <= t_max - 1 else np.zeros((n, n))
        p2 = m.psi2[t - 1] if t <= t_max - 2 else np.zeros((n, n))
        # inner[w, a] = logsumexp_v(p2[w, v] + d[a, v])
        stack = p2[:, None, :] + d[None, :, :]
        mx = stack.max(axis=2, keepdims=True)
        safe = np.where(np.isfinite(mx), mx, 0.0)
        with np.errstate(divide="ignore"):
            inner = np.log(np.exp(stack - safe).sum(axis=2)) + safe[:, :, 0]
        new = theta[:, None] + p1 + inner
        out.append(new)
        d = new
    out.reverse()
    return out


def two_lag_constant(m: TwoLagModel, cap: int = 1 << 20) -> LogValue:
    """Normalizing constant of a 2-lag chain via the lookahead recursion."""
    if m.n_states ** 2 > cap:
        raise CapacityError(f"lookahead table of {m.n_states ** 2} entries "
                            f"exceeds cap {cap}")
    d1 = _two_lag_d_log(m)[0]
    n = m.n_states
    # sum over z1 of the initial contribution, contracted with D_1
    first = np.full((n, n, n), -np.inf)
    for z1 in range(n):
        first[z1] = _two_lag_gamma_log(m, (z1,))
    tot = first + d1[None, :, :]
    mx = float(tot.max())
    return LogValue(mx + math.log(np.exp(tot - mx).sum()))


def two_lag_marginal(m: TwoLagModel, t: int, prefix, cap: int = 1 << 20) -> float:
    """Probability of the prefix at sites 1..t of a 2-lag chain."""
    if m.n_states ** 2 > cap:
        raise CapacityError(f"lookahead table of {m.n_states ** 2} entries "
                            f"exceeds cap {cap}")
    prefix = tuple(int(v) for v in prefix)
    if len(prefix) != t or not 1 <= t <= m.length:
        raise ModelError(f"expected a prefix of length t in 1..{m.length}")
    dlogs = _two_lag_d_log(m)
    g = _two_lag_gamma_log(m, prefix)
    tot = g + dlogs[t - 1]
    mx = float(tot.max())
    if not np.isfinite(mx):
        return 0.0
    log_num = mx + math.log(np.exp(tot - mx).sum())
    return math.exp(log_num - two_lag_constant(m).log)
