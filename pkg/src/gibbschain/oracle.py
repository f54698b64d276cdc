"""Brute-force ground truth by exhaustive enumeration.

Everything here works from per-configuration energies (table lookups and
bit counts), never from matrix algebra, so it is an independent check on
the transfer recursions.  Sums are accumulated as a streaming log-sum-exp
with running-max rescaling, in lexicographic configuration order (last
site fastest), so results are reproducible and trustworthy far beyond the
double-precision range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gibbschain import _kernels
from gibbschain.errors import CapacityError, ModelError
from gibbschain.models import (ChainModel, RRangeModel, SingletonPairModel,
                               SpatialIsingModel, to_chain_form)
from gibbschain.recursions import MarginalTable
from gibbschain.scaled_linalg import LogValue


@dataclass(frozen=True)
class EnumerationBudget:
    """Hard cap on the number of configurations an enumeration may visit."""

    max_configs: int = 1 << 24

    def check(self, count: int, what: str = "enumeration") -> None:
        if count > self.max_configs:
            raise CapacityError(
                f"{what} needs {count} configurations, budget is {self.max_configs}")


DEFAULT_BUDGET = EnumerationBudget()


def config_count(m) -> int:
    if isinstance(m, SpatialIsingModel):
        return 1 << (m.m * m.T)
    return m.n_states ** m.length


def _python_log_constant(energy_fn, n_states: int, length: int) -> float:
    """Reference streaming enumeration; used to validate the kernels."""
    z = [0] * length
    m_run, s_run = -math.inf, 0.0
    for _ in range(n_states ** length):
        e = energy_fn(z)
        if e <= m_run:
            s_run += math.exp(e - m_run)
        else:
            s_run = s_run * math.exp(m_run - e) + 1.0
            m_run = e
        t = length - 1
        while t >= 0:
            z[t] += 1
            if z[t] == n_states:
                z[t] = 0
                t -= 1
            else:
                break
    return m_run + math.log(s_run)


def brute_constant(m, budget: EnumerationBudget | None = None) -> LogValue:
    """Normalizing constant by exhaustive summation of exp(energy)."""
    budget = budget or DEFAULT_BUDGET
    budget.check(config_count(m), "constant enumeration")
    if isinstance(m, SingletonPairModel):
        m = to_chain_form(m)
    if isinstance(m, ChainModel):
        stack = np.ascontiguousarray(np.stack(m.tables))
        log_c = _kernels.brute_chain(stack, m.step_index(), m.n_states, m.length)
        return LogValue(float(log_c))
    if isinstance(m, RRangeModel):
        stack = np.ascontiguousarray(np.stack([f.ravel() for f in m.factors]))
        if m.shared:
            idx = np.zeros(m.length - m.r, dtype=np.int64)
        else:
            idx = np.arange(m.length - m.r, dtype=np.int64)
        log_c = _kernels.brute_rrange(stack, idx, m.n_states, m.length, m.r)
        return LogValue(float(log_c))
    if isinstance(m, SpatialIsingModel):
        log_c = _kernels.brute_spatial(m.m, m.T, m.alpha, m.beta, m.delta)
        return LogValue(float(log_c))
    raise ModelError(f"cannot enumerate {type(m).__name__}")


def _chain_log_weights(m: ChainModel) -> np.ndarray:
    """Log weight of every configuration as a (N,)*T tensor."""
    n, t = m.n_states, m.length
    logw = np.zeros((n,) * t)
    for s in range(1, t):
        shape = (1,) * (s - 1) + (n, n) + (1,) * (t - s - 1)
        logw = logw + m.log_potential(s).reshape(shape)
    return logw


def _rrange_log_weights(m: RRangeModel) -> np.ndarray:
    n, t, r = m.n_states, m.length, m.r
    logw = np.zeros((n,) * t)
    for s in range(1, t - r + 1):
        shape = (1,) * (s - 1) + (n,) * (r + 1) + (1,) * (t - s - r)
        logw = logw + m.factor(s).reshape(shape)
    return logw


def brute_marginal(m, sites, config=None, budget: EnumerationBudget | None = None):
    """Marginal law on a site subset by summing the full joint.

    Returns the whole MarginalTable, or a single probability when
    ``config`` is given.  For lattice models ``sites`` are column indices
    and the enumeration runs over individual spins.
    """
    budget = budget or DEFAULT_BUDGET
    budget.check(config_count(m), "marginal enumeration")
    sites = tuple(int(s) for s in sites)
    if not sites or any(b <= a for a, b in zip(sites, sites[1:])):
        raise ModelError("sites must be nonempty and strictly increasing")

    if isinstance(m, SpatialIsingModel):
        table = _spatial_brute_marginal(m, sites)
    else:
        if isinstance(m, SingletonPairModel):
            mm = to_chain_form(m)
        else:
            mm = m
        if sites[0] < 1 or sites[-1] > mm.length:
            raise ModelError(f"sites must lie in 1..{mm.length}")
        if isinstance(mm, ChainModel):
            logw = _chain_log_weights(mm)
        elif isinstance(mm, RRangeModel):
            logw = _rrange_log_weights(mm)
        else:
            raise ModelError(f"cannot enumerate {type(mm).__name__}")
        keep = tuple(s - 1 for s in sites)
        drop = tuple(ax for ax in range(mm.length) if ax not in keep)
        mx = float(logw.max())
        w = np.exp(logw - mx)
        table = MarginalTable(sites, w.sum(axis=drop) / w.sum(),
                              getattr(mm, "state_labels", None))
    if config is None:
        return table
    return table.prob(config)


def _spatial_brute_marginal(m: SpatialIsingModel, sites) -> MarginalTable:
    """Column-subset marginal from a site-level spin enumeration."""
    if sites[0] < 1 or sites[-1] > m.T:
        raise ModelError(f"column sites must lie in 1..{m.T}")
    total = 1 << (m.m * m.T)
    mask = np.int64((1 << m.m) - 1)
    codes = np.arange(total, dtype=np.int64)
    e = np.zeros(total)
    prev = None
    cols_kept = {}
    for t in range(m.T):
        col = (codes >> (t * m.m)) & mask
        n_plus = np.bitwise_count(col.astype(np.uint64)).astype(np.float64)
        e += m.alpha * (2.0 * n_plus - m.m)
        if m.m > 1:
            vmask = (1 << (m.m - 1)) - 1
            diff = np.bitwise_count(((col ^ (col >> 1)) & vmask).astype(np.uint64))
            e += m.beta * (2.0 * ((m.m - 1) - diff.astype(np.float64)) - (m.m - 1))
        if prev is not None:
            agree = m.m - np.bitwise_count((col ^ prev).astype(np.uint64)).astype(np.float64)
            e += m.delta * (2.0 * agree - m.m)
        prev = col
        if t + 1 in sites:
            cols_kept[t + 1] = col
    w = np.exp(e - e.max())
    n_col = 1 << m.m
    key = np.zeros(total, dtype=np.int64)
    for s in sites:
        key = key * n_col + cols_kept[s]
    table = np.bincount(key, weights=w, minlength=n_col ** len(sites))
    table = table.reshape((n_col,) * len(sites))
    return MarginalTable(sites, table / table.sum())


def brute_conditional(m, t: int, z) -> np.ndarray:
    """Conditional law of site t given the rest of the configuration.

    Computed purely from energy differences (the constant cancels).  For a
    pairwise chain the result depends only on the two adjacent sites of
    ``z``; that locality is a property under test, not an assumption here.
    """
    z = list(int(v) for v in z)
    if isinstance(m, SpatialIsingModel):
        raise ModelError("site conditionals are defined for chain models")
    if len(z) != m.length:
        raise ModelError(f"configuration length {len(z)} != {m.length}")
    if not 1 <= t <= m.length:
        raise ModelError(f"site {t} out of range 1..{m.length}")
    logs = np.empty(m.n_states)
    for u in range(m.n_states):
        z[t - 1] = u
        logs[u] = m.energy(z)
    logs -= logs.max()
    p = np.exp(logs)
    return p / p.sum()
