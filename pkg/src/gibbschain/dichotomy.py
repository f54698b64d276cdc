"""Dichotomous thinning for the homogeneous +-1 chain.

A two-state chain with per-site weight alpha and nearest-neighbour
coupling beta is both a Markov chain and a two-neighbour Markov field.
Keeping every other site leaves another Markov chain (transition matrix
squared) and hence another field of the same form with new parameters
(alpha_j, beta_j).  Halving log2(T-1) times reduces any joint or
"dichotomous" marginal to a telescoping product of centre-given-neighbour
conditionals times the exact two-site law of the endpoints, with no global
normalizing constant in sight.

Conventions: states are -1 and +1, encoded as indices 0 and 1; the ladder
needs T = 2^r + 1 sites.  The endpoint pair law is computed by the exact
transfer machinery, because near the boundary the finite chain is not
quite homogeneous; the ladder parameters only ever feed the interior
conditionals, for which they are exact at every interior site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gibbschain.errors import ModelError
from gibbschain.models import ChainModel
from gibbschain.recursions import subset_marginal
from gibbschain.scaled_linalg import LogValue

SPIN = (-1.0, 1.0)  # index 0 is -1, index 1 is +1


@dataclass(frozen=True)
class IsingChainParams:
    """Field parameters (alpha, beta) of the +-1 chain."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ModelError("non-finite entry in field parameters")


@dataclass(frozen=True)
class TransitionPair:
    """Stay probabilities of the stationary chain: p for +1, q for -1."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ModelError("stay probabilities must lie strictly in (0, 1)")

    def matrix(self) -> np.ndarray:
        """Transition matrix in state-index order (-1, +1)."""
        return np.array([[self.q, 1.0 - self.q],
                         [1.0 - self.p, self.p]])

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "TransitionPair":
        return cls(p=float(mat[1, 1]), q=float(mat[0, 0]))


def field_from_transition(tp: TransitionPair) -> IsingChainParams:
    """Field parameters of the stationary chain with the given stay probs."""
    alpha = 0.5 * math.log(tp.p / tp.q)
    beta = 0.25 * math.log(tp.p * tp.q / ((1.0 - tp.p) * (1.0 - tp.q)))
    return IsingChainParams(alpha, beta)


def transition_from_field(fp: IsingChainParams) -> TransitionPair:
    """Stationary chain of the field, from the dominant-eigenvalue construction.

    The transfer matrix H(u, v) = exp(alpha*u + beta*u*v) on {-1, +1} has a
    unique dominant eigenvalue lam > 0; conjugating H by its positive right
    eigenvector and dividing by lam gives the unique homogeneous stochastic
    matrix compatible with the field.  The stay probabilities do not involve
    the eigenvector at all: p = exp(alpha+beta)/lam, q = exp(-alpha+beta)/lam.
    """
    a, b = fp.alpha, fp.beta
    lam = math.exp(b) * math.cosh(a) + math.sqrt(
        math.exp(2.0 * b) * math.sinh(a) ** 2 + math.exp(-2.0 * b))
    p = math.exp(a + b) / lam
    q = math.exp(-a + b) / lam
    return TransitionPair(p, q)


def thin_once(fp: IsingChainParams) -> IsingChainParams:
    """Field parameters after keeping every other site.

    Closed form of field_from_transition applied to the squared stationary
    transition matrix.
    """
    a, b = fp.alpha, fp.beta
    alpha = 0.5 * math.log((1.0 + math.exp(2.0 * a + 4.0 * b))
                           / (1.0 + math.exp(-2.0 * a + 4.0 * b)))
    beta = 0.25 * math.log(1.0 + math.exp(4.0 * b - 2.0 * a)
                           * (1.0 - math.exp(-4.0 * b)) ** 2
                           / (1.0 + math.exp(-2.0 * a)) ** 2)
    return IsingChainParams(alpha, beta)


@dataclass(frozen=True)
class DichotomousLadder:
    """Thinning levels j = r+1 (full chain) down to 1 (endpoints only).

    ``levels[j]`` maps the level to its field parameters; ``subsets[j]``
    to the kept sites (1-based).  Level j keeps sites spaced 2^(r+1-j);
    each level keeps every other site of the one above, starting at 1.
    """

    r: int
    levels: dict
    subsets: dict

    @property
    def length(self) -> int:
        return 2 ** self.r + 1

    def level(self, j: int) -> IsingChainParams:
        if j not in self.levels:
            raise ModelError(f"level {j} out of range 1..{self.r + 1}")
        return self.levels[j]

    def sites(self, j: int) -> tuple:
        if j not in self.subsets:
            raise ModelError(f"level {j} out of range 1..{self.r + 1}")
        return self.subsets[j]


def build_ladder(fp: IsingChainParams, r: int) -> DichotomousLadder:
    """Thin r times, recording parameters and kept sites per level."""
    if r < 1:
        raise ModelError("r must be at least 1")
    t = 2 ** r + 1
    levels = {r + 1: fp}
    subsets = {r + 1: tuple(range(1, t + 1))}
    cur = fp
    for j in range(r, 0, -1):
        cur = thin_once(cur)
        levels[j] = cur
        subsets[j] = tuple(range(1, t + 1, 2 ** (r + 1 - j)))
    return DichotomousLadder(r, levels, subsets)


def _check_spin(*values):
    for v in values:
        if v not in (-1, 1):
            raise ModelError(f"state {v} is not -1 or +1")


def center_conditional(fp: IsingChainParams, z_left: int, z_right: int,
                       z_center: int) -> float:
    """Conditional law of a site given its two neighbours in the field.

    exp(z_c * (alpha + beta * (z_l + z_r))) normalized over z_c = -1, +1.
    """
    _check_spin(z_left, z_right, z_center)
    t = fp.alpha + fp.beta * (z_left + z_right)
    return math.exp(z_center * t) / (2.0 * math.cosh(t))


def chain_model(fp: IsingChainParams, length: int) -> ChainModel:
    """The +-1 chain as a ChainModel: every step carries alpha*u + beta*u*v."""
    s = np.array(SPIN)
    h = fp.alpha * s[:, None] + fp.beta * s[:, None] * s[None, :]
    return ChainModel.homogeneous(2, length, h, state_labels=("-1", "+1"))


def _spin_indices(z) -> tuple:
    z = tuple(int(v) for v in z)
    _check_spin(*z)
    return tuple((v + 1) // 2 for v in z)


def endpoint_pair_marginal(fp: IsingChainParams, length: int) -> np.ndarray:
    """Exact two-site law of (z_1, z_T), indexed (-1, +1) x (-1, +1)."""
    return subset_marginal(chain_model(fp, length), (1, length)).probs


def _log_conditional_product(ladder: DichotomousLadder, z_idx, top: int) -> float:
    """Log of the telescoping conditional product for levels top down to 2."""
    total = 0.0
    for j in range(top, 1, -1):
        gap = 2 ** (ladder.r + 1 - j)
        keep = set(ladder.sites(j - 1))
        fp_j = ladder.level(j)
        for s in ladder.sites(j):
            if s in keep:
                continue
            zl = SPIN[z_idx[s - 1 - gap]]
            zr = SPIN[z_idx[s - 1 + gap]]
            zc = SPIN[z_idx[s - 1]]
            total += math.log(center_conditional(fp_j, zl, zr, zc))
    return total


def joint_via_dichotomy(fp: IsingChainParams, r: int, z) -> float:
    """Full joint probability as the telescoped conditional product.

    Interior sites are peeled off level by level with the ladder's
    conditionals; what remains is the exact endpoint pair law.  No global
    constant is computed.
    """
    ladder = build_ladder(fp, r)
    z_idx = _spin_indices(z)
    if len(z_idx) != ladder.length:
        raise ModelError(f"configuration length {len(z_idx)} != {ladder.length}")
    log_p = _log_conditional_product(ladder, z_idx, ladder.r + 1)
    pair = endpoint_pair_marginal(fp, ladder.length)
    return math.exp(log_p) * float(pair[z_idx[0], z_idx[-1]])


def dichotomous_marginal(fp: IsingChainParams, r: int, j: int, z_subset) -> float:
    """Marginal probability of a level-j configuration (sites of S_j)."""
    ladder = build_ladder(fp, r)
    if j not in ladder.levels:
        raise ModelError(f"level {j} out of range 1..{r + 1}")
    sites = ladder.sites(j)
    z_sub = _spin_indices(z_subset)
    if len(z_sub) != len(sites):
        raise ModelError(f"expected {len(sites)} states for level {j}")
    z_idx = [0] * ladder.length
    for s, v in zip(sites, z_sub):
        z_idx[s - 1] = v
    # conditional levels run j, j-1, ..., 2; level 1 is the endpoint pair
    log_p = _log_conditional_product(ladder, z_idx, j)
    pair = endpoint_pair_marginal(fp, ladder.length)
    return math.exp(log_p) * float(pair[z_idx[0], z_idx[-1]])


def constant_via_dichotomy(fp: IsingChainParams, r: int) -> LogValue:
    """Normalizing constant from one dichotomous joint evaluation.

    C = exp(energy(z)) / pi(z) at a reference configuration (all +1).
    """
    length = 2 ** r + 1
    z = (1,) * length
    model = chain_model(fp, length)
    log_pi = (_log_conditional_product(build_ladder(fp, r), _spin_indices(z), r + 1)
              + math.log(float(endpoint_pair_marginal(fp, length)[1, 1])))
    return LogValue(model.energy(_spin_indices(z)) - log_pi)


def ladder_csv(ladder: DichotomousLadder) -> str:
    """Levels as CSV rows (j, alpha_j, beta_j), top down."""
    lines = ["level,alpha,beta"]
    for j in range(ladder.r + 1, 0, -1):
        fp = ladder.level(j)
        lines.append(f"{j},{fp.alpha:.15g},{fp.beta:.15g}")
    return "\n".join(lines) + "\n"
