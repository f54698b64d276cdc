"""Model containers, energies, and the JSON model-file format.

Two equivalent conventions coexist for pairwise chains:

  * ``ChainModel`` carries one saturated log-potential table per step, with
    any per-site terms already folded in;
  * ``SingletonPairModel`` keeps per-site terms and pair terms separate
    (there is no pair table at the last site).

``to_chain_form`` is the single bridge between them: it folds the last
site's term into the final step table, so downstream algorithms only ever
consume the chain form.  Sites are numbered 1..T and states are the
integers 0..N-1 (labels are display-only).  The energy of a configuration
is accumulated step by step, left to right; the singleton-pair energy
groups each step's terms exactly as the bridge builds its tables, so the
two conventions agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from gibbschain.errors import ModelError
from gibbschain.scaled_linalg import LogValue


def _as_table(obj, shape, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{what}: not a numeric table") from exc
    if arr.shape != shape:
        raise ModelError(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{what}: non-finite entry")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _check_labels(labels, n_states):
    if labels is None:
        return None
    labels = tuple(str(x) for x in labels)
    if len(labels) != n_states:
        raise ModelError(f"expected {n_states} state labels, got {len(labels)}")
    return labels


class ChainModel:
    """Pairwise chain over states 0..N-1 given by per-step log tables.

    ``tables`` holds the distinct tables only.  With ``shared_interior``
    the first table serves steps 1..T-2 and the last serves step T-1
    (one single table means a fully homogeneous chain); otherwise there is
    one table per step.  Long homogeneous chains therefore never store
    T-1 physical copies.
    """

    def __init__(self, n_states: int, length: int, tables, *,
                 shared_interior: bool = False, state_labels=None):
        if n_states < 2:
            raise ModelError("n_states must be at least 2")
        if length < 2:
            raise ModelError("length must be at least 2")
        tables = tuple(_as_table(t, (n_states, n_states), f"pair table {i}")
                       for i, t in enumerate(tables, start=1))
        if shared_interior:
            if len(tables) not in (1, 2):
                raise ModelError("shared-interior chain takes one or two tables")
        elif len(tables) != length - 1:
            raise ModelError(f"expected {length - 1} pair tables, got {len(tables)}")
        self.n_states = n_states
        self.length = length
        self.tables = tables
        self.shared_interior = shared_interior
        self.state_labels = _check_labels(state_labels, n_states)

    @classmethod
    def homogeneous(cls, n_states, length, h, h_final=None, state_labels=None):
        tables = (h,) if h_final is None else (h, h_final)
        return cls(n_states, length, tables, shared_interior=True,
                   state_labels=state_labels)

    @classmethod
    def from_tables(cls, tables, state_labels=None):
        tables = tuple(tables)
        if not tables:
            raise ModelError("need at least one pair table")
        n = np.asarray(tables[0]).shape[0]
        return cls(n, len(tables) + 1, tables, state_labels=state_labels)

    @property
    def is_homogeneous(self) -> bool:
        """True when every step shares one table."""
        return self.shared_interior and (
            len(self.tables) == 1 or bool(np.array_equal(self.tables[0], self.tables[1])))

    def log_potential(self, s: int) -> np.ndarray:
        """Log table for step s (couples sites s and s+1), s in 1..T-1."""
        if not 1 <= s <= self.length - 1:
            raise ModelError(f"step {s} out of range 1..{self.length - 1}")
        if self.shared_interior:
            return self.tables[0] if s <= self.length - 2 else self.tables[-1]
        return self.tables[s - 1]

    def step_index(self) -> np.ndarray:
        """Index array mapping step s-1 to its position in ``tables``."""
        if self.shared_interior:
            idx = np.zeros(self.length - 1, dtype=np.int64)
            idx[-1] = len(self.tables) - 1
            return idx
        return np.arange(self.length - 1, dtype=np.int64)

    def _validate_config(self, z):
        z = tuple(int(v) for v in z)
        if len(z) != self.length:
            raise ModelError(f"configuration length {len(z)} != {self.length}")
        for v in z:
            if not 0 <= v < self.n_states:
                raise ModelError(f"state {v} out of range 0..{self.n_states - 1}")
        return z

    def energy(self, z) -> float:
        z = self._validate_config(z)
        total = 0.0
        for s in range(1, self.length):
            total += float(self.log_potential(s)[z[s - 1], z[s]])
        return total


class SingletonPairModel:
    """Chain with separate per-site vectors and pair tables.

    There are T per-site vectors and T-1 pair tables (the last site has no
    outgoing pair).  ``shared`` stores one vector and one table for all
    sites/steps.
    """

    def __init__(self, n_states: int, length: int, thetas, psis, *,
                 shared: bool = False, state_labels=None):
        if n_states < 2:
            raise ModelError("n_states must be at least 2")
        if length < 2:
            raise ModelError("length must be at least 2")
        thetas = tuple(_as_table(t, (n_states,), f"site vector {i}")
                       for i, t in enumerate(thetas, start=1))
        psis = tuple(_as_table(p, (n_states, n_states), f"pair table {i}")
                     for i, p in enumerate(psis, start=1))
        if shared:
            if len(thetas) != 1 or len(psis) != 1:
                raise ModelError("shared model takes one site vector and one pair table")
        else:
            if len(thetas) != length:
                raise ModelError(f"expected {length} site vectors, got {len(thetas)}")
            if len(psis) != length - 1:
                raise ModelError(f"expected {length - 1} pair tables, got {len(psis)}")
        self.n_states = n_states
        self.length = length
        self.thetas = thetas
        self.psis = psis
        self.shared = shared
        self.state_labels = _check_labels(state_labels, n_states)

    @classmethod
    def homogeneous(cls, n_states, length, theta, psi, state_labels=None):
        return cls(n_states, length, (theta,), (psi,), shared=True,
                   state_labels=state_labels)

    def theta(self, s: int) -> np.ndarray:
        if not 1 <= s <= self.length:
            raise ModelError(f"site {s} out of range 1..{self.length}")
        return self.thetas[0] if self.shared else self.thetas[s - 1]

    def psi(self, s: int) -> np.ndarray:
        if not 1 <= s <= self.length - 1:
            raise ModelError(f"step {s} out of range 1..{self.length - 1}")
        return self.psis[0] if self.shared else self.psis[s - 1]

    def energy(self, z) -> float:
        z = tuple(int(v) for v in z)
        if len(z) != self.length:
            raise ModelError(f"configuration length {len(z)} != {self.length}")
        for v in z:
            if not 0 <= v < self.n_states:
                raise ModelError(f"state {v} out of range 0..{self.n_states - 1}")
        # grouped per step exactly like to_chain_form builds its tables,
        # so the two energies agree bit for bit
        total = 0.0
        for s in range(1, self.length):
            step = float(self.theta(s)[z[s - 1]]) + float(self.psi(s)[z[s - 1], z[s]])
            if s == self.length - 1:
                step = step + float(self.theta(self.length)[z[-1]])
            total += step
        return total


def to_chain_form(m: SingletonPairModel) -> ChainModel:
    """Fold a singleton+pair model into saturated per-step tables.

    Step s gets theta_s(u) + psi_s(u, v); the final step additionally
    absorbs the last site's theta_T(v).  Total energy is preserved for
    every configuration.
    """
    if m.shared:
        h = m.thetas[0][:, None] + m.psis[0]
        h_final = (m.thetas[0][:, None] + m.psis[0]) + m.thetas[0][None, :]
        return ChainModel.homogeneous(m.n_states, m.length, h, h_final,
                                      state_labels=m.state_labels)
    tables = []
    for s in range(1, m.length):
        h = m.theta(s)[:, None] + m.psi(s)
        if s == m.length - 1:
            h = h + m.theta(m.length)[None, :]
        tables.append(h)
    return ChainModel(m.n_states, m.length, tables, state_labels=m.state_labels)


def from_chain_form(m: ChainModel) -> SingletonPairModel:
    """View a chain model as a singleton+pair model with zero site terms."""
    zeros = np.zeros(m.n_states)
    if m.shared_interior and len(m.tables) == 1:
        return SingletonPairModel.homogeneous(m.n_states, m.length, zeros,
                                              m.tables[0], state_labels=m.state_labels)
    thetas = [zeros] * m.length
    psis = [m.log_potential(s) for s in range(1, m.length)]
    return SingletonPairModel(m.n_states, m.length, thetas, psis,
                              state_labels=m.state_labels)


class RRangeModel:
    """Factors over sliding (r+1)-site windows, stored as log tables.

    ``factors[s-1]`` (or the shared factor) is an (r+1)-dimensional table
    over the window (z_s, ..., z_{s+r}); there are T - r windows.
    """

    def __init__(self, n_states: int, length: int, r: int, factors, *,
                 shared: bool = False, state_labels=None):
        if n_states < 2:
            raise ModelError("n_states must be at least 2")
        if r < 1:
            raise ModelError("range must be at least 1")
        if length <= r:
            raise ModelError("length must exceed the coupling range")
        shape = (n_states,) * (r + 1)
        factors = tuple(_as_table(f, shape, f"window factor {i}")
                        for i, f in enumerate(factors, start=1))
        if shared:
            if len(factors) != 1:
                raise ModelError("shared model takes one window factor")
        elif len(factors) != length - r:
            raise ModelError(f"expected {length - r} window factors, got {len(factors)}")
        self.n_states = n_states
        self.length = length
        self.r = r
        self.factors = factors
        self.shared = shared
        self.state_labels = _check_labels(state_labels, n_states)

    def factor(self, s: int) -> np.ndarray:
        if not 1 <= s <= self.length - self.r:
            raise ModelError(f"window {s} out of range 1..{self.length - self.r}")
        return self.factors[0] if self.shared else self.factors[s - 1]

    def energy(self, z) -> float:
        z = tuple(int(v) for v in z)
        if len(z) != self.length:
            raise ModelError(f"configuration length {len(z)} != {self.length}")
        total = 0.0
        for s in range(1, self.length - self.r + 1):
            total += float(self.factor(s)[z[s - 1:s + self.r]])
        return total


@dataclass(frozen=True)
class SpatialIsingModel:
    """4-nearest-neighbour Ising field on an m x T lattice of +-1 spins.

    alpha weighs single spins, beta vertical (within-column) pairs, delta
    horizontal (between-column) pairs.
    """

    m: int
    T: int
    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        if self.m < 1:
            raise ModelError("m must be at least 1")
        if self.T < 2:
            raise ModelError("T must be at least 2")
        for name in ("alpha", "beta", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError(f"non-finite entry: {name}")


def energy(m, z) -> float:
    """Total log weight of configuration z under the model."""
    return m.energy(z)


def unnormalized_density(m, z) -> LogValue:
    """exp(energy) as a LogValue (never overflows)."""
    return LogValue(m.energy(z))


# ---------------------------------------------------------------------------
# model files


def _fmt(x: float) -> str:
    # 17 significant digits round-trip doubles exactly
    return format(float(x), ".17e")


def _render(obj) -> str:
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(k)}: {_render(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot render {type(obj)!r}")


def serialize_model(m) -> str:
    """Render a model as its JSON document (reals in scientific notation)."""
    doc: dict = {}
    if isinstance(m, ChainModel):
        doc["kind"] = "chain"
        doc["n_states"] = m.n_states
        doc["length"] = m.length
        if m.shared_interior:
            doc["homogeneous"] = True
            doc["h"] = m.tables[0].tolist()
            if len(m.tables) == 2:
                doc["h_final"] = m.tables[1].tolist()
        else:
            doc["h_list"] = [t.tolist() for t in m.tables]
    elif isinstance(m, SingletonPairModel):
        doc["kind"] = "singleton_pair"
        doc["n_states"] = m.n_states
        doc["length"] = m.length
        if m.shared:
            doc["homogeneous"] = True
            doc["theta"] = m.thetas[0].tolist()
            doc["psi"] = m.psis[0].tolist()
        else:
            doc["theta_list"] = [t.tolist() for t in m.thetas]
            doc["psi_list"] = [p.tolist() for p in m.psis]
    elif isinstance(m, RRangeModel):
        doc["kind"] = "r_range"
        doc["n_states"] = m.n_states
        doc["length"] = m.length
        doc["range"] = m.r
        if m.shared:
            doc["homogeneous"] = True
            doc["h"] = m.factors[0].ravel().tolist()
        else:
            doc["h_list"] = [f.ravel().tolist() for f in m.factors]
    elif isinstance(m, SpatialIsingModel):
        doc["kind"] = "spatial_ising"
        doc["m"] = m.m
        doc["T"] = m.T
        doc["alpha"] = m.alpha
        doc["beta"] = m.beta
        doc["delta"] = m.delta
    else:
        raise ModelError(f"cannot serialize {type(m).__name__}")
    labels = getattr(m, "state_labels", None)
    if labels is not None:
        doc["state_labels"] = list(labels)
    return _render(doc)


def _require(doc: dict, key: str):
    if key not in doc:
        raise ModelError(f"missing field {key!r}")
    return doc[key]


def parse_model(source):
    """Parse a model document (JSON text or an already-decoded dict)."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed document: {exc}") from exc
    elif isinstance(source, dict):
        doc = source
    else:
        raise ModelError(f"cannot parse {type(source).__name__}")
    if not isinstance(doc, dict):
        raise ModelError("document must be a JSON object")
    kind = _require(doc, "kind")
    labels = doc.get("state_labels")

    if kind == "spatial_ising":
        return SpatialIsingModel(int(_require(doc, "m")), int(_require(doc, "T")),
                                 float(_require(doc, "alpha")),
                                 float(_require(doc, "beta")),
                                 float(_require(doc, "delta")))

    n = int(_require(doc, "n_states"))
    length = int(_require(doc, "length"))

    if kind == "chain":
        if doc.get("homogeneous"):
            return ChainModel.homogeneous(n, length, _require(doc, "h"),
                                          doc.get("h_final"), state_labels=labels)
        return ChainModel(n, length, _require(doc, "h_list"), state_labels=labels)

    if kind == "singleton_pair":
        if doc.get("homogeneous"):
            return SingletonPairModel.homogeneous(n, length, _require(doc, "theta"),
                                                  _require(doc, "psi"),
                                                  state_labels=labels)
        return SingletonPairModel(n, length, _require(doc, "theta_list"),
                                  _require(doc, "psi_list"), state_labels=labels)

    if kind == "r_range":
        r = int(_require(doc, "range"))
        if r < 1:
            raise ModelError("range must be at least 1")
        shape = (n,) * (r + 1)

        def unflatten(flat, i):
            arr = np.asarray(flat, dtype=np.float64)
            if arr.ndim != 1 or arr.size != n ** (r + 1):
                raise ModelError(f"window factor {i}: expected {n ** (r + 1)} entries")
            return arr.reshape(shape)

        if doc.get("homogeneous"):
            return RRangeModel(n, length, r, (unflatten(_require(doc, "h"), 1),),
                               shared=True, state_labels=labels)
        flats = _require(doc, "h_list")
        return RRangeModel(n, length, r,
                           [unflatten(f, i) for i, f in enumerate(flats, start=1)],
                           state_labels=labels)

    raise ModelError(f"unknown model kind {kind!r}")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def save_model(m, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(m))
        fh.write("\n")
