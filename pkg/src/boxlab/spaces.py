"""Finite discrete probability substrate: spaces, hypergraph systems, tensors.

Everything downstream evaluates expectations of products of edge tensors over
product grids in which each vertex may carry one or several independent
replicas.  The Grid class owns that bookkeeping: axes are (vertex, replica)
pairs, tensors are lifted onto the grid by reshape/transpose so numpy
broadcasting aligns them, and the final reduction is a single numpy pairwise
sum over a C-contiguous array.  That fixed reduction order makes every
expectation reproducible bit for bit, independent of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DigitOutOfRange,
    EmptyHypergraph,
    EmptySpace,
    NonPositiveWeight,
    POutOfRange,
    ShapeMismatch,
    SizeCapExceeded,
)

# Hard ceiling on the number of cells a single evaluation grid may hold.
GRID_CELL_CAP = 1 << 25

# Guard for integer powers ell ** |e| used as exponents and work estimates.
POWER_GUARD = 1 << 62


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ProbSpace:
    """One finite probability space: normalized positive atom weights."""

    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


def make_prob_space(raw_weights) -> ProbSpace:
    """Build a space from positive raw weights, normalizing them to sum 1."""
    w = np.asarray(raw_weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise EmptySpace(f"need a nonempty weight vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise NonPositiveWeight(f"weights must be finite and > 0, got {w.tolist()}")
    total = float(np.sum(w))
    return ProbSpace(_freeze(w / total))


def as_edge(seq) -> tuple[int, ...]:
    """Canonicalize an edge: strictly increasing tuple of vertex indices."""
    e = tuple(int(v) for v in seq)
    if len(e) == 0:
        raise EmptyHypergraph("an edge needs at least one vertex")
    if any(b <= a for a, b in zip(e, e[1:])):
        raise ShapeMismatch(f"edge must be strictly increasing, got {e}")
    return e


@dataclass(frozen=True, eq=False)
class HypergraphSystem:
    """A list of probability spaces plus a set of edges over their indices."""

    spaces: tuple[ProbSpace, ...]
    edges: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.spaces)

    def space(self, v: int) -> ProbSpace:
        return self.spaces[v]

    def edge_shape(self, e: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(self.spaces[v].size for v in e)

    def uniformity(self) -> int | None:
        """Common edge size, or None if edges have mixed sizes / are absent."""
        sizes = {len(e) for e in self.edges}
        return sizes.pop() if len(sizes) == 1 else None


def make_system(space_weights, edges) -> HypergraphSystem:
    """Build a system from weight vectors (or ready spaces) and edge lists."""
    spaces = tuple(
        w if isinstance(w, ProbSpace) else make_prob_space(w) for w in space_weights
    )
    n = len(spaces)
    canon = []
    seen = set()
    for e in edges:
        ce = as_edge(e)
        if ce[-1] >= n or ce[0] < 0:
            raise ShapeMismatch(f"edge {ce} references a space outside 0..{n - 1}")
        if ce in seen:
            raise ShapeMismatch(f"duplicate edge {ce}")
        seen.add(ce)
        canon.append(ce)
    return HypergraphSystem(spaces, tuple(canon))


def max_degree(system: HypergraphSystem) -> int:
    """Largest number of edges sharing one vertex."""
    if not system.edges:
        raise EmptyHypergraph("degree of an edgeless hypergraph is undefined")
    counts: dict[int, int] = {}
    for e in system.edges:
        for v in e:
            counts[v] = counts.get(v, 0) + 1
    return max(counts.values())


@dataclass(frozen=True, eq=False)
class EdgeFunction:
    """A real tensor indexed by the atoms of an edge's coordinate spaces.

    Axis k of `values` runs over the atoms of the k-th (sorted) vertex of
    `edge`.  Tensors are stored C-contiguous, float64, and non-writable.
    """

    edge: tuple[int, ...]
    values: np.ndarray

    @property
    def arity(self) -> int:
        return len(self.edge)


def edge_function(system: HypergraphSystem, edge, values) -> EdgeFunction:
    """Validate and freeze a tensor for an edge of the given system."""
    e = as_edge(edge)
    if e[-1] >= system.n:
        raise ShapeMismatch(f"edge {e} references a space outside 0..{system.n - 1}")
    vals = np.asarray(values, dtype=np.float64)
    want = system.edge_shape(e)
    if vals.shape != want:
        raise ShapeMismatch(f"tensor shape {vals.shape} does not match {want} for edge {e}")
    if not np.all(np.isfinite(vals)):
        raise ShapeMismatch(f"tensor for edge {e} contains non-finite entries")
    return EdgeFunction(e, _freeze(vals))


def constant_function(system: HypergraphSystem, edge, c: float = 1.0) -> EdgeFunction:
    e = as_edge(edge)
    return edge_function(system, e, np.full(system.edge_shape(e), float(c)))


def check_function(system: HypergraphSystem, f: EdgeFunction) -> None:
    if f.values.shape != system.edge_shape(f.edge):
        raise ShapeMismatch(
            f"tensor shape {f.values.shape} does not match "
            f"{system.edge_shape(f.edge)} for edge {f.edge}"
        )


@dataclass(frozen=True)
class OmegaIndex:
    """A replica digit per coordinate of an edge, in that edge's sorted order."""

    edge: tuple[int, ...]
    digits: tuple[int, ...]

    def __post_init__(self):
        if len(self.edge) != len(self.digits):
            raise ShapeMismatch(
                f"{len(self.digits)} digits for edge of size {len(self.edge)}"
            )
        if any(d < 0 for d in self.digits):
            raise DigitOutOfRange(f"negative replica digit in {self.digits}")


def omega_select(tuples, omega: OmegaIndex) -> tuple:
    """Select coordinate k of the omega_k-th tuple, per coordinate.

    `tuples` is a sequence of points of the edge's product space; the result
    is the mixed point (tuples[omega_1][1], tuples[omega_2][2], ...).
    """
    ell = len(tuples)
    for d in omega.digits:
        if d >= ell:
            raise DigitOutOfRange(f"digit {d} but only {ell} tuples supplied")
    for t in tuples:
        if len(t) != len(omega.edge):
            raise ShapeMismatch(f"tuple of length {len(t)} for edge {omega.edge}")
    return tuple(tuples[d][k] for k, d in enumerate(omega.digits))


class Exponent:
    """An integrability exponent: a finite real >= 1, or infinity.

    The conjugate pairing is 1/p + 1/q = 1 with conj(1) = infinity and
    conj(infinity) = 1; by convention 1/p = 0 at infinity.
    """

    __slots__ = ("value",)

    def __init__(self, value: float):
        v = float(value)
        if math.isnan(v) or v < 1.0:
            raise POutOfRange(f"exponent must be >= 1 or infinite, got {value}")
        object.__setattr__(self, "value", v)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Exponent is immutable")

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    def reciprocal(self) -> float:
        """1/p, with 1/infinity = 0."""
        return 0.0 if self.is_inf else 1.0 / self.value

    def conjugate(self) -> "Exponent":
        if self.is_inf:
            return Exponent(1.0)
        if self.value == 1.0:
            return INF
        return Exponent(self.value / (self.value - 1.0))

    def __eq__(self, other):
        return isinstance(other, Exponent) and self.value == other.value

    def __hash__(self):
        return hash(("Exponent", self.value))

    def __repr__(self):
        return "Exponent(inf)" if self.is_inf else f"Exponent({self.value!r})"

    def as_json(self):
        return "inf" if self.is_inf else self.value

    @staticmethod
    def parse(text) -> "Exponent":
        if isinstance(text, Exponent):
            return text
        if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        try:
            return Exponent(float(text))
        except (TypeError, ValueError) as exc:
            raise POutOfRange(f"cannot parse exponent from {text!r}") from exc


INF = Exponent(math.inf)


def checked_power(base: int, exp: int) -> int:
    """base ** exp as an exact int, refusing results above the 2**62 guard."""
    out = base**exp
    if out > POWER_GUARD:
        raise SizeCapExceeded(f"{base}**{exp} exceeds the 2**62 integer guard")
    return out


class Grid:
    """Product evaluation grid with one axis per (vertex, replica) key.

    Keys are sorted; axis k has the atom count of its vertex.  `lift` places
    an edge tensor on the grid given the replica digit used by each of its
    coordinates, and `weight_tensor` materializes the product measure of any
    subset of axes.  All reductions downstream flatten to C order and use
    numpy's pairwise summation, so values never depend on thread count.
    """

    def __init__(self, system: HypergraphSystem, keys, cap: int = GRID_CELL_CAP):
        ks = sorted(keys)
        if len(set(ks)) != len(ks):
            raise ShapeMismatch(f"duplicate grid keys in {ks}")
        self.system = system
        self.keys: tuple[tuple[int, int], ...] = tuple(ks)
        self.pos = {k: a for a, k in enumerate(self.keys)}
        self.shape = tuple(system.spaces[v].size for v, _ in self.keys)
        cells = 1
        for s in self.shape:
            cells *= s
        if cells > cap:
            raise SizeCapExceeded(f"grid of {cells} cells exceeds cap {cap}")
        self.cells = cells

    def lift(self, edge: tuple[int, ...], values: np.ndarray, digits) -> np.ndarray:
        """Broadcastable view of `values` with axis k at key (edge[k], digits[k])."""
        positions = [self.pos[(v, int(m))] for v, m in zip(edge, digits)]
        order = sorted(range(len(positions)), key=positions.__getitem__)
        arr = values.transpose(order) if order != list(range(len(order))) else values
        newshape = [1] * len(self.shape)
        for p, s in zip(sorted(positions), arr.shape):
            newshape[p] = s
        return arr.reshape(newshape)

    def weight_tensor(self, keys=None) -> np.ndarray:
        """Product of the weight vectors of `keys` (default: all axes)."""
        acc = np.ones((1,) * len(self.shape))
        for k in self.keys if keys is None else sorted(keys):
            v, _ = k
            acc = acc * self.lift((v,), self.system.spaces[v].weights, (k[1],))
        return acc

    def product(self, factors) -> np.ndarray:
        """Full-measure product of lifted factors (broadcast to grid shape)."""
        acc = self.weight_tensor()
        for a in factors:
            acc = acc * a
        return np.broadcast_to(acc, self.shape) if acc.shape != self.shape else acc

    def reduce(self, tensor: np.ndarray) -> float:
        """Deterministic total sum: contiguous flatten + numpy pairwise sum."""
        return float(np.sum(np.ascontiguousarray(tensor)))


def expectation(system: HypergraphSystem, e, f: EdgeFunction) -> float:
    """Mean of f over the product measure of edge e's coordinate spaces."""
    e = as_edge(e)
    check_function(system, f)
    if f.edge != e:
        raise ShapeMismatch(f"function lives on {f.edge}, not on {e}")
    g = Grid(system, [(v, 0) for v in e])
    return g.reduce(g.product([g.lift(e, f.values, (0,) * len(e))]))


def lp_norm(system: HypergraphSystem, e, f: EdgeFunction, p: Exponent) -> float:
    """Weighted L_p norm of f on edge e; the sup norm when p is infinite.

    Finite p is computed after rescaling by max|f| so that enormous exponents
    (p up to 2**20) stay inside float range; the root uses log/exp.
    """
    e = as_edge(e)
    check_function(system, f)
    if f.edge != e:
        raise ShapeMismatch(f"function lives on {f.edge}, not on {e}")
    m = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if p.is_inf or m == 0.0:
        return m
    g = Grid(system, [(v, 0) for v in e])
    ratios = np.abs(f.values) / m
    mean = g.reduce(g.product([g.lift(e, np.power(ratios, p.value), (0,) * len(e))]))
    if mean <= 0.0:
        return 0.0
    return m * math.exp(math.log(mean) / p.value)
