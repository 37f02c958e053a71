"""Homomorphism-style counting forms and the generalized von Neumann checks.

`lambda_form` evaluates the expectation of the product of one tensor per
edge over the full product space.  Two routes exist: a direct product over
the full grid, and greedy vertex elimination (sum vertices out one at a
time, smallest merged factor first); they agree to 1e-10 relative and the
direct route is the default reference.

`von_neumann_certificate` checks, for 2-uniform systems, that the counting
form is controlled by the smallest box norm among the edges once the
tensors are bounded in the p-weighted box norm and all subset products are
bounded in L_p.  `counting_lemma_certificate` is the two-assignment variant
bounding |difference of counting forms| by the sum of box norms of the
edgewise differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .boxnorm import REL_TOL, box_norm, lp_box_norm, require_even
from .errors import (
    BadSpec,
    EmptyHypergraph,
    NotTwoUniform,
    NumericalInconsistency,
    PairCapExceeded,
    POutOfRange,
    ShapeMismatch,
    SubsetCapExceeded,
)
from .spaces import (
    EdgeFunction,
    Exponent,
    Grid,
    HypergraphSystem,
    check_function,
)

SUBSET_CAP = 1 << 20
PAIR_CAP = 1 << 20


def full_assignment(system: HypergraphSystem, functions) -> dict:
    """Validate a one-tensor-per-edge assignment covering every edge."""
    if not system.edges:
        raise EmptyHypergraph("the system has no edges")
    out = {}
    if isinstance(functions, dict):
        items = functions.items()
    else:
        items = [(f.edge, f) for f in functions]
    for edge, fn in items:
        edge = tuple(int(v) for v in edge)
        if edge != fn.edge:
            raise ShapeMismatch(f"assignment key {edge} does not match {fn.edge}")
        if edge in out:
            raise ShapeMismatch(f"duplicate assignment for edge {edge}")
        check_function(system, fn)
        out[edge] = fn
    missing = [e for e in system.edges if e not in out]
    extra = [e for e in out if e not in system.edges]
    if missing or extra:
        raise ShapeMismatch(f"assignment mismatch: missing {missing}, extra {extra}")
    return out


def _lambda_direct(system: HypergraphSystem, assign: dict, edges) -> float:
    coords = sorted(set(v for e in edges for v in e))
    grid = Grid(system, [(v, 0) for v in coords])
    factors = [grid.lift(e, assign[e].values, (0,) * len(e)) for e in edges]
    return grid.reduce(grid.product(factors))


def _lambda_eliminate(system: HypergraphSystem, assign: dict, edges) -> float:
    # Factors as (coords tuple, array); eliminate the vertex whose merged
    # factor is smallest, breaking ties toward the smallest vertex index.
    factors: list[tuple[tuple[int, ...], np.ndarray]] = [
        (e, assign[e].values) for e in edges
    ]
    constant = 1.0
    while True:
        live = sorted(set(v for coords, _ in factors for v in coords))
        if not live:
            break
        best_v, best_cost, best_union = None, None, None
        for v in live:
            union: set[int] = set()
            for coords, _ in factors:
                if v in coords:
                    union.update(coords)
            union.discard(v)
            cost = 1
            for w in union:
                cost *= system.spaces[w].size
            if best_cost is None or cost < best_cost:
                best_v, best_cost, best_union = v, cost, tuple(sorted(union))
        touching = [fa for fa in factors if best_v in fa[0]]
        rest = [fa for fa in factors if best_v not in fa[0]]
        merged_coords = tuple(sorted(set(best_union) | {best_v}))
        grid = Grid(system, [(w, 0) for w in merged_coords])
        acc = np.ones(grid.shape)
        for coords, arr in touching:
            acc = acc * grid.lift(coords, arr, (0,) * len(coords))
        axis = grid.pos[(best_v, 0)]
        w_shape = [1] * len(grid.shape)
        w_shape[axis] = system.spaces[best_v].size
        acc = acc * system.spaces[best_v].weights.reshape(w_shape)
        summed = np.sum(np.ascontiguousarray(np.broadcast_to(acc, grid.shape)), axis=axis)
        if best_union:
            rest.append((best_union, summed))
        else:
            constant *= float(summed)
        factors = rest
    for coords, arr in factors:
        constant *= float(arr)
    return constant


def lambda_form(
    system: HypergraphSystem,
    functions,
    edges=None,
    mode: str = "direct",
) -> float:
    """Expectation of the product of the assigned tensors over the edges.

    `edges` restricts the product to a sub-collection (default all edges of
    the system); an empty collection gives 1 (empty product convention).
    """
    assign = full_assignment(system, functions)
    use = tuple(system.edges if edges is None else [tuple(e) for e in edges])
    for e in use:
        if e not in assign:
            raise ShapeMismatch(f"edge {e} has no assigned tensor")
    if not use:
        return 1.0
    if mode == "direct":
        return _lambda_direct(system, assign, use)
    if mode == "eliminate":
        return _lambda_eliminate(system, assign, use)
    if mode == "checked":
        a = _lambda_direct(system, assign, use)
        b = _lambda_eliminate(system, assign, use)
        scale = max(abs(a), abs(b), 1.0)
        if abs(a - b) > 1e-10 * scale:
            raise NumericalInconsistency(f"elimination disagrees: {a} vs {b}")
        return a
    raise ShapeMismatch(f"unknown lambda_form mode {mode!r}")


def least_even_at_least(x: float, tie_tol: float = 1e-9) -> int:
    """Smallest even integer >= x, accepting 2k when |x - 2k| <= tie_tol."""
    half = x / 2.0
    nearest = max(1, round(half))
    if abs(x - 2 * nearest) <= tie_tol:
        return 2 * int(nearest)
    return 2 * int(max(1, math.ceil(half - tie_tol)))


def ell_von_neumann(delta: int, p: Exponent) -> int:
    """Replica count rule for the generalized von Neumann bound.

    2 when p is infinite or the overlap degree is 1; otherwise the least
    even integer at least t/(t-1) with t = p**(1/(delta-1)).
    """
    if delta < 1:
        raise BadSpec(f"overlap degree must be >= 1, got {delta}")
    if p.is_inf or delta == 1:
        return 2
    if p.value <= 1.0:
        raise POutOfRange(f"need p > 1 for the replica rule, got {p.value}")
    t = p.value ** (1.0 / (delta - 1))
    return least_even_at_least(t / (t - 1.0))


def product_lp_norm(system: HypergraphSystem, funcs, p: Exponent) -> float:
    """L_p norm of the pointwise product of the given tensors (lifted).

    An empty collection is the constant one, so the norm is 1.
    """
    funcs = list(funcs)
    if not funcs:
        return 1.0
    coords = sorted(set(v for f in funcs for v in f.edge))
    grid = Grid(system, [(v, 0) for v in coords])
    tensor = np.ones(grid.shape)
    for f in funcs:
        tensor = tensor * grid.lift(f.edge, f.values, (0,) * len(f.edge))
    tensor = np.broadcast_to(tensor, grid.shape)
    m = float(np.max(np.abs(tensor))) if tensor.size else 0.0
    if p.is_inf or m == 0.0:
        return m
    mean = grid.reduce(grid.weight_tensor() * np.power(np.abs(tensor) / m, p.value))
    if mean <= 0.0:
        return 0.0
    return m * math.exp(math.log(mean) / p.value)


@dataclass(frozen=True)
class VonNeumannCertificate:
    ell: int
    lhs: float
    rhs: float
    tol: float
    holds: bool
    min_box_edge: tuple[int, ...]
    box_norms: dict
    box_lp_norms: dict
    hyp_box_lp_ok: bool
    worst_subset: tuple[tuple[int, ...], ...]
    worst_subset_lp: float
    hyp_subset_lp_ok: bool
    C: float
    p: object

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tol": self.tol,
            "holds": self.holds,
            "min_box_edge": list(self.min_box_edge),
            "box_norms": {str(list(k)): v for k, v in self.box_norms.items()},
            "box_lp_norms": {str(list(k)): v for k, v in self.box_lp_norms.items()},
            "hypotheses": {
                "box_lp_at_most_one": self.hyp_box_lp_ok,
                "subset_lp_at_most_C": self.hyp_subset_lp_ok,
            },
            "worst_subset": [list(e) for e in self.worst_subset],
            "worst_subset_lp": self.worst_subset_lp,
            "C": self.C,
            "p": self.p,
        }


def von_neumann_certificate(
    system: HypergraphSystem,
    functions,
    C: float,
    p: Exponent,
    ell: int | None = None,
    subset_cap: int = SUBSET_CAP,
) -> VonNeumannCertificate:
    """Check |counting form| <= C * min edge box norm on a 2-uniform system.

    Hypothesis flags record whether every p-weighted box norm is <= 1 and
    every subset product (empty subset included) has L_p norm <= C; the
    main inequality is computed and reported either way.
    """
    assign = full_assignment(system, functions)
    if system.uniformity() != 2:
        raise NotTwoUniform(f"edges must all be doubletons, got {system.edges}")
    if C < 1.0:
        raise BadSpec(f"the constant C must be >= 1, got {C}")
    from .spaces import max_degree

    if ell is None:
        ell = ell_von_neumann(max_degree(system), p)
    ell = require_even(ell)
    edges = system.edges
    if len(edges) >= 1 and (1 << len(edges)) > subset_cap:
        raise SubsetCapExceeded(f"2**{len(edges)} subsets exceed cap {subset_cap}")
    box_norms = {e: box_norm(system, e, assign[e], ell).value for e in edges}
    box_lp = {e: lp_box_norm(system, e, assign[e], ell, p) for e in edges}
    hyp_box = all(v <= 1.0 + REL_TOL for v in box_lp.values())
    worst_subset: tuple[tuple[int, ...], ...] = ()
    worst_lp = 1.0  # empty subset product is the constant one
    for r in range(1, len(edges) + 1):
        for sub in itertools.combinations(edges, r):
            val = product_lp_norm(system, [assign[e] for e in sub], p)
            if val > worst_lp:
                worst_lp, worst_subset = val, sub
    hyp_subsets = worst_lp <= C + REL_TOL
    lhs = abs(lambda_form(system, assign))
    min_edge = min(edges, key=lambda e: (box_norms[e], e))
    rhs = C * box_norms[min_edge]
    tol = REL_TOL * max(1.0, rhs)
    return VonNeumannCertificate(
        ell=ell,
        lhs=lhs,
        rhs=rhs,
        tol=tol,
        holds=bool(lhs <= rhs + tol),
        min_box_edge=min_edge,
        box_norms=box_norms,
        box_lp_norms=box_lp,
        hyp_box_lp_ok=bool(hyp_box),
        worst_subset=worst_subset,
        worst_subset_lp=worst_lp,
        hyp_subset_lp_ok=bool(hyp_subsets),
        C=float(C),
        p=p.as_json(),
    )


@dataclass(frozen=True)
class CountingCertificate:
    ell: int
    lhs: float
    rhs: float
    tol: float
    holds: bool
    diff_box_norms: dict
    hyp_box_lp_ok: bool
    worst_pair: tuple
    worst_pair_lp: float
    hyp_pair_lp_ok: bool
    C: float
    p: object

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tol": self.tol,
            "holds": self.holds,
            "diff_box_norms": {str(list(k)): v for k, v in self.diff_box_norms.items()},
            "hypotheses": {
                "box_lp_at_most_one": self.hyp_box_lp_ok,
                "pair_lp_at_most_C": self.hyp_pair_lp_ok,
            },
            "worst_pair": [[list(e) for e in side] for side in self.worst_pair],
            "worst_pair_lp": self.worst_pair_lp,
            "C": self.C,
            "p": self.p,
        }


def counting_lemma_certificate(
    system: HypergraphSystem,
    functions_f,
    functions_g,
    C: float,
    p: Exponent,
    ell: int | None = None,
    pair_cap: int = PAIR_CAP,
) -> CountingCertificate:
    """Check |counting(f) - counting(g)| <= C * sum of box norms of f - g.

    Hypothesis flags cover the p-weighted box norms of both assignments and
    the L_p norms of every mixed product over disjoint edge-subset pairs.
    """
    from .spaces import edge_function, max_degree

    assign_f = full_assignment(system, functions_f)
    assign_g = full_assignment(system, functions_g)
    if system.uniformity() != 2:
        raise NotTwoUniform(f"edges must all be doubletons, got {system.edges}")
    if C < 1.0:
        raise BadSpec(f"the constant C must be >= 1, got {C}")
    if ell is None:
        ell = ell_von_neumann(max_degree(system), p)
    ell = require_even(ell)
    edges = system.edges
    if 3 ** len(edges) > pair_cap:
        raise PairCapExceeded(f"3**{len(edges)} disjoint pairs exceed cap {pair_cap}")
    hyp_box = True
    for e in edges:
        if lp_box_norm(system, e, assign_f[e], ell, p) > 1.0 + REL_TOL:
            hyp_box = False
        if lp_box_norm(system, e, assign_g[e], ell, p) > 1.0 + REL_TOL:
            hyp_box = False
    worst_pair: tuple = ((), ())
    worst_lp = 1.0  # both-empty pair: the constant one
    for states in itertools.product(range(3), repeat=len(edges)):
        side_f = tuple(e for e, s in zip(edges, states) if s == 1)
        side_g = tuple(e for e, s in zip(edges, states) if s == 2)
        funcs = [assign_f[e] for e in side_f] + [assign_g[e] for e in side_g]
        val = product_lp_norm(system, funcs, p)
        if val > worst_lp:
            worst_lp, worst_pair = val, (side_f, side_g)
    hyp_pairs = worst_lp <= C + REL_TOL
    lhs = abs(lambda_form(system, assign_f) - lambda_form(system, assign_g))
    diffs = {}
    rhs = 0.0
    for e in edges:
        d = edge_function(system, e, assign_f[e].values - assign_g[e].values)
        diffs[e] = box_norm(system, e, d, ell).value
        rhs += diffs[e]
    rhs *= C
    tol = REL_TOL * max(1.0, rhs)
    return CountingCertificate(
        ell=ell,
        lhs=lhs,
        rhs=rhs,
        tol=tol,
        holds=bool(lhs <= rhs + tol),
        diff_box_norms=diffs,
        hyp_box_lp_ok=bool(hyp_box),
        worst_pair=worst_pair,
        worst_pair_lp=worst_lp,
        hyp_pair_lp_ok=bool(hyp_pairs),
        C=float(C),
        p=p.as_json(),
    )
