"""Pseudorandomness certificates for families of nonnegative edge tensors.

A family nu = (nu_e) over a hypergraph system is certified against a
candidate majorant family psi = (psi_e) and constants (C, eta, p) by four
named conditions:

* C1: every nonempty sub-collection has product expectation >= 1 - eta.
* C2a: psi_e is L_p-bounded by C and nu_e - psi_e has cut norm <= eta.
* C2b: the replica-correlation supremum of nu_e - psi_e against products of
  slot functions bounded by nu or by one is <= eta (two replicas of the
  complement by default; the count is a parameter).
* C3: conditional expectations of sub-collection products onto each edge
  have ell-th moment <= C + eta, with ell derived from (C, p) by the even
  replica rule unless overridden.

Sup checks run through the shared boxed-maximization engine: exact mode
enumerates slot vertices and is a certificate; heuristic mode only ever
yields lower bounds, so it can refute a condition but not confirm it
(verdict "unknown").

Two end-to-end certifiers compose the above.  `sum_family_certificate` takes a
family lam close to one in the linear-forms sense plus a box-L_p bounded
part phi, and certifies lam + phi pseudorandom with derived constants
against the majorant phi + 1.  `near_majorant_certificate` takes nu box-norm-close
to a pattern-bounded majorant psi and certifies (C, n*ell*eta, p).  The
module also exposes the intermediate correlation/mass oracles those proofs
bound, so instances can be checked against the sharper internal constants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .boxnorm import REL_TOL, box_norm, lp_box_norm, require_even
from .counting import SUBSET_CAP, lambda_form, least_even_at_least
from .cutnorm import cut_norm
from .engine import (
    COMBO_CAP,
    exact_boxed_max,
    heuristic_boxed_max,
    projection_rows,
)
from .errors import (
    BadSpec,
    DigitOutOfRange,
    MalformedProblem,
    POutOfRange,
    SubsetCapExceeded,
    WrongHypergraph,
)
from .spaces import (
    EdgeFunction,
    Exponent,
    Grid,
    HypergraphSystem,
    as_edge,
    check_function,
    checked_power,
    edge_function,
    lp_norm,
)

PATTERN_CAP = 1 << 20
SAMPLE_DEFAULT = 512


def ell_pseudorandom(C: float, p: Exponent) -> int:
    """Even replica count rule: least even >= 2q + (1 - 1/C) + 1/p."""
    if C < 1.0:
        raise BadSpec(f"the constant C must be >= 1, got {C}")
    if not p.is_inf and p.value <= 1.0:
        raise POutOfRange(f"need p > 1 or p infinite, got {p.value}")
    q = p.conjugate().value
    threshold = 2.0 * q + (1.0 - 1.0 / C) + p.reciprocal()
    return least_even_at_least(threshold)


@dataclass(frozen=True)
class PseudoParams:
    """Constants of one pseudorandomness claim.

    ell defaults to the even replica rule applied to (C, p); c2b_replicas
    is the number of complement replicas used by the C2b correlation check.
    """

    C: float
    eta: float
    p: Exponent
    ell: int | None = None
    c2b_replicas: int = 2

    def resolved_ell(self) -> int:
        if self.ell is None:
            return ell_pseudorandom(self.C, self.p)
        return require_even(self.ell)

    def validate(self) -> None:
        if self.C < 1.0:
            raise BadSpec(f"C must be >= 1, got {self.C}")
        if not (0.0 < self.eta < 1.0):
            raise BadSpec(f"eta must lie in (0, 1), got {self.eta}")
        if self.c2b_replicas < 1:
            raise BadSpec(f"need at least one replica, got {self.c2b_replicas}")
        self.resolved_ell()

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "eta": self.eta,
            "p": self.p.as_json(),
            "ell": self.resolved_ell(),
            "c2b_replicas": self.c2b_replicas,
        }


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one condition check.

    verdict is "true", "false", or "unknown" ("unknown" only when a
    heuristic search stayed below the bound without certifying the sup).
    comparison says which side the bound sits on: worst_value must be >=
    bound for "ge" conditions (C1) and <= bound for "le" conditions.
    """

    condition: str
    verdict: str
    worst_value: float
    bound: float
    comparison: str
    witness: dict
    mode: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "worst_value": self.worst_value,
            "bound": self.bound,
            "comparison": self.comparison,
            "witness": dict(self.witness),
            "mode": self.mode,
            "details": dict(self.details),
        }


def full_family(system: HypergraphSystem, functions, nonnegative: bool = False) -> dict:
    """Validate an edge -> tensor family covering every edge of the system."""
    from .counting import full_assignment

    fam = full_assignment(system, functions)
    if nonnegative:
        for e, fn in fam.items():
            lo = float(np.min(fn.values))
            if lo < 0.0:
                raise BadSpec(f"family tensor on {e} has negative entry {lo}")
    return fam


# ---------------------------------------------------------------------------
# Sup problems over replicated complements


@dataclass(frozen=True)
class Slot:
    """One optimized function: 0 <= g <= bound on edge, at one replica.

    bound None means the constant-one bound.  label is free-form and only
    echoed into witnesses.
    """

    edge: tuple[int, ...]
    replica: int
    bound: EdgeFunction | None
    label: str = ""


@dataclass(frozen=True)
class SupProblem:
    """Maximize |E[kernel * prod of slot functions]| over the slot boxes.

    The base edge's coordinates appear once; every other coordinate used by
    the kernel or a slot appears in per-replica copies indexed 0..ell-1.
    The kernel may live on any edge; its complement coordinates read the
    kernel_replica copy.
    """

    system: HypergraphSystem
    base_edge: tuple[int, ...]
    ell: int
    kernel: EdgeFunction
    slots: tuple[Slot, ...]
    kernel_replica: int = 0

    def validate(self) -> None:
        base = as_edge(self.base_edge)
        if self.ell < 1:
            raise MalformedProblem(f"replica budget must be >= 1, got {self.ell}")
        check_function(self.system, self.kernel)
        if not (0 <= self.kernel_replica < self.ell):
            raise DigitOutOfRange(
                f"kernel replica {self.kernel_replica} outside 0..{self.ell - 1}"
            )
        for s in self.slots:
            if tuple(s.edge) == base:
                raise MalformedProblem(f"slot edge {s.edge} equals the base edge")
            if not (0 <= s.replica < self.ell):
                raise DigitOutOfRange(
                    f"slot replica {s.replica} outside 0..{self.ell - 1}"
                )
            if s.bound is not None:
                check_function(self.system, s.bound)
                if s.bound.edge != tuple(s.edge):
                    raise MalformedProblem(
                        f"bound lives on {s.bound.edge}, slot on {s.edge}"
                    )
                if float(np.min(s.bound.values)) < 0.0:
                    raise MalformedProblem(
                        f"slot bound on {s.edge} has negative entries"
                    )


@dataclass(frozen=True)
class SupResult:
    value: float
    signed: float
    masks: tuple[int, ...]
    mode: str
    combos: int
    restarts_used: int
    certified: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "signed": self.signed,
            "masks": [hex(m) for m in self.masks],
            "mode": self.mode,
            "combos": self.combos,
            "restarts_used": self.restarts_used,
            "certified": self.certified,
        }


def _sup_grid(problem: SupProblem) -> Grid:
    base = set(problem.base_edge)
    keys = {(v, 0) for v in problem.base_edge}
    for w in problem.kernel.edge:
        if w not in base:
            keys.add((w, problem.kernel_replica))
    for s in problem.slots:
        for w in s.edge:
            if w not in base:
                keys.add((w, s.replica))
    return Grid(problem.system, sorted(keys))


def _digits_for(edge, base: set, replica: int):
    return tuple(0 if v in base else replica for v in edge)


def _slot_rows(problem: SupProblem, grid: Grid):
    base = set(problem.base_edge)
    rows = []
    for s in problem.slots:
        digits = _digits_for(s.edge, base, s.replica)
        positions = [grid.pos[(v, d)] for v, d in zip(s.edge, digits)]
        sizes = [problem.system.spaces[v].size for v in s.edge]
        atoms = 1
        for z in sizes:
            atoms *= z
        if s.bound is None:
            flat = np.ones(atoms)
        else:
            flat = s.bound.values.reshape(-1)
        rows.append(projection_rows(grid.shape, positions, sizes, flat))
    return rows


def sup_multilinear(
    problem: SupProblem,
    mode: str = "exact",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> SupResult:
    """Solve one boxed sup problem; exact results certify an upper bound."""
    problem.validate()
    grid = _sup_grid(problem)
    base_set = set(problem.base_edge)
    kernel_view = grid.lift(
        problem.kernel.edge,
        problem.kernel.values,
        _digits_for(problem.kernel.edge, base_set, problem.kernel_replica),
    )
    base_vec = grid.product([kernel_view]).reshape(-1)
    rows = _slot_rows(problem, grid)
    combos = 1
    for r in rows:
        combos <<= r.shape[0]
    if mode == "auto":
        mode = "exact" if combos <= cap else "heuristic"
    if mode == "exact":
        res = exact_boxed_max(base_vec, rows, cap=cap)
        return SupResult(res.value, res.signed, res.masks, "exact", combos, 0, True)
    if mode == "heuristic":
        res = heuristic_boxed_max(base_vec, rows, restarts=restarts, seed=seed)
        return SupResult(
            res.value, res.signed, res.masks, "heuristic", combos, res.restarts_used, False
        )
    raise MalformedProblem(f"unknown sup mode {mode!r}")


# ---------------------------------------------------------------------------
# Condition checks


def check_C1(
    system: HypergraphSystem,
    nu,
    params: PseudoParams,
    subset_cap: int = SUBSET_CAP,
) -> ConditionReport:
    """Every nonempty sub-collection product has expectation >= 1 - eta."""
    fam = full_family(system, nu, nonnegative=True)
    params.validate()
    edges = system.edges
    if (1 << len(edges)) > subset_cap:
        raise SubsetCapExceeded(f"2**{len(edges)} subsets exceed cap {subset_cap}")
    worst = math.inf
    witness: tuple = ()
    for r in range(1, len(edges) + 1):
        for sub in itertools.combinations(edges, r):
            val = lambda_form(system, fam, edges=sub)
            if val < worst:
                worst, witness = val, sub
    bound = 1.0 - params.eta
    verdict = "true" if worst >= bound - REL_TOL else "false"
    return ConditionReport(
        condition="C1",
        verdict=verdict,
        worst_value=worst,
        bound=bound,
        comparison="ge",
        witness={"subset": [list(e) for e in witness]},
        mode="exact",
        details={"subsets_checked": (1 << len(edges)) - 1},
    )


def check_C2a(
    system: HypergraphSystem,
    nu,
    psi,
    params: PseudoParams,
    mode: str = "auto",
    restarts: int = 32,
    seed: int = 0,
) -> ConditionReport:
    """psi_e bounded by C in L_p and nu_e - psi_e small in cut norm."""
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi)
    params.validate()
    worst = -math.inf
    witness: dict = {}
    lp_ok = True
    lp_values = {}
    any_heuristic = False
    for e in system.edges:
        lp_e = lp_norm(system, e, fam_psi[e], params.p)
        lp_values[str(list(e))] = lp_e
        if lp_e > params.C + REL_TOL:
            lp_ok = False
            witness = {"edge": list(e), "psi_lp": lp_e}
        diff = edge_function(system, e, fam_nu[e].values - fam_psi[e].values)
        res = cut_norm(system, e, diff, mode=mode, restarts=restarts, seed=seed)
        if res.mode == "heuristic":
            any_heuristic = True
        if res.value > worst:
            worst = res.value
            if lp_ok:
                witness = {"edge": list(e), "cut_witness": res.witness.as_dict()}
    bound = params.eta
    if not lp_ok:
        verdict = "false"
    elif worst > bound + REL_TOL:
        verdict = "false"  # even a heuristic lower bound refutes
    elif any_heuristic:
        verdict = "unknown"
    else:
        verdict = "true"
    return ConditionReport(
        condition="C2a",
        verdict=verdict,
        worst_value=worst,
        bound=bound,
        comparison="le",
        witness=witness,
        mode="heuristic" if any_heuristic else "exact",
        details={
            "psi_lp_norms": lp_values,
            "psi_lp_ok": lp_ok,
            "C": params.C,
            "note": "cut comparison reads each coordinate once (no replicas)",
        },
    )


def _c2b_slots(system: HypergraphSystem, e, bounds_by_edge, selectors, replicas):
    slots = []
    k = 0
    for e2 in system.edges:
        if e2 == e:
            continue
        for w in range(replicas):
            label = selectors[k]
            bound = bounds_by_edge[e2] if label == "nu" else None
            slots.append(Slot(e2, w, bound, label))
            k += 1
    return tuple(slots)


def check_C2b(
    system: HypergraphSystem,
    nu,
    psi,
    params: PseudoParams,
    mode: str = "auto",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> ConditionReport:
    """Replica correlation of nu_e - psi_e against nu-or-one bounded slots."""
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi)
    params.validate()
    replicas = params.c2b_replicas
    worst = -math.inf
    witness: dict = {}
    any_heuristic = False
    for e in system.edges:
        others = [e2 for e2 in system.edges if e2 != e]
        n_slots = len(others) * replicas
        kernel = edge_function(system, e, fam_nu[e].values - fam_psi[e].values)
        for combo in itertools.product(("nu", "one"), repeat=n_slots):
            slots = _c2b_slots(system, e, fam_nu, combo, replicas)
            problem = SupProblem(system, e, max(replicas, 1), kernel, slots)
            res = sup_multilinear(problem, mode=mode, restarts=restarts, seed=seed, cap=cap)
            if not res.certified:
                any_heuristic = True
            if res.value > worst:
                worst = res.value
                witness = {
                    "edge": list(e),
                    "selectors": list(combo),
                    "masks": [hex(m) for m in res.masks],
                    "mode": res.mode,
                }
    bound = params.eta
    if worst > bound + REL_TOL:
        verdict = "false"
    elif any_heuristic:
        verdict = "unknown"
    else:
        verdict = "true"
    return ConditionReport(
        condition="C2b",
        verdict=verdict,
        worst_value=worst,
        bound=bound,
        comparison="le",
        witness=witness,
        mode="heuristic" if any_heuristic else "exact",
        details={"replicas": replicas},
    )


def conditional_onto_edge(
    system: HypergraphSystem, e, functions
) -> EdgeFunction:
    """Average the product of the given tensors over all coordinates not in e."""
    e = as_edge(e)
    funcs = list(functions)
    coords = sorted(set(e) | set(v for f in funcs for v in f.edge))
    grid = Grid(system, [(v, 0) for v in coords])
    acc = np.ones(grid.shape)
    for f in funcs:
        acc = acc * grid.lift(f.edge, f.values, (0,) * len(f.edge))
    out_keys = [(v, 0) for v in coords if v not in e]
    acc = acc * grid.weight_tensor(out_keys)
    acc = np.broadcast_to(acc, grid.shape)
    axes = tuple(grid.pos[k] for k in out_keys)
    if axes:
        acc = np.sum(np.ascontiguousarray(acc), axis=axes)
    return edge_function(system, e, acc)


def check_C3(
    system: HypergraphSystem,
    nu,
    params: PseudoParams,
    subset_cap: int = SUBSET_CAP,
) -> ConditionReport:
    """Moments of conditional sub-collection densities stay below C + eta."""
    fam = full_family(system, nu, nonnegative=True)
    params.validate()
    ell = params.resolved_ell()
    edges = system.edges
    if (1 << len(edges)) > subset_cap:
        raise SubsetCapExceeded(f"2**{len(edges)} subsets exceed cap {subset_cap}")
    worst = -math.inf
    witness: dict = {}
    checked = 0
    for e in edges:
        others = [e2 for e2 in edges if e2 != e]
        ge = Grid(system, [(v, 0) for v in e])
        for r in range(1, len(others) + 1):
            for sub in itertools.combinations(others, r):
                dens = conditional_onto_edge(system, e, [fam[e2] for e2 in sub])
                moment = ge.reduce(
                    ge.product([ge.lift(e, np.power(dens.values, ell), (0,) * len(e))])
                )
                checked += 1
                if moment > worst:
                    worst = moment
                    witness = {"edge": list(e), "subset": [list(x) for x in sub]}
    if checked == 0:
        return ConditionReport(
            condition="C3",
            verdict="true",
            worst_value=0.0,
            bound=params.C + params.eta,
            comparison="le",
            witness={},
            mode="exact",
            details={"vacuous": True, "ell": ell},
        )
    bound = params.C + params.eta
    verdict = "true" if worst <= bound + REL_TOL else "false"
    return ConditionReport(
        condition="C3",
        verdict=verdict,
        worst_value=worst,
        bound=bound,
        comparison="le",
        witness=witness,
        mode="exact",
        details={"moments_checked": checked, "ell": ell},
    )


# ---------------------------------------------------------------------------
# Linear-forms deviation


@dataclass(frozen=True)
class DeviationReport:
    """Extremes of the replica product expectations over 0/1 patterns.

    eta is the deviation from one: max(max_value - 1, 1 - min_value, 0).
    When the pattern count exceeds the cap the scan degrades to sampling
    (structured patterns plus seeded random ones) and exact is False.
    """

    min_value: float
    max_value: float
    eta: float
    patterns_checked: int
    exact: bool
    degraded: bool
    witness_min: dict
    witness_max: dict

    def to_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "max_value": self.max_value,
            "eta": self.eta,
            "patterns_checked": self.patterns_checked,
            "exact": self.exact,
            "degraded": self.degraded,
            "witness_min": dict(self.witness_min),
            "witness_max": dict(self.witness_max),
        }


def _pattern_factors(system: HypergraphSystem, ell: int):
    factors = []
    for e in system.edges:
        for digits in itertools.product(range(ell), repeat=len(e)):
            factors.append((e, digits))
    return factors


def _decode_mask(mask: int, factors) -> dict:
    chosen = [
        {"edge": list(e), "digits": list(d)}
        for k, (e, d) in enumerate(factors)
        if (mask >> k) & 1
    ]
    return {"mask": hex(mask), "factors": chosen}


def linear_forms_deviation(
    system: HypergraphSystem,
    functions,
    ell: int,
    mode: str = "exact",
    samples: int = SAMPLE_DEFAULT,
    seed: int = 0,
    pattern_cap: int = PATTERN_CAP,
) -> DeviationReport:
    """Scan replica product expectations over all 0/1 exponent patterns.

    Each factor is one (edge, replica digits) pair; a pattern selects a
    subset of factors and its value is the expectation of their product
    over the fully replicated grid.  The all-zero pattern is the empty
    product, hence exactly 1.  Exceeding the pattern cap never raises: the
    scan degrades to sampling (flagged).
    """
    fam = full_family(system, functions)
    ell = require_even(ell)
    factors = _pattern_factors(system, ell)
    count = len(factors)
    coords = sorted(set(v for e in system.edges for v in e))
    grid = Grid(system, [(v, m) for v in coords for m in range(ell)])
    weights = grid.weight_tensor()
    flat = []
    for e, digits in factors:
        view = grid.lift(e, fam[e].values, digits)
        flat.append(np.broadcast_to(view, grid.shape).reshape(-1).copy())
    wvec = np.broadcast_to(weights, grid.shape).reshape(-1).copy()
    cells = wvec.shape[0]

    degraded = False
    if mode == "exact" and count < 63 and (1 << count) <= pattern_cap:
        lo_bits = count
        budget = 1 << 22
        while lo_bits > 0 and (1 << lo_bits) * cells > budget:
            lo_bits -= 1
        best_min = (math.inf, 0)
        best_max = (-math.inf, 0)
        for hi in range(1 << (count - lo_bits)):
            vec = wvec.copy()
            for k in range(count - lo_bits):
                if (hi >> k) & 1:
                    vec *= flat[lo_bits + k]
            block = vec[None, :]
            for f in range(lo_bits):
                block = np.concatenate([block, block * flat[f][None, :]])
            vals = np.sum(np.ascontiguousarray(block), axis=1)
            i_min = int(np.argmin(vals))
            i_max = int(np.argmax(vals))
            if float(vals[i_min]) < best_min[0]:
                best_min = (float(vals[i_min]), (hi << lo_bits) | i_min)
            if float(vals[i_max]) > best_max[0]:
                best_max = (float(vals[i_max]), (hi << lo_bits) | i_max)
        checked = 1 << count
        exact = True
    else:
        if mode == "exact":
            degraded = True  # pattern cap exceeded: never fatal, sample instead
        masks = [0, (1 << count) - 1]
        for e in system.edges:
            m = 0
            for k, (e2, _) in enumerate(factors):
                if e2 == e:
                    m |= 1 << k
            masks.append(m)
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        for _ in range(max(0, samples)):
            bits = rng.integers(0, 2, size=count)
            masks.append(int(sum(1 << k for k in range(count) if bits[k])))
        best_min = (math.inf, 0)
        best_max = (-math.inf, 0)
        for mask in masks:
            vec = wvec.copy()
            for k in range(count):
                if (mask >> k) & 1:
                    vec *= flat[k]
            val = float(np.sum(np.ascontiguousarray(vec)))
            if val < best_min[0]:
                best_min = (val, mask)
            if val > best_max[0]:
                best_max = (val, mask)
        checked = len(masks)
        exact = False

    eta = max(best_max[0] - 1.0, 1.0 - best_min[0], 0.0)
    return DeviationReport(
        min_value=best_min[0],
        max_value=best_max[0],
        eta=eta,
        patterns_checked=checked,
        exact=exact,
        degraded=degraded,
        witness_min=_decode_mask(best_min[1], factors),
        witness_max=_decode_mask(best_max[1], factors),
    )


def measure_eta(
    system: HypergraphSystem,
    functions,
    ell: int,
    mode: str = "exact",
    samples: int = SAMPLE_DEFAULT,
    seed: int = 0,
    pattern_cap: int = PATTERN_CAP,
) -> float:
    """Largest deviation from one over all replica product patterns."""
    return linear_forms_deviation(
        system, functions, ell, mode=mode, samples=samples, seed=seed,
        pattern_cap=pattern_cap,
    ).eta


# ---------------------------------------------------------------------------
# Bundled certification


@dataclass(frozen=True)
class PseudoCertificate:
    params: PseudoParams
    conditions: dict
    verdict: str

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
            "verdict": self.verdict,
        }


def _merge_verdicts(reports) -> str:
    vs = [r.verdict for r in reports]
    if any(v == "false" for v in vs):
        return "false"
    if any(v == "unknown" for v in vs):
        return "unknown"
    return "true"


def certify_pseudorandom(
    system: HypergraphSystem,
    nu,
    psi=None,
    params: PseudoParams | None = None,
    mode: str = "auto",
    restarts: int = 32,
    seed: int = 0,
    subset_cap: int = SUBSET_CAP,
    combo_cap: int = COMBO_CAP,
) -> PseudoCertificate:
    """Run C1, C2a, C2b, C3 against a candidate majorant (default psi = nu)."""
    if params is None:
        raise BadSpec("params (C, eta, p) are required")
    params.validate()
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi) if psi is not None else fam_nu
    c1 = check_C1(system, fam_nu, params, subset_cap=subset_cap)
    c2a = check_C2a(system, fam_nu, fam_psi, params, mode=mode, restarts=restarts, seed=seed)
    c2b = check_C2b(
        system, fam_nu, fam_psi, params, mode=mode, restarts=restarts, seed=seed, cap=combo_cap
    )
    c3 = check_C3(system, fam_nu, params, subset_cap=subset_cap)
    conditions = {"C1": c1, "C2a": c2a, "C2b": c2b, "C3": c3}
    return PseudoCertificate(params, conditions, _merge_verdicts(conditions.values()))


def _require_all_coedges(system: HypergraphSystem) -> int:
    """The certifiers need all (n-1)-subsets of an n-vertex ground set, n >= 3."""
    n = system.n
    if n < 3:
        raise WrongHypergraph(f"need at least 3 vertex spaces, got {n}")
    want = set(itertools.combinations(range(n), n - 1))
    have = set(system.edges)
    if have != want:
        raise WrongHypergraph(
            f"edges must be exactly the {n} subsets of size {n - 1}, got {sorted(have)}"
        )
    return n


@dataclass(frozen=True)
class TheoremCertificate:
    name: str
    hypotheses: dict
    constants: dict
    deviation: DeviationReport
    inner: PseudoCertificate | None
    verdict: str
    details: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hypotheses": dict(self.hypotheses),
            "constants": dict(self.constants),
            "deviation": self.deviation.to_dict(),
            "inner": self.inner.to_dict() if self.inner is not None else None,
            "verdict": self.verdict,
            "details": dict(self.details),
        }


def sum_family_certificate(
    system: HypergraphSystem,
    lam,
    phi,
    C: float,
    eta: float,
    p: Exponent,
    mode: str = "auto",
    restarts: int = 32,
    seed: int = 0,
    pattern_cap: int = PATTERN_CAP,
) -> TheoremCertificate:
    """Certify lam + phi pseudorandom with derived constants.

    Hypotheses: the system carries all (n-1)-subsets of n >= 3 vertices;
    0 < eta <= (4C)**(-n*ell**n); every replica pattern expectation of lam
    lies in [1-eta, 1+eta]; every phi_e has p-weighted box norm <= C.  The
    conclusion constants are C' = (4C)**(n*ell) and eta' = C' *
    eta**(1/ell**(n-1)) with the majorant psi = phi + 1; the bundled checks
    reuse the hypothesis-side ell (sharper internal constants with base 2C
    are reported in details).
    """
    n = _require_all_coedges(system)
    fam_lam = full_family(system, lam, nonnegative=True)
    fam_phi = full_family(system, phi, nonnegative=True)
    if C < 1.0:
        raise BadSpec(f"C must be >= 1, got {C}")
    if eta <= 0.0:
        raise BadSpec(f"eta must be positive, got {eta}")
    ell = ell_pseudorandom(C, p)
    log4c = math.log(4.0 * C)
    eta_cap = math.exp(-n * checked_power(ell, n) * log4c)
    hyp = {"eta_in_range": bool(0.0 < eta <= eta_cap * (1.0 + 1e-12))}
    dev = linear_forms_deviation(
        system, fam_lam, ell, mode="exact", pattern_cap=pattern_cap
    )
    hyp["linear_forms_within_eta"] = bool(
        dev.exact
        and dev.max_value <= 1.0 + eta + REL_TOL
        and dev.min_value >= 1.0 - eta - REL_TOL
    )
    phi_norms = {}
    ok = True
    for e in system.edges:
        v = lp_box_norm(system, e, fam_phi[e], ell, p)
        phi_norms[str(list(e))] = v
        if v > C + REL_TOL:
            ok = False
    hyp["phi_box_lp_at_most_C"] = bool(ok)
    root = 1.0 / checked_power(ell, n - 1)
    c_pub = math.exp(n * ell * log4c)
    eta_pub = c_pub * math.exp(root * math.log(eta))
    log2c = math.log(2.0 * C)
    c_bar = math.exp(n * ell * log2c)
    eta_bar = c_bar * math.exp(root * math.log(eta))
    hyp["derived_eta_below_one"] = bool(eta_pub < 1.0)
    constants = {
        "ell": ell,
        "eta_cap": eta_cap,
        "C_out": c_pub,
        "eta_out": eta_pub,
        "C_internal": c_bar,
        "eta_internal": eta_bar,
    }
    nu = {
        e: edge_function(system, e, fam_lam[e].values + fam_phi[e].values)
        for e in system.edges
    }
    psi = {
        e: edge_function(system, e, fam_phi[e].values + 1.0) for e in system.edges
    }
    inner = None
    if hyp["derived_eta_below_one"]:
        inner = certify_pseudorandom(
            system,
            nu,
            psi,
            PseudoParams(c_pub, eta_pub, p, ell=ell),
            mode=mode,
            restarts=restarts,
            seed=seed,
        )
    if not all(hyp.values()):
        verdict = "false"
    elif inner is None:
        verdict = "false"
    else:
        verdict = inner.verdict
    return TheoremCertificate(
        name="sum-family-pseudorandomness",
        hypotheses=hyp,
        constants=constants,
        deviation=dev,
        inner=inner,
        verdict=verdict,
        details={"phi_box_lp_norms": phi_norms, "C": C, "eta": eta, "p": p.as_json()},
    )


def near_majorant_certificate(
    system: HypergraphSystem,
    nu,
    psi,
    C: float,
    eta: float,
    p: Exponent,
    mode: str = "auto",
    restarts: int = 32,
    seed: int = 0,
    pattern_cap: int = PATTERN_CAP,
) -> TheoremCertificate:
    """Certify a family box-norm-close to a pattern-bounded majorant.

    Hypotheses: complete (n-1)-uniform system, 0 < eta <= 1/(n*ell), psi's
    replica patterns inside [1-eta, C+eta], every nu_e with p-weighted box
    norm in [1, inf), every psi_e with p-weighted box norm <= C, and
    box_norm(nu_e - psi_e) <= eta * (C*M)**(-(n-1)*ell) where M is the
    largest nu box norm.  Conclusion constants: (C, n*ell*eta, p).
    """
    n = _require_all_coedges(system)
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi)
    if C < 1.0:
        raise BadSpec(f"C must be >= 1, got {C}")
    if eta <= 0.0:
        raise BadSpec(f"eta must be positive, got {eta}")
    ell = ell_pseudorandom(C, p)
    hyp = {"eta_in_range": bool(0.0 < eta <= 1.0 / (n * ell) + 1e-15)}
    dev = linear_forms_deviation(
        system, fam_psi, ell, mode="exact", pattern_cap=pattern_cap
    )
    hyp["psi_patterns_in_band"] = bool(
        dev.exact
        and dev.min_value >= 1.0 - eta - REL_TOL
        and dev.max_value <= C + eta + REL_TOL
    )
    nu_norms = {}
    psi_norms = {}
    nu_ok = True
    psi_ok = True
    for e in system.edges:
        nb = lp_box_norm(system, e, fam_nu[e], ell, p)
        pb = lp_box_norm(system, e, fam_psi[e], ell, p)
        nu_norms[str(list(e))] = nb
        psi_norms[str(list(e))] = pb
        if not (nb >= 1.0 - REL_TOL and math.isfinite(nb)):
            nu_ok = False
        if pb > C + REL_TOL:
            psi_ok = False
    hyp["nu_box_lp_at_least_one"] = bool(nu_ok)
    hyp["psi_box_lp_at_most_C"] = bool(psi_ok)
    big_m = max(nu_norms.values())
    diff_bound = eta * math.exp(-(n - 1) * ell * math.log(C * big_m)) if big_m > 0 else 0.0
    diffs = {}
    diff_ok = True
    for e in system.edges:
        d = edge_function(system, e, fam_nu[e].values - fam_psi[e].values)
        dv = box_norm(system, e, d, ell).value
        diffs[str(list(e))] = dv
        if dv > diff_bound + REL_TOL:
            diff_ok = False
    hyp["difference_box_small"] = bool(diff_ok)
    eta_out = n * ell * eta
    hyp["derived_eta_below_one"] = bool(eta_out < 1.0)
    constants = {
        "ell": ell,
        "M": big_m,
        "difference_bound": diff_bound,
        "C_out": C,
        "eta_out": eta_out,
    }
    inner = None
    if hyp["derived_eta_below_one"]:
        inner = certify_pseudorandom(
            system,
            fam_nu,
            fam_psi,
            PseudoParams(C, eta_out, p, ell=ell),
            mode=mode,
            restarts=restarts,
            seed=seed,
        )
    if not all(hyp.values()):
        verdict = "false"
    elif inner is None:
        verdict = "false"
    else:
        verdict = inner.verdict
    return TheoremCertificate(
        name="near-majorant-pseudorandomness",
        hypotheses=hyp,
        constants=constants,
        deviation=dev,
        inner=inner,
        verdict=verdict,
        details={
            "nu_box_lp_norms": nu_norms,
            "psi_box_lp_norms": psi_norms,
            "difference_box_norms": diffs,
            "C": C,
            "eta": eta,
            "p": p.as_json(),
        },
    )


def resolve_sup_problem(
    system: HypergraphSystem,
    base_edge,
    ell: int,
    kernel: EdgeFunction,
    slot_triples,
    families: dict,
    kernel_replica: int = 0,
) -> SupProblem:
    """Build a SupProblem from (edge, selector, replica) triples.

    families maps selector labels to edge->tensor families; a None family
    means the constant-one bound.
    """
    slots = []
    for edge, selector, replica in slot_triples:
        fam = families[selector]
        bound = None if fam is None else fam[as_edge(edge)]
        slots.append(Slot(tuple(edge), replica, bound, selector))
    return SupProblem(
        system, as_edge(base_edge), ell, kernel, tuple(slots), kernel_replica
    )


# ---------------------------------------------------------------------------
# Correlation / mass oracles matching the proof-level inequalities


def _selector_slot_pairs(system: HypergraphSystem, e, ell: int, exclude=None):
    pairs = []
    for e2 in system.edges:
        if e2 == e:
            continue
        for w in range(ell):
            if exclude is not None and (e2, w) == exclude:
                continue
            pairs.append((e2, w))
    return pairs


def selector_correlation_sup(
    system: HypergraphSystem,
    e,
    kernel: EdgeFunction,
    bound_families: dict,
    ell: int,
    kernel_replica: int = 0,
    exclude_pair=None,
    mode: str = "exact",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> dict:
    """Max over per-slot bound choices of the boxed correlation supremum.

    bound_families maps labels to families (edge -> tensor) or None for the
    constant-one bound; every slot independently picks one label.  Returns
    the overall max with its selector assignment and masks.
    """
    e = as_edge(e)
    pairs = _selector_slot_pairs(system, e, ell, exclude=exclude_pair)
    labels = sorted(bound_families.keys())
    best = None
    for combo in itertools.product(labels, repeat=len(pairs)):
        slots = []
        for (e2, w), label in zip(pairs, combo):
            fam = bound_families[label]
            slots.append(Slot(e2, w, None if fam is None else fam[e2], label))
        problem = SupProblem(system, e, ell, kernel, tuple(slots), kernel_replica)
        res = sup_multilinear(problem, mode=mode, restarts=restarts, seed=seed, cap=cap)
        if best is None or res.value > best["value"]:
            best = {
                "value": res.value,
                "selectors": list(combo),
                "slots": [[list(e2), w] for e2, w in pairs],
                "masks": [hex(m) for m in res.masks],
                "mode": res.mode,
                "certified": res.certified,
            }
    if best is None:
        grid = Grid(system, [(v, 0) for v in kernel.edge])
        view = grid.lift(kernel.edge, kernel.values, (0,) * len(kernel.edge))
        best = {
            "value": abs(grid.reduce(grid.product([view]))),
            "selectors": [],
            "slots": [],
            "masks": [],
            "mode": "exact",
            "certified": True,
        }
    return best


def replica_mass_max(
    system: HypergraphSystem,
    e,
    bound_families: dict,
    ell: int,
) -> dict:
    """Max replica mass: slot functions at their bounds, no kernel.

    All bounds are nonnegative, so the sup over each box is attained at the
    full bound; the value is a plain product expectation per selector
    choice, maximized over choices.
    """
    e = as_edge(e)
    pairs = _selector_slot_pairs(system, e, ell)
    labels = sorted(bound_families.keys())
    base_set = set(e)
    best = None
    for combo in itertools.product(labels, repeat=len(pairs)):
        keys = {(v, 0) for v in e}
        for (e2, w), label in zip(pairs, combo):
            for v in e2:
                if v not in base_set:
                    keys.add((v, w))
        grid = Grid(system, sorted(keys))
        factors = []
        for (e2, w), label in zip(pairs, combo):
            fam = bound_families[label]
            if fam is None:
                continue
            digits = tuple(0 if v in base_set else w for v in e2)
            factors.append(grid.lift(e2, fam[e2].values, digits))
        val = grid.reduce(grid.product(factors))
        if best is None or val > best["value"]:
            best = {
                "value": val,
                "selectors": list(combo),
                "slots": [[list(e2), w] for e2, w in pairs],
            }
    if best is None:
        best = {"value": 1.0, "selectors": [], "slots": []}
    return best


# Named oracles for the intermediate correlation/mass bounds used by the
# two theorem proofs.  Each quantifies slot bounds over three families and
# all ell replicas of the complement coordinate.


def centered_family_correlation_sup(
    system: HypergraphSystem,
    e,
    lam,
    phi,
    ell: int,
    mode: str = "exact",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> dict:
    """Sup correlation of lam_e - 1 against slots bounded by lam, phi, or 1.

    On instances passing the sum-family certifier's hypotheses this is at
    most the internal eta constant with base 2C.
    """
    fam_lam = full_family(system, lam, nonnegative=True)
    fam_phi = full_family(system, phi, nonnegative=True)
    e = as_edge(e)
    kernel = edge_function(system, e, fam_lam[e].values - 1.0)
    return selector_correlation_sup(
        system,
        e,
        kernel,
        {"lam": fam_lam, "one": None, "phi": fam_phi},
        ell,
        mode=mode,
        restarts=restarts,
        seed=seed,
        cap=cap,
    )


def bounded_slot_mass_sup(
    system: HypergraphSystem, e, lam, phi, ell: int
) -> dict:
    """Max expectation of slot products bounded by lam, phi, or 1 (no kernel).

    On instances passing the sum-family certifier's hypotheses this is at
    most the internal C constant with base 2C.
    """
    fam_lam = full_family(system, lam, nonnegative=True)
    fam_phi = full_family(system, phi, nonnegative=True)
    return replica_mass_max(
        system, e, {"lam": fam_lam, "one": None, "phi": fam_phi}, ell
    )


def majorant_gap_correlation_sup(
    system: HypergraphSystem,
    e,
    nu,
    psi,
    ell: int,
    mode: str = "exact",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> dict:
    """Sup correlation of nu_e - psi_e against slots bounded by nu, psi, or 1.

    On instances passing the near-majorant certifier's hypotheses this is
    at most eta.
    """
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi, nonnegative=True)
    e = as_edge(e)
    kernel = edge_function(system, e, fam_nu[e].values - fam_psi[e].values)
    return selector_correlation_sup(
        system,
        e,
        kernel,
        {"nu": fam_nu, "one": None, "psi": fam_psi},
        ell,
        mode=mode,
        restarts=restarts,
        seed=seed,
        cap=cap,
    )


def shifted_majorant_gap_correlation_sup(
    system: HypergraphSystem,
    e,
    kernel_edge,
    kernel_replica: int,
    nu,
    psi,
    ell: int,
    mode: str = "exact",
    restarts: int = 32,
    seed: int = 0,
    cap: int = COMBO_CAP,
) -> dict:
    """Like majorant_gap_correlation_sup with the kernel moved off-base.

    The kernel nu - psi lives on kernel_edge (off the base edge e) and
    reads the kernel_replica copy of the complement coordinate; the slot
    pair (kernel_edge, kernel_replica) is excluded from the product.  On
    instances passing the near-majorant certifier's hypotheses this is at
    most eta.
    """
    fam_nu = full_family(system, nu, nonnegative=True)
    fam_psi = full_family(system, psi, nonnegative=True)
    e = as_edge(e)
    ke = as_edge(kernel_edge)
    if ke == e:
        raise MalformedProblem("kernel edge must differ from the base edge")
    kernel = edge_function(system, ke, fam_nu[ke].values - fam_psi[ke].values)
    return selector_correlation_sup(
        system,
        e,
        kernel,
        {"nu": fam_nu, "one": None, "psi": fam_psi},
        ell,
        kernel_replica=kernel_replica,
        exclude_pair=(ke, kernel_replica),
        mode=mode,
        restarts=restarts,
        seed=seed,
        cap=cap,
    )
