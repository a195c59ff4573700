"""Solvers for the column-selection design problem.

``solve_exact`` is a depth-first branch and bound on the ``x`` variables of an
IP2/IP3 (or IP1) model; ``solve_local_search`` is a greedy + swap heuristic
for instances the tree cannot close; ``brute_force`` enumerates every feasible
subset and serves as the verification oracle.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, column_distance_matrix, row_distance_matrix
from .conflict import CliqueCover, classify_pairs
from .errors import PreconditionError, SizeLimitError
from .model import IpModel, link_coefficients

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
FEASIBLE_LIMIT = "feasible-time-limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded-guard"

BRUTE_FORCE_LIMIT = 10**7


@dataclass
class SolverConfig:
    time_limit: float = 60.0
    node_limit: int | None = None
    seed: int = 0
    branching: str = "min-pair-max-mass"
    bound: str = "pair-completion"
    restarts: int = 300

    def __post_init__(self):
        if self.time_limit is not None and self.time_limit <= 0:
            raise PreconditionError("time_limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise PreconditionError("node_limit must be positive")
        if self.restarts < 0:
            raise PreconditionError("restarts must be >= 0")


@dataclass
class DesignSolution:
    """Selected columns (0-based, into the candidate code) and proof status."""

    selected_columns: list[int]
    objective_value: float | None
    best_bound: float | None
    status: str
    elapsed: float = 0.0
    node_count: int = 0
    source_columns: list[int] | None = None
    warnings: list[str] = field(default_factory=list)
    equidistant: bool | None = None

    @property
    def gap_abs(self) -> float | None:
        if self.objective_value is None or self.best_bound is None:
            return None
        return abs(self.best_bound - self.objective_value)

    @property
    def gap(self) -> float | None:
        g = self.gap_abs
        if g is None:
            return None
        return g / max(1.0, abs(self.best_bound))

    @property
    def exhaustive_columns(self) -> list[int]:
        if self.source_columns is None:
            return list(self.selected_columns)
        return [self.source_columns[c] for c in self.selected_columns]

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "selected": [c + 1 for c in self.exhaustive_columns],
            "objective": _num(self.objective_value),
            "bound": _num(self.best_bound),
            "gap": self.gap,
            "gap_abs": _num(self.gap_abs),
            "status": self.status,
            "elapsed_s": round(self.elapsed, 6) if timings else None,
            "nodes": self.node_count,
            "equidistant": self.equidistant,
            "warnings": list(self.warnings),
        }

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=1, sort_keys=True) + "\n"


def _num(v):
    if v is None:
        return None
    v = float(v)
    return int(v) if v == int(v) else v


@dataclass
class DesignProblem:
    """Dense view of a max-min column-selection instance."""

    C: np.ndarray
    conflicts: np.ndarray
    L: int
    k: int
    source_columns: list[int] | None = None

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def integral(self) -> bool:
        return bool(np.all(self.C == np.round(self.C)))


def _conflict_matrix(n: int, pairs) -> np.ndarray:
    conf = np.zeros((n, n), dtype=bool)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs):
        conf[pairs[:, 0], pairs[:, 1]] = True
        conf[pairs[:, 1], pairs[:, 0]] = True
    return conf


def _clique_conflicts(n: int, cliques) -> np.ndarray:
    conf = np.zeros((n, n), dtype=bool)
    for c in cliques:
        idx = np.asarray(c, dtype=np.int64)
        conf[np.ix_(idx, idx)] = True
    np.fill_diagonal(conf, False)
    return conf


def design_problem(M: Codebook, L: int, rho: int, upper=None, cover: CliqueCover | None = None) -> DesignProblem:
    C, _ = link_coefficients(M)
    if cover is not None:
        conf = _clique_conflicts(M.L, cover.cliques)
    else:
        conf = _conflict_matrix(M.L, classify_pairs(M, rho, upper).infeasible)
    return DesignProblem(C, conf, int(L), M.k, M.metadata.get("source_columns"))


def problem_from_model(model: IpModel) -> DesignProblem:
    """Recover (coefficients, conflicts, budget) from an IP1/IP2/IP3 model."""
    if model.objective_sense != "max" or "t" not in model.var_names:
        raise PreconditionError("solve_exact handles max-min models only")
    index = model.var_index()
    x_idx = model.x_indices()
    n = len(x_idx)
    pos = np.full(model.n_vars, -1, dtype=np.int64)
    pos[x_idx] = np.arange(n)
    t = index["t"]
    budget = model.block("budget")
    if budget is None:
        raise PreconditionError("model has no budget row")
    L = int(math.floor(budget.rhs[0] + 1e-9))
    link = model.block("objective-link")
    C = -link.A[:, x_idx].toarray() if link is not None else np.zeros((0, n))
    conf = np.zeros((n, n), dtype=bool)
    for b in model.blocks:
        if b.family in ("budget", "objective-link", "and-linearization"):
            continue
        if b.family in ("pairwise-conflict", "clique"):
            for r in range(b.n_rows):
                cols = pos[b.A.indices[b.A.indptr[r]:b.A.indptr[r + 1]]]
                conf[np.ix_(cols, cols)] = True
        elif b.family == "column-separation":
            # a positive coefficient on y_ij with rhs 0 forces y_ij = 0, and
            # the AND rows then forbid selecting both i and j
            A = b.A.tocoo()
            for r, c, v in zip(A.row, A.col, A.data):
                if v > 0 and b.rhs[r] <= 0:
                    i, j = (int(s) - 1 for s in model.var_names[c].split("_")[1:])
                    conf[i, j] = conf[j, i] = True
        else:
            raise PreconditionError(f"unsupported constraint family {b.family!r} for solve_exact")
    np.fill_diagonal(conf, False)
    k = model.provenance.get("k") or int(round((1 + math.sqrt(1 + 8 * C.shape[0])) / 2))
    return DesignProblem(C, conf, L, k, model.provenance.get("source_columns"))


def bound_plotkin(k: int, L: int) -> int:
    """``floor(L floor(k^2/4) / C(k,2))``: no column adds more than
    ``floor(k^2/4)`` to the total pairwise distance, and the minimum pair is at
    most the average."""
    if k < 2 or L < 0:
        raise PreconditionError("need k >= 2 and L >= 0")
    return (L * (k * k // 4)) // math.comb(k, 2)


def _finish(prob: DesignProblem, selected, objective, bound, status, start, nodes, warnings=()):
    sel = sorted(int(c) for c in selected)
    eq = None
    if status == OPTIMAL and sel and prob.C.shape[0]:
        acc = prob.C[:, sel].sum(axis=1)
        eq = bool(np.all(acc == acc[0]))
    return DesignSolution(sel, objective, bound, status, time.perf_counter() - start, nodes,
                          prob.source_columns, list(warnings), eq)


def _value(prob: DesignProblem, selected) -> float:
    if prob.C.shape[0] == 0:
        return 0.0
    if len(selected) == 0:
        return 0.0
    return float(prob.C[:, list(selected)].sum(axis=1).min())


def _top_sum(values: np.ndarray, r: int, axis: int) -> np.ndarray:
    """Sum of the ``r`` largest entries along ``axis``."""
    m = values.shape[axis]
    if r >= m:
        return values.sum(axis=axis)
    part = np.partition(values, m - r, axis=axis)
    return np.take(part, np.arange(m - r, m), axis=axis).sum(axis=axis)


def _node_bound(prob: DesignProblem, acc: np.ndarray, avail: np.ndarray, r: int) -> float:
    """Admissible bound on the best completion of a node.

    Each row pair can gain at most its ``r`` largest remaining coefficients;
    and the minimum pair is at most the average, where the total gain is at
    most the ``r`` largest remaining column masses.
    """
    sub = prob.C[:, avail]
    if sub.shape[1] == 0 or r <= 0:
        return float(acc.min())
    per_pair = float((acc + _top_sum(sub, r, axis=1)).min())
    masses = sub.sum(axis=0)
    average = (acc.sum() + _top_sum(masses, r, axis=0)) / prob.C.shape[0]
    b = min(per_pair, float(average))
    if prob.integral:
        b = math.floor(b + 1e-9)
    return b


def branch_and_bound(prob: DesignProblem, cfg: SolverConfig | None = None, initial=None) -> DesignSolution:
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    P, n = prob.C.shape
    if prob.L < 0:
        return _finish(prob, [], None, None, INFEASIBLE, start, 0)
    if P == 0:
        return _finish(prob, [], None, None, UNBOUNDED, start, 0, ["no row pairs: objective is unbounded"])
    mass = prob.C.sum(axis=0)
    best_sel: list[int] = []
    best_val = 0.0
    if initial is not None:
        init = sorted(int(c) for c in initial)
        if len(init) <= prob.L and not prob.conflicts[np.ix_(init, init)].any():
            best_sel, best_val = init, _value(prob, init)
        else:
            log.warning("ignoring infeasible warm start")
    plotkin = bound_plotkin(prob.k, prob.L) if prob.integral and np.all(np.isin(prob.C, (0, 1))) else math.inf
    root_avail = np.ones(n, dtype=bool)
    root_bound = min(_node_bound(prob, np.zeros(P), root_avail, prob.L), plotkin)
    # stack entries: (selected, avail, acc, parent bound)
    stack = [((), root_avail, np.zeros(P), root_bound)]
    nodes = 0
    limited = False
    while stack:
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            limited = True
            break
        if cfg.time_limit is not None and nodes % 64 == 0 and time.perf_counter() - start > cfg.time_limit:
            limited = True
            break
        sel, avail, acc, parent_bound = stack.pop()
        if parent_bound <= best_val:
            continue
        nodes += 1
        value = float(acc.min())
        if value > best_val:
            best_sel, best_val = list(sel), value
        r = prob.L - len(sel)
        if r <= 0 or not avail.any():
            continue
        bound = min(_node_bound(prob, acc, avail, r), parent_bound)
        if bound <= best_val:
            continue
        p_star = int(np.argmin(acc))
        cand = avail & (prob.C[p_star] > 0)
        if not cand.any():
            continue
        i = int(np.argmax(np.where(cand, mass, -np.inf)))
        out_avail = avail.copy()
        out_avail[i] = False
        in_avail = out_avail & ~prob.conflicts[i]
        stack.append((sel, out_avail, acc, bound))
        stack.append((sel + (i,), in_avail, acc + prob.C[:, i], bound))
    if limited:
        open_bound = max([b for *_, b in stack], default=best_val)
        bound = max(best_val, min(open_bound, root_bound))
        status = OPTIMAL if bound <= best_val else FEASIBLE_LIMIT
    else:
        bound, status = best_val, OPTIMAL
    return _finish(prob, best_sel, best_val, bound, status, start, nodes)


def solve_exact(model: IpModel, cfg: SolverConfig | None = None, initial=None) -> DesignSolution:
    """Branch and bound on a max-min design model.

    ``initial`` is an optional feasible selection (0-based) used as the first
    incumbent.
    """
    return branch_and_bound(problem_from_model(model), cfg, initial)


# ---------------------------------------------------------------------------
# local search


def _key(acc: np.ndarray) -> tuple[float, int]:
    m = acc.min()
    return float(m), -int(np.count_nonzero(acc == m))


def _keys(accs: np.ndarray):
    """Column-wise keys of a (P, m) matrix: (min, -count at min)."""
    mins = accs.min(axis=0)
    counts = (accs == mins).sum(axis=0)
    return mins, -counts


def _pick(mins, negcounts, order=None) -> int:
    """Index of the lexicographically best (min, -count); ties lowest index."""
    best = np.flatnonzero(mins == mins.max())
    best = best[negcounts[best] == negcounts[best].max()]
    return int(best[0])


def _fill(prob: DesignProblem, sel: list[int], acc: np.ndarray, chosen: np.ndarray, blocked: np.ndarray):
    while len(sel) < prob.L:
        avail = np.flatnonzero(~chosen & (blocked == 0))
        if avail.size == 0:
            return False
        mins, negc = _keys(acc[:, None] + prob.C[:, avail])
        i = int(avail[_pick(mins, negc)])
        sel.append(i)
        chosen[i] = True
        acc += prob.C[:, i]
        blocked += prob.conflicts[i]
    return True


def _climb(prob: DesignProblem, sel: list[int], acc: np.ndarray, chosen: np.ndarray, blocked: np.ndarray, deadline):
    """Best-improvement 1-swaps until the (min, -count at min) key stops improving."""
    current = _key(acc)
    while time.perf_counter() < deadline:
        best = None
        for pos, s in enumerate(sel):
            free = ~chosen & (blocked - prob.conflicts[s] == 0)
            cand = np.flatnonzero(free)
            if cand.size == 0:
                continue
            accs = (acc - prob.C[:, s])[:, None] + prob.C[:, cand]
            mins, negc = _keys(accs)
            j = _pick(mins, negc)
            key = (float(mins[j]), int(negc[j]))
            if key > current and (best is None or key > best[0]):
                best = (key, pos, int(cand[j]))
        if best is None:
            return
        current, pos, c = best
        s = sel[pos]
        chosen[s] = False
        blocked -= prob.conflicts[s]
        acc -= prob.C[:, s]
        sel[pos] = c
        chosen[c] = True
        blocked += prob.conflicts[c]
        acc += prob.C[:, c]


def local_search(prob: DesignProblem, cfg: SolverConfig | None = None) -> DesignSolution:
    """Greedy construction, swap hill climbing, then seeded perturbation restarts.

    Candidates are ranked by the minimum row-pair distance after the move and
    then by how few pairs sit at that minimum (ties: lowest index).
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    deadline = start + (cfg.time_limit if cfg.time_limit is not None else math.inf)
    P, n = prob.C.shape
    if prob.L < 0:
        return _finish(prob, [], None, None, INFEASIBLE, start, 0)
    if P == 0:
        return _finish(prob, [], None, None, UNBOUNDED, start, 0)
    conf = prob.conflicts.astype(np.int32)
    work = DesignProblem(prob.C, conf, prob.L, prob.k, prob.source_columns)
    plotkin = bound_plotkin(prob.k, prob.L) if np.all(np.isin(prob.C, (0, 1))) else math.inf
    bound = min(_node_bound(prob, np.zeros(P), np.ones(n, bool), prob.L), plotkin)

    sel: list[int] = []
    acc = np.zeros(P)
    chosen = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=np.int32)
    complete = _fill(work, sel, acc, chosen, blocked)
    _climb(work, sel, acc, chosen, blocked, deadline)
    best = (_key(acc), list(sel))
    rng = np.random.default_rng(cfg.seed)
    iterations = 0
    while iterations < cfg.restarts and best[0][0] < bound and time.perf_counter() < deadline and sel:
        iterations += 1
        sel, acc = list(best[1]), prob.C[:, best[1]].sum(axis=1)
        chosen = np.zeros(n, dtype=bool)
        chosen[sel] = True
        blocked = conf[sel].sum(axis=0).astype(np.int32) if sel else np.zeros(n, np.int32)
        q = min(len(sel), max(2, len(sel) // 5))
        for s in rng.choice(len(sel), size=q, replace=False).tolist():
            c = sel[s]
            chosen[c] = False
            blocked -= conf[c]
            acc -= prob.C[:, c]
        sel = [c for c in sel if chosen[c]]
        # a random feasible column first, then the greedy refill
        free = np.flatnonzero(~chosen & (blocked == 0))
        if free.size:
            c = int(rng.choice(free))
            sel.append(c)
            chosen[c] = True
            blocked += conf[c]
            acc += prob.C[:, c]
        complete = _fill(work, sel, acc, chosen, blocked) or complete
        _climb(work, sel, acc, chosen, blocked, deadline)
        key = _key(acc)
        if key >= best[0]:
            best = (key, list(sel))
    value = best[0][0]
    selected = best[1]
    warnings = []
    if len(selected) < prob.L:
        warnings.append(f"short-selection: only {len(selected)} of {prob.L} columns could be placed without conflicts")
    status = OPTIMAL if value >= bound and not warnings else FEASIBLE_LIMIT
    sol = _finish(prob, selected, value, max(bound, value), status, start, iterations, warnings)
    return sol


def solve_local_search(M: Codebook, L: int, rho: int, cover: CliqueCover | None = None,
                       cfg: SolverConfig | None = None, upper=None) -> DesignSolution:
    return local_search(design_problem(M, L, rho, upper, cover), cfg)


# ---------------------------------------------------------------------------
# oracle and certificate


def _subset_count(n: int, L: int) -> int:
    return sum(math.comb(n, j) for j in range(0, min(n, L) + 1))


def brute_force(M: Codebook, L: int, rho: int, upper=None, limit: int = BRUTE_FORCE_LIMIT) -> DesignSolution:
    """Enumerate every conflict-free subset of at most ``L`` columns."""
    n = M.L
    count = _subset_count(n, L)
    if count > limit:
        raise SizeLimitError(f"brute force would enumerate {count} subsets (limit {limit})")
    start = time.perf_counter()
    C, _ = link_coefficients(M)
    D = column_distance_matrix(M)
    bad = D < rho
    if upper is not None:
        bad |= D > upper
    np.fill_diagonal(bad, False)
    masks = [sum(1 << j for j in np.flatnonzero(bad[i]).tolist()) for i in range(n)]
    cols = [C[:, i] for i in range(n)]
    best = [0.0 if C.shape[0] else None, ()]
    visited = [0]

    def rec(first: int, chosen: tuple, acc: np.ndarray, forbidden: int):
        visited[0] += 1
        if chosen:
            v = float(acc.min())
            if v > best[0]:
                best[0], best[1] = v, chosen
        if len(chosen) == L:
            return
        for i in range(first, n):
            if not (forbidden >> i) & 1:
                rec(i + 1, chosen + (i,), acc + cols[i], forbidden | masks[i])

    rec(0, (), np.zeros(C.shape[0]), 0)
    prob = DesignProblem(C, bad, L, M.k, M.metadata.get("source_columns"))
    if C.shape[0] == 0:
        return _finish(prob, [], None, None, UNBOUNDED, start, visited[0])
    return _finish(prob, best[1], best[0], best[0], OPTIMAL, start, visited[0])


@dataclass
class CertifyReport:
    confirmed: bool
    objective: float
    issues: list[str]


def certify(M: Codebook, selection, L: int, rho: int, upper=None, claimed_objective=None) -> CertifyReport:
    """Recompute budget, column separation and min row distance from scratch."""
    sel = [int(c) for c in selection]
    issues = []
    if len(sel) > L:
        issues.append(f"budget exceeded: {len(sel)} > {L}")
    if len(set(sel)) != len(sel):
        issues.append("selection repeats a column")
    for a in range(len(sel)):
        for b in range(a + 1, len(sel)):
            i, j = sel[a], sel[b]
            d = int(np.sum(M.entries[:, i] != M.entries[:, j]))
            if d < rho or (upper is not None and d > upper):
                issues.append(f"conflicting pair ({i},{j}) at distance {d}")
    if sel:
        D = row_distance_matrix(M.entries[:, sel])
        objective = float(D[np.triu_indices(M.k, 1)].min())
    else:
        objective = 0.0
    if claimed_objective is not None and abs(float(claimed_objective) - objective) > 1e-9:
        issues.append(f"claimed objective {claimed_objective} but recomputed {objective}")
    return CertifyReport(not issues, objective, issues)


# ---------------------------------------------------------------------------
# external MILP route


def solve_highs(model: IpModel, time_limit: float | None = None) -> DesignSolution:
    """Solve any model with SciPy's HiGHS MILP interface (reference route)."""
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, milp

    start = time.perf_counter()
    A = sparse.vstack([b.A for b in model.blocks], format="csr") if model.blocks else None
    lo, hi = [], []
    for b in model.blocks:
        if b.sense == "<=":
            lo.append(np.full(b.n_rows, -np.inf))
            hi.append(b.rhs)
        elif b.sense == ">=":
            lo.append(b.rhs)
            hi.append(np.full(b.n_rows, np.inf))
        else:
            lo.append(b.rhs)
            hi.append(b.rhs)
    c = -model.objective if model.objective_sense == "max" else model.objective
    options = {"time_limit": time_limit} if time_limit else {}
    res = milp(
        c,
        constraints=[LinearConstraint(A, np.concatenate(lo), np.concatenate(hi))] if A is not None else [],
        integrality=model.var_binary.astype(int),
        bounds=Bounds(model.lower, model.upper),
        options=options,
    )
    x_idx = model.x_indices()
    prob = DesignProblem(np.zeros((0, len(x_idx))), np.zeros((0, 0), bool), 0, model.provenance.get("k", 0),
                         model.provenance.get("source_columns"))
    if res.x is None:
        status = INFEASIBLE if res.status == 2 else FEASIBLE_LIMIT
        return _finish(prob, [], None, None, status, start, 0)
    sign = -1.0 if model.objective_sense == "max" else 1.0
    obj = sign * float(res.fun)
    # snap solver round-off on integral objectives
    if abs(obj - round(obj)) < 1e-6:
        obj = float(round(obj))
    dual = getattr(res, "mip_dual_bound", None)
    bound = obj if res.status == 0 else (sign * float(dual) if dual is not None else None)
    obj = obj + 0.0
    selected = [int(i) for i, v in enumerate(res.x[x_idx]) if v > 0.5]
    status = OPTIMAL if res.status == 0 else FEASIBLE_LIMIT
    return _finish(prob, selected, obj, bound, status, start, int(getattr(res, "mip_node_count", 0) or 0))
