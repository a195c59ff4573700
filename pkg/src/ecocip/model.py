"""Integer programs for max-min codebook design, plus LP-format I/O.

Every model selects columns of a candidate codebook through binaries
``x_1..x_n``.  IP1 carries one AND variable ``y_i_j`` per column pair; IP2
replaces them with ``x_i + x_j <= 1`` rows for conflicting pairs; IP3 uses one
``sum x <= 1`` row per clique of an edge clique cover.  The max-min objective
is linearized with a continuous ``t`` bounded by every row-pair distance.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse

from .codebook import Codebook, column_distance_matrix
from .conflict import CliqueCover, PairClassification, build_graph, classify_pairs, validate_cover
from .errors import FormatError, PreconditionError, SizeLimitError

FAMILY_PREFIXES = {
    "budget": "budget",
    "sep_lo": "column-separation",
    "sep_hi": "column-separation",
    "and1": "and-linearization",
    "and2": "and-linearization",
    "and3": "and-linearization",
    "conf": "pairwise-conflict",
    "clique": "clique",
    "link": "objective-link",
    "dev_lo": "abs-deviation",
    "dev_hi": "abs-deviation",
}

IP1_MAX_K = 11


@dataclass
class ConstraintBlock:
    """Rows ``A v (sense) rhs`` sharing one family and sense."""

    family: str
    A: sparse.csr_matrix
    sense: str
    rhs: np.ndarray
    names: list[str]

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {self.sense!r}")
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.A.shape[0] != len(self.rhs) or len(self.names) != len(self.rhs):
            raise ValueError(f"block {self.family}: row count mismatch")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class IpModel:
    var_names: list[str]
    var_binary: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    blocks: list[ConstraintBlock]
    objective_sense: str
    objective: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.var_names)
        self.var_binary = np.asarray(self.var_binary, dtype=bool)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.objective = np.asarray(self.objective, dtype=float)
        if not (len(self.var_binary) == len(self.lower) == len(self.upper) == len(self.objective) == n):
            raise ValueError("variable arrays disagree in length")
        if len(set(self.var_names)) != n:
            raise ValueError("variable names must be unique")
        if np.any(self.lower[self.var_binary] != 0) or np.any(self.upper[self.var_binary] != 1):
            raise ValueError("binary variables must have bounds [0, 1]")
        for b in self.blocks:
            if b.A.shape[1] != n:
                raise ValueError(f"block {b.family} references undeclared variables")
        if self.objective_sense not in ("max", "min"):
            raise ValueError("objective sense must be 'max' or 'min'")

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_constraints(self) -> int:
        return sum(b.n_rows for b in self.blocks)

    def var_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.var_names)}

    def block(self, family: str) -> ConstraintBlock | None:
        found = [b for b in self.blocks if b.family == family]
        if not found:
            return None
        if len(found) == 1:
            return found[0]
        raise ValueError(f"family {family} is split over several blocks")

    def x_indices(self) -> np.ndarray:
        return np.array([i for i, n in enumerate(self.var_names) if n.startswith("x_")], dtype=np.int64)

    def is_feasible(self, values, tol: float = 1e-9) -> bool:
        v = np.asarray(values, dtype=float)
        if np.any(v < self.lower - tol) or np.any(v > self.upper + tol):
            return False
        if np.any(np.abs(v[self.var_binary] - np.round(v[self.var_binary])) > tol):
            return False
        for b in self.blocks:
            lhs = b.A @ v
            if b.sense == "<=" and np.any(lhs > b.rhs + tol):
                return False
            if b.sense == ">=" and np.any(lhs < b.rhs - tol):
                return False
            if b.sense == "=" and np.any(np.abs(lhs - b.rhs) > tol):
                return False
        return True


@dataclass
class ModelStats:
    n_binary_vars: int
    n_continuous_vars: int
    n_constraints: int
    n_nonzeros: int
    breakdown: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "n_binary_vars": self.n_binary_vars,
            "n_continuous_vars": self.n_continuous_vars,
            "n_constraints": self.n_constraints,
            "n_nonzeros": self.n_nonzeros,
            "breakdown": dict(self.breakdown),
        }


@dataclass
class TargetDistances:
    """Desired pairwise codeword distances (symmetric, zero diagonal)."""

    d_hat: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_hat, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("target distances must be a square matrix")
        if not np.allclose(d, d.T) or np.any(d < 0) or np.any(np.diag(d) != 0):
            raise ValueError("target distances must be symmetric, non-negative, zero on the diagonal")
        self.d_hat = d

    @classmethod
    def constant(cls, k: int, value: float) -> "TargetDistances":
        d = np.full((k, k), float(value))
        np.fill_diagonal(d, 0.0)
        return cls(d)


# ---------------------------------------------------------------------------
# helpers


def _rows(n_cols: int, row_cols: list[np.ndarray], row_vals: list[np.ndarray]) -> sparse.csr_matrix:
    """CSR matrix from per-row index/value arrays; explicit zeros are kept."""
    indptr = np.zeros(len(row_cols) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(c) for c in row_cols])
    indices = np.concatenate(row_cols) if row_cols else np.empty(0, np.int64)
    data = np.concatenate(row_vals) if row_vals else np.empty(0)
    return sparse.csr_matrix((data.astype(float), indices.astype(np.int64), indptr), shape=(len(row_cols), n_cols))


def _fixed_width_rows(n_cols: int, cols: np.ndarray, vals: np.ndarray) -> sparse.csr_matrix:
    """CSR matrix whose every row has the same number of listed entries."""
    n_rows, width = cols.shape
    indptr = np.arange(0, n_rows * width + 1, width, dtype=np.int64)
    return sparse.csr_matrix(
        (vals.astype(float).ravel(), cols.astype(np.int64).ravel(), indptr), shape=(n_rows, n_cols)
    )


def link_coefficients(M: Codebook) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Per row pair ``(s, t)``, the distance each column adds: ``(1 - M_s M_t) / 2``."""
    pairs = [(s, t) for s in range(M.k) for t in range(s + 1, M.k)]
    m = M.entries.astype(np.int64)
    if not pairs:
        return np.zeros((0, M.L)), pairs
    s_idx = np.array([p[0] for p in pairs])
    t_idx = np.array([p[1] for p in pairs])
    return (1 - m[s_idx] * m[t_idx]) / 2.0, pairs


def _budget_block(n_x: int, n_vars: int, L: int) -> ConstraintBlock:
    A = _fixed_width_rows(n_vars, np.arange(n_x)[None, :], np.ones((1, n_x)))
    return ConstraintBlock("budget", A, "<=", np.array([float(L)]), ["budget"])


def _link_block(M: Codebook, n_vars: int, t_index: int) -> ConstraintBlock:
    C, pairs = link_coefficients(M)
    row_cols, row_vals = [], []
    for p in range(len(pairs)):
        nz = np.flatnonzero(C[p])
        row_cols.append(np.concatenate([[t_index], nz]))
        row_vals.append(np.concatenate([[1.0], -C[p, nz]]))
    names = [f"link_{s + 1}_{t + 1}" for s, t in pairs]
    return ConstraintBlock("objective-link", _rows(n_vars, row_cols, row_vals), "<=", np.zeros(len(pairs)), names)


def _x_variables(n: int):
    return [f"x_{i + 1}" for i in range(n)]


def _provenance(M: Codebook, formulation: str, L: int, rho: int, upper, **extra) -> dict:
    prov = {"formulation": formulation, "k": M.k, "n_columns": M.L, "L": L, "rho": rho, "upper": upper}
    if "source_columns" in M.metadata:
        prov["source_columns"] = list(M.metadata["source_columns"])
    prov.update(extra)
    return prov


def _assemble(n_x, extra_names, extra_binary, blocks_fn, sense, obj_index, provenance):
    names = _x_variables(n_x) + extra_names
    n = len(names)
    binary = np.array([True] * n_x + extra_binary)
    lower = np.zeros(n)
    upper = np.where(binary, 1.0, np.inf)
    c = np.zeros(n)
    c[obj_index] = 1.0
    return IpModel(names, binary, lower, upper, blocks_fn(n), sense, c, provenance)


# ---------------------------------------------------------------------------
# builders


def build_ip1(M: Codebook, L: int, rho: int, upper: float | None = None) -> IpModel:
    """Full formulation with an AND variable per column pair.

    The separation band ``rho <= d_ij <= U`` on ``y_ij`` is linear because
    ``d_ij`` is a data constant: it becomes ``(rho - d_ij) y_ij <= 0`` and
    ``(d_ij - U) y_ij <= 0``, with ``U = k`` when the upper bound is inactive.
    """
    if M.k > IP1_MAX_K:
        raise SizeLimitError(f"IP1 is guarded to k <= {IP1_MAX_K}; k={M.k} needs {math.comb(M.L, 2)} pair variables")
    n = M.L
    iu, ju = np.triu_indices(n, 1)
    n_pairs = len(iu)
    D = column_distance_matrix(M)[iu, ju]
    U = float(M.k) if upper is None else float(upper)
    y0 = n
    t_index = n + n_pairs
    y_cols = (y0 + np.arange(n_pairs))[:, None]
    tags = [f"{i + 1}_{j + 1}" for i, j in zip(iu.tolist(), ju.tolist())]

    def blocks(n_vars):
        return [
            _budget_block(n, n_vars, L),
            ConstraintBlock("column-separation", _fixed_width_rows(n_vars, y_cols, (rho - D)[:, None]),
                            "<=", np.zeros(n_pairs), [f"sep_lo_{t}" for t in tags]),
            ConstraintBlock("column-separation", _fixed_width_rows(n_vars, y_cols, (D - U)[:, None]),
                            "<=", np.zeros(n_pairs), [f"sep_hi_{t}" for t in tags]),
            ConstraintBlock("and-linearization",
                            _fixed_width_rows(n_vars, np.column_stack([y_cols[:, 0], iu]), np.tile([1.0, -1.0], (n_pairs, 1))),
                            "<=", np.zeros(n_pairs), [f"and1_{t}" for t in tags]),
            ConstraintBlock("and-linearization",
                            _fixed_width_rows(n_vars, np.column_stack([y_cols[:, 0], ju]), np.tile([1.0, -1.0], (n_pairs, 1))),
                            "<=", np.zeros(n_pairs), [f"and2_{t}" for t in tags]),
            ConstraintBlock("and-linearization",
                            _fixed_width_rows(n_vars, np.column_stack([iu, ju, y_cols[:, 0]]), np.tile([1.0, 1.0, -1.0], (n_pairs, 1))),
                            "<=", np.ones(n_pairs), [f"and3_{t}" for t in tags]),
            _link_block(M, n_vars, t_index),
        ]

    extra = [f"y_{t}" for t in tags] + ["t"]
    return _assemble(n, extra, [True] * n_pairs + [False], blocks, "max", t_index,
                     _provenance(M, "IP1", L, rho, upper))


def build_ip2(M: Codebook, L: int, rho: int, upper: float | None = None,
              pairs: PairClassification | None = None) -> IpModel:
    pc = pairs if pairs is not None else classify_pairs(M, rho, upper)
    n = M.L
    inf = pc.infeasible
    t_index = n

    def blocks(n_vars):
        conf = ConstraintBlock("pairwise-conflict", _fixed_width_rows(n_vars, inf, np.ones(inf.shape)),
                               "<=", np.ones(len(inf)), [f"conf_{i + 1}_{j + 1}" for i, j in inf.tolist()])
        return [_budget_block(n, n_vars, L), conf, _link_block(M, n_vars, t_index)]

    return _assemble(n, ["t"], [False], blocks, "max", t_index, _provenance(M, "IP2", L, rho, upper))


def build_ip3(M: Codebook, L: int, rho: int, cover: CliqueCover, upper: float | None = None,
              pairs: PairClassification | None = None, check: bool = True) -> IpModel:
    """IP2 with the pairwise rows replaced by one row per cover clique."""
    if check:
        pc = pairs if pairs is not None else classify_pairs(M, rho, upper)
        problems = validate_cover(build_graph(pc), cover)
        if problems:
            raise PreconditionError(f"cover is not valid for this conflict graph: {problems[0].message}")
    n = M.L
    t_index = n
    cliques = cover.cliques

    def blocks(n_vars):
        row_cols = [np.asarray(c, dtype=np.int64) for c in cliques]
        row_vals = [np.ones(len(c)) for c in cliques]
        clique = ConstraintBlock("clique", _rows(n_vars, row_cols, row_vals), "<=", np.ones(len(cliques)),
                                 [f"clique_{t + 1}" for t in range(len(cliques))])
        return [_budget_block(n, n_vars, L), clique, _link_block(M, n_vars, t_index)]

    prov = _provenance(M, "IP3", L, rho, upper, cover_size=len(cliques), cover_source=cover.source)
    return _assemble(n, ["t"], [False], blocks, "max", t_index, prov)


def set_objective_distribution(model: IpModel, targets: TargetDistances) -> IpModel:
    """Swap the max-min objective for ``min sum |d_pq(x) - d_hat_pq|``.

    Each absolute value gets a slack ``e_p_q >= 0`` with
    ``e_p_q >= d_pq(x) - d_hat_pq`` and ``e_p_q >= d_hat_pq - d_pq(x)``.
    """
    link = model.block("objective-link")
    if link is None or "t" not in model.var_names:
        raise PreconditionError("model has no max-min objective to replace")
    k = model.provenance.get("k")
    if targets.d_hat.shape[0] != k:
        raise PreconditionError(f"targets are {targets.d_hat.shape[0]}x{targets.d_hat.shape[0]} but k={k}")
    t_index = model.var_names.index("t")
    keep = np.array([i for i in range(model.n_vars) if i != t_index])
    # link rows are t - sum c x <= 0, so the distance coefficients are -A[:, x]
    dist_rows = -link.A[:, keep]
    dist_rows.eliminate_zeros()
    pair_names = [n[len("link_"):] for n in link.names]
    pairs = [tuple(int(v) - 1 for v in tag.split("_")) for tag in pair_names]
    d_hat = np.array([targets.d_hat[p, q] for p, q in pairs])
    n_old = len(keep)
    n_e = len(pairs)
    n_vars = n_old + n_e
    E = sparse.csr_matrix((np.ones(n_e), (np.arange(n_e), n_old + np.arange(n_e))), shape=(n_e, n_vars))
    dist = sparse.hstack([dist_rows, sparse.csr_matrix((n_e, n_e))], format="csr")
    blocks = []
    for b in model.blocks:
        if b is link:
            continue
        blocks.append(ConstraintBlock(b.family, sparse.hstack([b.A[:, keep], sparse.csr_matrix((b.n_rows, n_e))], format="csr"),
                                      b.sense, b.rhs, b.names))
    blocks.append(ConstraintBlock("abs-deviation", (E - dist).tocsr(), ">=", -d_hat, [f"dev_lo_{t}" for t in pair_names]))
    blocks.append(ConstraintBlock("abs-deviation", (E + dist).tocsr(), ">=", d_hat, [f"dev_hi_{t}" for t in pair_names]))
    names = [model.var_names[i] for i in keep] + [f"e_{t}" for t in pair_names]
    binary = np.concatenate([model.var_binary[keep], np.zeros(n_e, bool)])
    lower = np.concatenate([model.lower[keep], np.zeros(n_e)])
    upper = np.concatenate([model.upper[keep], np.full(n_e, np.inf)])
    c = np.concatenate([np.zeros(n_old), np.ones(n_e)])
    prov = {**model.provenance, "objective": "distribution", "targets": targets.d_hat.tolist()}
    return IpModel(names, binary, lower, upper, blocks, "min", c, prov)


def model_stats(model: IpModel) -> ModelStats:
    breakdown: dict[str, int] = {}
    for b in model.blocks:
        breakdown[b.family] = breakdown.get(b.family, 0) + b.n_rows
    n_bin = int(model.var_binary.sum())
    return ModelStats(
        n_binary_vars=n_bin,
        n_continuous_vars=model.n_vars - n_bin,
        n_constraints=model.n_constraints,
        n_nonzeros=int(sum(b.A.nnz for b in model.blocks)),
        breakdown=breakdown,
    )


# ---------------------------------------------------------------------------
# LP format


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _expr(names: list[str], cols: np.ndarray, vals: np.ndarray, per_line: int = 8) -> list[str]:
    terms = []
    for c, v in zip(cols.tolist(), vals.tolist()):
        sign = "-" if v < 0 or (v == 0 and math.copysign(1, v) < 0) else "+"
        mag = abs(v)
        coef = "" if mag == 1 else f"{_fmt(mag)} "
        terms.append(f"{sign} {coef}{names[c]}")
    if terms and terms[0].startswith("+ "):
        terms[0] = terms[0][2:]
    lines = [" ".join(terms[i:i + per_line]) for i in range(0, len(terms), per_line)]
    return lines or ["0 " + names[0]]


def to_lp(model: IpModel) -> str:
    """Render the model in CPLEX LP text format."""
    names = model.var_names
    out = [f"\\ ecocip model: {json.dumps(model.provenance, sort_keys=True, default=str)}"]
    out.append("Maximize" if model.objective_sense == "max" else "Minimize")
    nz = np.flatnonzero(model.objective)
    obj = _expr(names, nz, model.objective[nz]) if nz.size else [f"0 {names[0]}"]
    out.append(f" obj: {obj[0]}")
    out.extend(f"   {line}" for line in obj[1:])
    out.append("Subject To")
    for b in model.blocks:
        A = b.A
        for r in range(b.n_rows):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            lines = _expr(names, A.indices[lo:hi], A.data[lo:hi])
            lines[-1] = f"{lines[-1]} {b.sense} {_fmt(b.rhs[r])}"
            out.append(f" {b.names[r]}: {lines[0]}")
            out.extend(f"   {line}" for line in lines[1:])
    out.append("Bounds")
    for i, name in enumerate(names):
        lo, hi = model.lower[i], model.upper[i]
        hi_s = "+inf" if np.isinf(hi) else _fmt(hi)
        lo_s = "-inf" if np.isinf(lo) else _fmt(lo)
        out.append(f" {lo_s} <= {name} <= {hi_s}")
    binaries = [n for n, b in zip(names, model.var_binary) if b]
    if binaries:
        out.append("Binaries")
        for i in range(0, len(binaries), 10):
            out.append(" " + " ".join(binaries[i:i + 10]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: IpModel, destination) -> str:
    text = to_lp(model)
    try:
        Path(destination).write_text(text)
    except OSError as exc:
        raise OSError(f"could not write LP file {destination}: {exc}") from exc
    return text


_SECTION = {
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st", "st.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.\[\]]*)")
_NUMBER = r"[+-]?(?:inf(?:inity)?|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)"


def _parse_number(s: str) -> float:
    s = s.strip().lower()
    if s.lstrip("+-") in ("inf", "infinity"):
        return -np.inf if s.startswith("-") else np.inf
    return float(s)


def _parse_terms(text: str, lineno: int) -> list[tuple[str, float]]:
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise FormatError(f"line {lineno}: cannot parse expression near {text[pos:pos + 20]!r}")
        sign, coef, name = m.groups()
        v = float(coef) if coef else 1.0
        terms.append((name, -v if sign == "-" else v))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def from_lp(text: str) -> IpModel:
    """Parse the CPLEX LP subset written by :func:`to_lp`."""
    provenance: dict[str, Any] = {}
    section = None
    sense = None
    statements: dict[str, list[tuple[int, str]]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("\\"):
            if line.startswith("\\ ecocip model:"):
                provenance = json.loads(line.split(":", 1)[1])
            continue
        if not line:
            continue
        key = line.lower()
        if key in _SECTION:
            section = _SECTION[key]
            if section == "obj":
                sense = "max" if key.startswith("max") else "min"
            if section == "end":
                break
            continue
        if section is None:
            raise FormatError(f"line {lineno}: content before any section header")
        if section in ("obj", "st") and raw.startswith("   ") and statements[section]:
            ln, prev = statements[section][-1]
            statements[section][-1] = (ln, prev + " " + line)
        else:
            statements[section].append((lineno, line))
    if sense is None:
        raise FormatError("LP file has no objective section")

    order: dict[str, int] = {}

    def note(name):
        order.setdefault(name, len(order))

    obj_terms = []
    for lineno, stmt in statements["obj"]:
        body = stmt.split(":", 1)[1] if ":" in stmt else stmt
        obj_terms.extend(_parse_terms(body, lineno))
    rows = []
    for lineno, stmt in statements["st"]:
        if ":" not in stmt:
            raise FormatError(f"line {lineno}: constraints must be labelled")
        label, body = stmt.split(":", 1)
        m = re.match(rf"^(.*?)(<=|>=|=<|=>|<|>|=)\s*({_NUMBER})\s*$", body.strip())
        if not m:
            raise FormatError(f"line {lineno}: malformed constraint {label.strip()!r}")
        lhs, op, rhs = m.groups()
        op = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(op, op)
        rows.append((label.strip(), _parse_terms(lhs, lineno), op, _parse_number(rhs)))
    bounds = {}
    for lineno, stmt in statements["bounds"]:
        m = re.match(rf"^({_NUMBER})\s*<=\s*([A-Za-z_][\w.\[\]]*)\s*<=\s*({_NUMBER})$", stmt)
        if not m:
            raise FormatError(f"line {lineno}: unsupported bound {stmt!r}")
        lo, name, hi = m.groups()
        bounds[name] = (_parse_number(lo), _parse_number(hi))
        note(name)
    binaries = set()
    for _, stmt in statements["bin"]:
        for name in stmt.split():
            binaries.add(name)
            note(name)
    for name, _ in obj_terms:
        note(name)
    for _, terms, _, _ in rows:
        for name, _ in terms:
            note(name)

    names = sorted(order, key=order.get)
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for name, v in obj_terms:
        c[index[name]] += v
    lower = np.array([bounds.get(nm, (0.0, np.inf))[0] for nm in names])
    upper = np.array([1.0 if nm in binaries else bounds.get(nm, (0.0, np.inf))[1] for nm in names])
    binary = np.array([nm in binaries for nm in names])

    blocks: list[ConstraintBlock] = []
    current = None
    for label, terms, op, rhs in rows:
        prefix = re.sub(r"(_\d+)+$", "", label)
        family = FAMILY_PREFIXES.get(prefix, "other")
        if current is None or current[0] != family or current[1] != op:
            current = [family, op, [], [], [], []]
            blocks.append(current)
        current[2].append(np.array([index[nm] for nm, _ in terms], dtype=np.int64))
        current[3].append(np.array([v for _, v in terms]))
        current[4].append(rhs)
        current[5].append(label)
    built = [ConstraintBlock(f, _rows(n, cols, vals), op, np.array(rhs), labels)
             for f, op, cols, vals, rhs, labels in blocks]
    return IpModel(names, binary, lower, upper, built, sense, c, provenance)


def read_lp(path) -> IpModel:
    return from_lp(Path(path).read_text())
