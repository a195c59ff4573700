"""Coding matrices: construction, distances, validity checks and file I/O.

A codebook is a ``k x L`` integer matrix over ``{-1, 0, +1}``.  Rows are class
codewords, columns are the binary learning problems.  Indices in the Python
API are 0-based; file formats that name nodes or variables use 1-based names.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import EmptyCodebookError, FormatError, GenerationError, PreconditionError, SizeLimitError

BINARY = "binary"
TERNARY = "ternary"

MAX_EXHAUSTIVE_K = 20


@dataclass
class Codebook:
    """A ``k x L`` coding matrix.

    Parameters
    ----------
    entries : array_like
        Integer matrix with values in ``{-1, 0, +1}``; rows are classes.
    alphabet : {"binary", "ternary"}, optional
        Inferred from the entries when omitted.
    metadata : dict, optional
        Free-form provenance (generator name, seed, rho, objective, ...).
    """

    entries: np.ndarray
    alphabet: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"codebook entries must be a non-empty 2-d matrix, got shape {m.shape}")
        if not np.all(np.isin(m, (-1, 0, 1))):
            raise ValueError("codebook entries must lie in {-1, 0, +1}")
        self.entries = m.astype(np.int8)
        if self.alphabet is None:
            self.alphabet = TERNARY if np.any(self.entries == 0) else BINARY
        if self.alphabet not in (BINARY, TERNARY):
            raise ValueError(f"unknown alphabet {self.alphabet!r}")

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def L(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def select(self, columns, **metadata) -> "Codebook":
        """Sub-codebook made of the given columns, tracking source indices."""
        columns = [int(c) for c in columns]
        if not columns:
            raise EmptyCodebookError("selection is empty")
        source = self.metadata.get("source_columns")
        src = [source[c] for c in columns] if source is not None else columns
        meta = {**metadata, "source_columns": src}
        return Codebook(self.entries[:, columns], self.alphabet, meta)

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.entries.shape == other.entries.shape
            and bool(np.array_equal(self.entries, other.entries))
            and self.metadata == other.metadata
        )


@dataclass
class DistanceSummary:
    min_row_distance: float
    row_distance_matrix: np.ndarray
    column_distance_matrix: np.ndarray


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    message: str


# ---------------------------------------------------------------------------
# generators


def generate_exhaustive(k: int) -> Codebook:
    """All ``2**(k-1) - 1`` non-trivial binary dichotomies of ``k`` classes.

    Row 0 is all ``+1``.  Columns enumerate rows ``1..k-1`` as a binary
    counter (``-1 -> 0``, ``+1 -> 1``, last row least significant) from 0 up
    to ``2**(k-1) - 2``; the all-``+1`` column is excluded.
    """
    if not 2 <= k <= MAX_EXHAUSTIVE_K:
        n = (2 ** (k - 1) - 1) if k >= 1 else 0
        raise SizeLimitError(
            f"exhaustive code needs 2 <= k <= {MAX_EXHAUSTIVE_K}; k={k} would have {n} columns"
        )
    n = 2 ** (k - 1) - 1
    codes = np.arange(n, dtype=np.int64)
    shifts = np.arange(k - 2, -1, -1, dtype=np.int64)
    bits = (codes[None, :] >> shifts[:, None]) & 1
    entries = np.vstack([np.ones((1, n), dtype=np.int8), (2 * bits - 1).astype(np.int8)])
    return Codebook(entries, BINARY, {"generator": "exhaustive", "k": k})


def one_vs_all(k: int) -> Codebook:
    if k < 2:
        raise PreconditionError("one_vs_all needs k >= 2")
    if k == 2:
        return Codebook(np.array([[1], [-1]]), BINARY, {"generator": "one-vs-all"})
    entries = -np.ones((k, k), dtype=np.int8)
    np.fill_diagonal(entries, 1)
    return Codebook(entries, BINARY, {"generator": "one-vs-all"})


def one_vs_one(k: int) -> Codebook:
    if k < 2:
        raise PreconditionError("one_vs_one needs k >= 2")
    pairs = [(p, q) for p in range(k) for q in range(p + 1, k)]
    entries = np.zeros((k, len(pairs)), dtype=np.int8)
    for j, (p, q) in enumerate(pairs):
        entries[p, j] = 1
        entries[q, j] = -1
    return Codebook(entries, TERNARY, {"generator": "one-vs-one"})


def _draw(rng: np.random.Generator, k: int, L: int, alphabet: str) -> np.ndarray:
    if alphabet in (BINARY, "dense"):
        return (2 * rng.integers(0, 2, size=(k, L)) - 1).astype(np.int8)
    # sparse: 0 w.p. 1/2, +1 and -1 w.p. 1/4 each
    lut = np.array([0, 0, 1, -1], dtype=np.int8)
    return lut[rng.integers(0, 4, size=(k, L))]


def _random_draw_is_valid(m: np.ndarray, alphabet: str) -> bool:
    cb = Codebook(m, BINARY if alphabet in (BINARY, "dense") else TERNARY)
    if validate(cb):
        return False
    # a class with an all-zero row can never be told apart by the learners
    return not np.any(np.all(m == 0, axis=1))


def random_population(k: int, L: int, alphabet: str, trials: int, seed) -> list[tuple[int, np.ndarray]]:
    """The (trial index, matrix) pairs that pass validation, in draw order."""
    rng = np.random.default_rng(seed)
    valid = []
    for t in range(trials):
        m = _draw(rng, k, L, alphabet)
        if _random_draw_is_valid(m, alphabet):
            valid.append((t, m))
    return valid


def generate_random(k: int, L: int, alphabet: str = "dense", trials: int = 10000, seed=0) -> Codebook:
    """Best of ``trials`` random codebooks by minimum row distance.

    ``alphabet`` is ``"dense"`` (uniform ``+-1``) or ``"sparse"`` (0 with
    probability 1/2, each sign with probability 1/4).  Invalid draws are
    discarded; ties go to the earliest draw.
    """
    if alphabet not in ("dense", "sparse", BINARY, TERNARY):
        raise ValueError(f"unknown alphabet {alphabet!r}")
    alphabet = {"binary": "dense", "ternary": "sparse"}.get(alphabet, alphabet)
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if k < 2 or L < math.ceil(math.log2(k)):
        raise PreconditionError(f"need k >= 2 and L >= ceil(log2 k); got k={k}, L={L}")
    population = random_population(k, L, alphabet, trials, seed)
    if not population:
        raise GenerationError(f"all {trials} random draws were invalid")
    best_t, best_m, best_d = None, None, -1.0
    for t, m in population:
        d = _min_row_distance(m)
        if d > best_d:
            best_t, best_m, best_d = t, m, d
    meta = {
        "generator": alphabet,
        "seed": seed,
        "trials": trials,
        "n_valid": len(population),
        "selected_trial": best_t,
        "min_row_distance": best_d,
    }
    return Codebook(best_m, BINARY if alphabet == "dense" else TERNARY, meta)


def filter_balanced(M: Codebook, tau: int = 1) -> Codebook:
    """Keep columns whose ``+1`` and ``-1`` counts differ by at most ``tau``."""
    if tau < 0:
        raise PreconditionError("tau must be >= 0")
    pos = np.sum(M.entries == 1, axis=0)
    neg = np.sum(M.entries == -1, axis=0)
    keep = np.flatnonzero(np.abs(pos - neg) <= tau)
    if keep.size == 0:
        raise EmptyCodebookError(f"no column of the {M.k}x{M.L} codebook is balanced within tau={tau}")
    meta = dict(M.metadata)
    source = meta.get("source_columns")
    meta["source_columns"] = [source[c] for c in keep] if source is not None else keep.tolist()
    meta["tau"] = tau
    return Codebook(M.entries[:, keep], M.alphabet, meta)


# ---------------------------------------------------------------------------
# distances


def _pair_distance(a: np.ndarray, b: np.ndarray) -> float:
    d2 = int(a.size - np.dot(a.astype(np.int64), b.astype(np.int64)))
    return d2 // 2 if d2 % 2 == 0 else d2 / 2


def row_distance(M: Codebook, r: int, s: int) -> float:
    """Generalized Hamming distance ``sum_j (1 - M[r,j] M[s,j]) / 2``.

    Zero entries contribute 1/2 each, so ternary distances may be half-integers.
    """
    for i in (r, s):
        if not 0 <= i < M.k:
            raise IndexError(f"row index {i} out of range for k={M.k}")
    return _pair_distance(M.entries[r], M.entries[s])


def column_distance(M: Codebook, i: int, j: int) -> float:
    for c in (i, j):
        if not 0 <= c < M.L:
            raise IndexError(f"column index {c} out of range for L={M.L}")
    return _pair_distance(M.entries[:, i], M.entries[:, j])


def row_distance_matrix(M: Codebook | np.ndarray) -> np.ndarray:
    m = (M.entries if isinstance(M, Codebook) else np.asarray(M)).astype(np.int64)
    D = (m.shape[1] - m @ m.T) / 2.0
    # self-distance is 0 by convention even where a zero meets itself
    np.fill_diagonal(D, 0.0)
    return D


def column_distance_matrix(M: Codebook | np.ndarray) -> np.ndarray:
    m = M.entries if isinstance(M, Codebook) else np.asarray(M)
    return row_distance_matrix(m.T)


def _min_row_distance(m: np.ndarray) -> float:
    if m.shape[0] < 2:
        return 0.0
    d = row_distance_matrix(m)
    iu = np.triu_indices(m.shape[0], 1)
    return float(d[iu].min())


def min_row_distance(M: Codebook) -> float:
    return _min_row_distance(M.entries)


def distance_summary(M: Codebook) -> DistanceSummary:
    return DistanceSummary(min_row_distance(M), row_distance_matrix(M), column_distance_matrix(M))


# ---------------------------------------------------------------------------
# validity


def _duplicate_groups(vectors: np.ndarray):
    """Pairs (first, later) of identical rows of ``vectors``."""
    seen: dict[bytes, int] = {}
    pairs = []
    for i, v in enumerate(vectors):
        key = v.tobytes()
        if key in seen:
            pairs.append((seen[key], i))
        else:
            seen[key] = i
    return pairs


def validate(M: Codebook) -> list[Violation]:
    """Return one record per broken codebook invariant (empty when valid)."""
    out: list[Violation] = []
    m = M.entries
    if M.alphabet == BINARY:
        zr, zc = np.nonzero(m == 0)
        for r, c in zip(zr.tolist(), zc.tolist()):
            out.append(Violation("zero-in-binary", (r, c), f"binary codebook has 0 at ({r}, {c})"))
    for r, s in _duplicate_groups(m):
        out.append(Violation("duplicate-rows", (r, s), f"rows {r} and {s} are identical"))
    has_pos = np.any(m == 1, axis=0)
    has_neg = np.any(m == -1, axis=0)
    for c in np.flatnonzero(~(has_pos & has_neg)).tolist():
        out.append(Violation("single-sign-column", (c,), f"column {c} lacks a +1 or a -1 entry"))
    cols = np.ascontiguousarray(m.T)
    for i, j in _duplicate_groups(cols):
        out.append(Violation("duplicate-columns", (i, j), f"columns {i} and {j} are identical"))
    if M.alphabet == BINARY:
        index = {c.tobytes(): i for i, c in reversed(list(enumerate(cols)))}
        for i, c in enumerate(cols):
            j = index.get((-c).tobytes())
            if j is not None and i < j:
                out.append(Violation("complementary-columns", (i, j), f"column {j} is the negation of column {i}"))
    return out


# ---------------------------------------------------------------------------
# I/O


def to_csv(M: Codebook) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in M.entries.tolist():
        writer.writerow(row)
    return buf.getvalue()


def from_csv(text: str) -> Codebook:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([int(v) for v in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: codebook CSV must hold integers in {{-1,0,1}}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError("codebook CSV must be a non-empty rectangular matrix")
    try:
        return Codebook(np.array(rows))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def to_json(M: Codebook) -> str:
    doc = {
        "k": M.k,
        "L": M.L,
        "alphabet": M.alphabet,
        "entries": M.entries.tolist(),
        "metadata": M.metadata,
    }
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n"


def from_json(text: str) -> Codebook:
    try:
        doc = json.loads(text)
        cb = Codebook(np.array(doc["entries"]), doc.get("alphabet"), doc.get("metadata") or {})
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid codebook JSON: {exc}") from exc
    if (doc.get("k", cb.k), doc.get("L", cb.L)) != (cb.k, cb.L):
        raise FormatError("codebook JSON k/L do not match the entries")
    return cb


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def save(M: Codebook, path) -> None:
    path = Path(path)
    text = to_json(M) if path.suffix.lower() == ".json" else to_csv(M)
    path.write_text(text)


def load(path) -> Codebook:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return from_json(text)
    return from_csv(text)
