"""ECOC classification pipeline.

Each codebook column defines a binary problem: classes with entry +1 against
classes with entry -1, zero entries dropped.  A scorer per column returns
``r_l(x)``, the probability of the +1 side.  Predictions come from Hamming
decoding of the sign vector or from the class scores

    p_i(x) = sum_{M(i,l)=+1} r_l(x) + sum_{M(i,l)=-1} (1 - r_l(x)),

which are differentiable in ``x`` for the logistic learner kinds.

Class labels are 0-based throughout; the CSV reader maps the distinct labels
found in the file, in sorted order, onto ``0..k-1``.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .codebook import Codebook
from .codebook import from_json as codebook_from_json
from .codebook import to_json as codebook_to_json
from .errors import CapabilityError, DegenerateColumnError, FormatError, PreconditionError

KINDS = ("logistic", "rbf-features-logistic", "nearest-centroid")
MODES = ("hamming", "scores-raw", "scores-normalized")

# hard scorer outputs stay strictly inside (0, 1)
_HARD_EPS = 1e-6


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    k: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    label_values: list | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels)
        if X.ndim != 2 or X.shape[0] < 1:
            raise PreconditionError("features must be a non-empty n x d matrix")
        if y.shape != (X.shape[0],):
            raise PreconditionError("labels must have one entry per example")
        if not np.all(y == np.round(y)):
            raise PreconditionError("labels must be integers")
        y = y.astype(np.int64)
        if y.min() < 0 or y.max() >= self.k:
            raise PreconditionError(f"labels must lie in [0, {self.k})")
        self.features, self.labels = X, y
        self.lower = X.min(axis=0) if self.lower is None else np.asarray(self.lower, dtype=np.float64)
        self.upper = X.max(axis=0) if self.upper is None else np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != (X.shape[1],) or self.upper.shape != (X.shape[1],):
            raise PreconditionError("bounds must have one entry per feature")
        if np.any(self.lower > self.upper):
            raise PreconditionError("feature bounds need lower <= upper")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.k, self.lower, self.upper, self.label_values)


@dataclass
class BinaryLearnerSpec:
    """Hyperparameters of the per-column learner.

    ``width`` is the RBF kernel width in standardized feature units; the
    random features use frequencies drawn from N(0, 1/width^2).
    """

    kind: str = "rbf-features-logistic"
    learning_rate: float = 0.5
    epochs: int = 400
    regularization: float = 1e-3
    n_features: int = 100
    width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        for name in ("learning_rate", "epochs", "n_features", "width"):
            if getattr(self, name) <= 0:
                raise PreconditionError(f"{name} must be positive")
        if self.regularization < 0:
            raise PreconditionError("regularization must be >= 0")


def _sigmoid(s):
    return 0.5 * (1.0 + np.tanh(0.5 * s))


@dataclass
class BinaryScorer:
    """A trained column scorer; ``params`` holds plain arrays for JSON round trips."""

    kind: str
    params: dict

    @property
    def differentiable(self) -> bool:
        return self.kind != "nearest-centroid"

    def _standardize(self, X):
        return (X - self.params["mu"]) / self.params["sd"]

    def _features(self, Z):
        if self.kind == "logistic":
            return Z
        return math.sqrt(2.0) * np.cos(Z @ self.params["W"] + self.params["phase"])

    def decision(self, X) -> np.ndarray:
        Z = self._standardize(np.atleast_2d(X))
        if self.kind == "nearest-centroid":
            dp = ((Z - self.params["c_pos"]) ** 2).sum(axis=1)
            dn = ((Z - self.params["c_neg"]) ** 2).sum(axis=1)
            return dn - dp
        return self._features(Z) @ self.params["w"] + self.params["b"]

    def prob(self, X) -> np.ndarray:
        """``r(x)`` for each row of ``X``."""
        s = self.decision(X)
        if self.kind == "nearest-centroid":
            return np.where(s > 0, 1.0 - _HARD_EPS, _HARD_EPS)
        return _sigmoid(s)

    def grad(self, X) -> np.ndarray:
        """``d r / d x`` for each row of ``X`` (n x d)."""
        if not self.differentiable:
            raise CapabilityError(f"{self.kind} scorers have no input gradient")
        X = np.atleast_2d(X)
        Z = self._standardize(X)
        w = self.params["w"]
        if self.kind == "logistic":
            ds = np.broadcast_to(w, Z.shape)
            s = Z @ w + self.params["b"]
        else:
            arg = Z @ self.params["W"] + self.params["phase"]
            s = math.sqrt(2.0) * np.cos(arg) @ w + self.params["b"]
            ds = (-math.sqrt(2.0) * np.sin(arg) * w) @ self.params["W"].T
        r = _sigmoid(s)
        return (r * (1.0 - r))[:, None] * ds / self.params["sd"]


def fit_scorer(X: np.ndarray, y: np.ndarray, spec: BinaryLearnerSpec, rng: np.random.Generator) -> BinaryScorer:
    """Fit one scorer on ``(X, y)`` with ``y`` in {-1, +1}."""
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    Z = (X - mu) / sd
    params = {"mu": mu, "sd": sd}
    if spec.kind == "nearest-centroid":
        params["c_pos"] = Z[y > 0].mean(axis=0)
        params["c_neg"] = Z[y < 0].mean(axis=0)
        return BinaryScorer(spec.kind, params)
    if spec.kind == "rbf-features-logistic":
        params["W"] = rng.normal(0.0, 1.0 / spec.width, size=(X.shape[1], spec.n_features))
        params["phase"] = rng.uniform(0.0, 2 * np.pi, size=spec.n_features)
    scorer = BinaryScorer(spec.kind, params)
    F = scorer._features(Z)
    t = (y > 0).astype(np.float64)
    w = np.zeros(F.shape[1])
    b = 0.0
    n = len(t)
    # full-batch gradient descent on the L2-regularized log loss
    for _ in range(spec.epochs):
        err = _sigmoid(F @ w + b) - t
        w -= spec.learning_rate * (F.T @ err / n + spec.regularization * w)
        b -= spec.learning_rate * err.mean()
    params["w"], params["b"] = w, float(b)
    return scorer


@dataclass
class TrainedEcoc:
    codebook: Codebook
    scorers: list[BinaryScorer]
    spec: BinaryLearnerSpec = field(default_factory=BinaryLearnerSpec)

    def __post_init__(self):
        if len(self.scorers) != self.codebook.L:
            raise PreconditionError("need one scorer per codebook column")

    @property
    def k(self) -> int:
        return self.codebook.k

    @property
    def differentiable(self) -> bool:
        return all(s.differentiable for s in self.scorers)

    @property
    def d(self) -> int:
        return len(self.scorers[0].params["mu"])

    def probs(self, X) -> np.ndarray:
        """Column probabilities ``r`` (n x L)."""
        X = self._check(X)
        return np.column_stack([s.prob(X) for s in self.scorers])

    def prob_grads(self, X) -> np.ndarray:
        """``d r_l / d x`` (n x L x d)."""
        X = self._check(X)
        return np.stack([s.grad(X) for s in self.scorers], axis=1)

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.d:
            raise PreconditionError(f"expected {self.d} features, got {X.shape[1]}")
        return X


def partition_labels(ds: Dataset, M: Codebook, col: int) -> tuple[np.ndarray, np.ndarray]:
    """Examples of +1 classes labelled +1, of -1 classes labelled -1, zeros dropped."""
    if not 0 <= col < M.L:
        raise IndexError(f"column {col} out of range for L={M.L}")
    if ds.k != M.k:
        raise PreconditionError(f"dataset has {ds.k} classes, codebook {M.k}")
    signs = M.entries[ds.labels, col].astype(np.int64)
    keep = signs != 0
    y = signs[keep]
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateColumnError(col)
    return ds.features[keep], y


def _column_rng(seed: int, col: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(col)]))


def train(ds: Dataset, M: Codebook, spec: BinaryLearnerSpec | None = None, seed=None, workers: int = 1) -> TrainedEcoc:
    """Fit one scorer per column.  Column ``l`` draws from its own seeded
    stream, so threaded training matches sequential training exactly."""
    spec = spec or BinaryLearnerSpec()
    seed = spec.seed if seed is None else seed
    parts = [partition_labels(ds, M, c) for c in range(M.L)]

    def fit(c):
        X, y = parts[c]
        return fit_scorer(X, y, spec, _column_rng(seed, c))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            scorers = list(pool.map(fit, range(M.L)))
    else:
        scorers = [fit(c) for c in range(M.L)]
    return TrainedEcoc(M, scorers, spec)


def encode(te: TrainedEcoc, X) -> np.ndarray:
    """Sign vectors: +1 where ``r > 1/2``, otherwise -1."""
    return np.where(te.probs(X) > 0.5, 1, -1).astype(np.int8)


def hamming_distances(M: Codebook, F) -> np.ndarray:
    """Generalized Hamming distance of each sign vector to each codeword (zeros count 1/2)."""
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    if F.shape[1] != M.L:
        raise PreconditionError(f"sign vector length {F.shape[1]} != L={M.L}")
    return (M.L - F @ M.entries.T.astype(np.float64)) / 2.0


def decode_hamming(M: Codebook, F):
    """Nearest codeword; ties go to the lowest class index.

    Returns an int for a single vector and an array for a batch.
    """
    single = np.ndim(F) == 1
    out = np.argmin(hamming_distances(M, F), axis=1)
    return int(out[0]) if single else out


def _signed_masks(M: Codebook):
    E = M.entries
    return (E > 0).astype(np.float64), (E < 0).astype(np.float64)


def scores_from_probs(M: Codebook, R, normalized: bool = False) -> np.ndarray:
    """Class scores (n x k) from column probabilities (n x L)."""
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    pos, neg = _signed_masks(M)
    P = R @ pos.T + (1.0 - R) @ neg.T
    if normalized:
        P = P / np.maximum((M.entries != 0).sum(axis=1), 1)
    return P


def class_scores(te: TrainedEcoc, X, normalized: bool = False, grad: bool = False):
    """Class scores for each row of ``X``; with ``grad`` also the Jacobian (n x k x d)."""
    P = scores_from_probs(te.codebook, te.probs(X), normalized)
    if not grad:
        return P
    if not te.differentiable:
        raise CapabilityError(f"{te.spec.kind} learners are not differentiable")
    G = te.prob_grads(X)
    S = te.codebook.entries.astype(np.float64)
    if normalized:
        S = S / np.maximum((S != 0).sum(axis=1), 1)[:, None]
    return P, np.einsum("kl,nld->nkd", S, G)


def predict(te: TrainedEcoc, X, mode: str = "hamming") -> np.ndarray:
    if mode == "hamming":
        return np.atleast_1d(decode_hamming(te.codebook, encode(te, X)))
    if mode == "scores-raw":
        return np.argmax(class_scores(te, X), axis=1)
    if mode == "scores-normalized":
        return np.argmax(class_scores(te, X, normalized=True), axis=1)
    raise PreconditionError(f"unknown mode {mode!r}; expected one of {MODES}")


def accuracy(te: TrainedEcoc, ds: Dataset, mode: str = "hamming") -> float:
    return float(np.mean(predict(te, ds.features, mode) == ds.labels))


@dataclass
class ErrorCorrelationMatrix:
    """Both-wrong / (both-wrong + both-right) per hypothesis pair; NaN where undefined."""

    values: np.ndarray
    n_test: int

    def mean(self, off_diagonal: bool = True) -> float:
        V = self.values
        if off_diagonal:
            V = V[~np.eye(len(V), dtype=bool)]
        return float(np.nanmean(V)) if np.any(~np.isnan(V)) else float("nan")


def error_correlation_from_signs(M: Codebook, F: np.ndarray, labels: np.ndarray) -> ErrorCorrelationMatrix:
    target = M.entries[labels].astype(np.int64)
    valid = target != 0
    err = (valid & (F != target)).astype(np.float64)
    ok = (valid & (F == target)).astype(np.float64)
    both_err = err.T @ err
    both_ok = ok.T @ ok
    den = both_err + both_ok
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(den > 0, both_err / den, np.nan)
    return ErrorCorrelationMatrix(vals, len(labels))


def error_correlation(te: TrainedEcoc, ds: Dataset, features=None) -> ErrorCorrelationMatrix:
    """Error correlation of the hypotheses on ``ds`` (or on ``features`` with
    the labels of ``ds``, e.g. adversarial copies)."""
    X = ds.features if features is None else features
    return error_correlation_from_signs(te.codebook, encode(te, X), ds.labels)


def confusion_matrix(te: TrainedEcoc, ds: Dataset, mode: str = "hamming") -> np.ndarray:
    C = np.zeros((ds.k, ds.k), dtype=np.int64)
    np.add.at(C, (ds.labels, predict(te, ds.features, mode)), 1)
    return C


def evaluate(te: TrainedEcoc, ds: Dataset) -> dict:
    """Evaluation report: accuracy per mode, confusion matrix, correlation matrix."""
    corr = error_correlation(te, ds)
    return {
        "n_test": ds.n,
        "accuracy": {m: accuracy(te, ds, m) for m in MODES},
        "confusion_matrix": confusion_matrix(te, ds).tolist(),
        "error_correlation": [[None if np.isnan(v) else float(v) for v in row] for row in corr.values],
        "error_correlation_mean": corr.mean(),
    }


# ---------------------------------------------------------------------------
# data


def make_gaussian_toy(k: int, n_per_class: int, seed=0, radius: float = 4.0, sigma: float = 1.0) -> Dataset:
    """Class ``c`` (0-based) is N(radius (cos a, sin a), sigma^2 I) with a = 2 pi (c+1) / k."""
    if k < 2 or n_per_class < 1:
        raise PreconditionError("need k >= 2 and n_per_class >= 1")
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(1, k + 1) / k
    means = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    labels = np.repeat(np.arange(k), n_per_class)
    X = means[labels] + sigma * rng.standard_normal((len(labels), 2))
    return Dataset(X, labels, k)


def train_test_split(ds: Dataset, test_fraction: float = 0.25, seed=0) -> tuple[Dataset, Dataset]:
    """Stratified random split; both parts keep the parent's feature bounds."""
    if not 0 < test_fraction < 1:
        raise PreconditionError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test = []
    for c in range(ds.k):
        idx = np.flatnonzero(ds.labels == c)
        rng.shuffle(idx)
        test.extend(idx[: int(round(test_fraction * len(idx)))].tolist())
    mask = np.zeros(ds.n, dtype=bool)
    mask[test] = True
    return ds.subset(np.flatnonzero(~mask)), ds.subset(np.flatnonzero(mask))


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join([f"x{j + 1}" for j in range(ds.d)] + ["label"]) + "\n")
    names = ds.label_values
    for x, y in zip(ds.features, ds.labels):
        lab = names[y] if names is not None else int(y)
        buf.write(",".join(repr(float(v)) for v in x) + f",{lab}\n")
    return buf.getvalue()


CSV_SCHEMA = "expected a header line, numeric feature columns and an integer label in the last column"


def dataset_from_csv(text: str, k: int | None = None) -> Dataset:
    """Header line, numeric feature columns, integer label in the last column."""
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"empty dataset file; {CSV_SCHEMA}")
    width = len(lines[0].split(","))
    if width < 2:
        raise FormatError(f"line 1: need at least one feature column and a label column; {CSV_SCHEMA}")
    rows, raw = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise FormatError(f"line {lineno}: expected {width} fields, got {len(cells)}; {CSV_SCHEMA}")
        try:
            rows.append([float(c) for c in cells[:-1]])
            lab = float(cells[-1])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}; {CSV_SCHEMA}") from None
        if lab != int(lab):
            raise FormatError(f"line {lineno}: label {cells[-1].strip()!r} is not an integer; {CSV_SCHEMA}")
        raw.append(int(lab))
    if not rows:
        raise FormatError("dataset file has no examples")
    values = sorted(set(raw))
    lookup = {v: i for i, v in enumerate(values)}
    k = len(values) if k is None else k
    if len(values) > k:
        raise FormatError(f"found {len(values)} distinct labels, expected at most {k}")
    return Dataset(np.array(rows), np.array([lookup[v] for v in raw]), k, label_values=values)


# ---------------------------------------------------------------------------
# model serialization


def model_to_json(te: TrainedEcoc) -> str:
    doc = {
        "codebook": json.loads(codebook_to_json(te.codebook)),
        "spec": asdict(te.spec),
        "scorers": [
            {"kind": s.kind, "params": {k: np.asarray(v).tolist() for k, v in s.params.items()}}
            for s in te.scorers
        ],
    }
    return json.dumps(doc) + "\n"


def model_from_json(text: str) -> TrainedEcoc:
    try:
        doc = json.loads(text)
        cb = codebook_from_json(json.dumps(doc["codebook"]))
        spec = BinaryLearnerSpec(**doc["spec"])
        scorers = []
        for s in doc["scorers"]:
            params = {k: (float(v) if k == "b" else np.asarray(v, dtype=np.float64)) for k, v in s["params"].items()}
            scorers.append(BinaryScorer(s["kind"], params))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid model JSON: {exc}") from exc
    return TrainedEcoc(cb, scorers, spec)
