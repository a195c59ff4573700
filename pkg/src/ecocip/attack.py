"""White-box l-infinity attacks on the differentiable ECOC class scores.

The feasible set around a clean point ``x0`` is the box
``max(x0 - eps, l) <= x <= min(x0 + eps, u)``.  PGD ascends the loss by signed
gradient steps and projects back onto it.  Every iterate is a candidate. The
reported point is the best one: misclassified iterates first, then the
largest loss.  Hence ``eps = 0`` reproduces the clean accuracy and larger
budgets never help the defender.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .ecoc import Dataset, TrainedEcoc, class_scores, predict
from .errors import CapabilityError, PreconditionError

log = logging.getLogger(__name__)

LOSSES = ("cross-entropy", "margin")


@dataclass
class AttackConfig:
    epsilon: float = 0.1
    steps: int = 100
    step_size: float | None = None
    loss: str = "cross-entropy"
    random_start: bool = False
    seed: int = 0
    mode: str = "scores-raw"

    def __post_init__(self):
        if self.epsilon < 0:
            raise PreconditionError("epsilon must be >= 0")
        if self.steps < 1:
            raise PreconditionError("steps must be >= 1")
        if self.loss not in LOSSES:
            raise PreconditionError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.step_size is not None and self.step_size <= 0:
            raise PreconditionError("step_size must be positive")
        if self.step_size is not None and self.step_size > self.epsilon > 0:
            log.warning("step_size %g exceeds epsilon %g", self.step_size, self.epsilon)

    @property
    def alpha(self) -> float:
        return self.step_size if self.step_size is not None else 2.5 * self.epsilon / self.steps


@dataclass
class ExampleOutcome:
    success: bool
    perturbation_norm: float
    trace_length: int


@dataclass
class AttackResult:
    epsilon: float
    clean_accuracy: float
    adversarial_accuracy: float
    per_example: list[ExampleOutcome]
    adversarial: np.ndarray
    max_violation: float = 0.0
    losses: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "clean_accuracy": self.clean_accuracy,
            "adversarial_accuracy": self.adversarial_accuracy,
            "max_violation": self.max_violation,
            "n_success": int(sum(o.success for o in self.per_example)),
        }


def _normalized(mode: str) -> bool:
    return mode == "scores-normalized"


def loss_and_grad(te: TrainedEcoc, X, labels, loss: str = "cross-entropy", normalized: bool = False):
    """Per-example loss and its input gradient (n, n x d)."""
    if not te.differentiable:
        raise CapabilityError(f"{te.spec.kind} learners have no input gradient")
    P, J = class_scores(te, X, normalized=normalized, grad=True)
    labels = np.asarray(labels)
    n = len(P)
    rows = np.arange(n)
    if loss == "cross-entropy":
        Z = P - P.max(axis=1, keepdims=True)
        soft = np.exp(Z)
        soft /= soft.sum(axis=1, keepdims=True)
        value = np.log(np.exp(Z).sum(axis=1)) - Z[rows, labels]
        w = soft.copy()
        w[rows, labels] -= 1.0
        g = np.einsum("nk,nkd->nd", w, J)
    elif loss == "margin":
        others = P.copy()
        others[rows, labels] = -np.inf
        top = np.argmax(others, axis=1)
        value = P[rows, top] - P[rows, labels]
        g = J[rows, top] - J[rows, labels]
    else:
        raise PreconditionError(f"unknown loss {loss!r}")
    return value, g


def _box(ds: Dataset, X0: np.ndarray, eps: float):
    lo = np.maximum(X0 - eps, ds.lower)
    hi = np.minimum(X0 + eps, ds.upper)
    # a clean point outside the data bounds keeps itself feasible
    return np.minimum(lo, X0), np.maximum(hi, X0)


def _better(loss_new, wrong_new, loss_old, wrong_old):
    return (wrong_new & ~wrong_old) | ((wrong_new == wrong_old) & (loss_new > loss_old))


def _run(te: TrainedEcoc, ds: Dataset, cfg: AttackConfig, carry=None):
    X0 = ds.features
    y = ds.labels
    lo, hi = _box(ds, X0, cfg.epsilon)
    normalized = _normalized(cfg.mode)
    if cfg.random_start and cfg.epsilon > 0:
        rng = np.random.default_rng(cfg.seed)
        X = np.clip(X0 + rng.uniform(-cfg.epsilon, cfg.epsilon, X0.shape), lo, hi)
    else:
        X = X0.copy()

    def violation(X):
        return float(max(np.max(np.abs(X - X0)) - cfg.epsilon, np.max(lo - X), np.max(X - hi), 0.0))

    best = X.copy()
    best_loss, g = loss_and_grad(te, X, y, cfg.loss, normalized)
    best_wrong = predict(te, X, cfg.mode) != y
    worst = violation(X)
    if carry is not None:
        cX = np.clip(carry, lo, hi)
        c_loss, _ = loss_and_grad(te, cX, y, cfg.loss, normalized)
        c_wrong = predict(te, cX, cfg.mode) != y
        take = _better(c_loss, c_wrong, best_loss, best_wrong)
        best[take], best_loss[take], best_wrong[take] = cX[take], c_loss[take], c_wrong[take]
    if cfg.epsilon > 0:
        for _ in range(cfg.steps):
            X = np.clip(X + cfg.alpha * np.sign(g), lo, hi)
            worst = max(worst, violation(X))
            value, g = loss_and_grad(te, X, y, cfg.loss, normalized)
            wrong = predict(te, X, cfg.mode) != y
            take = _better(value, wrong, best_loss, best_wrong)
            best[take], best_loss[take], best_wrong[take] = X[take], value[take], wrong[take]
    trace = cfg.steps + 1 if cfg.epsilon > 0 else 1
    clean = float(np.mean(predict(te, X0, cfg.mode) == y))
    outcomes = [
        ExampleOutcome(bool(w), float(np.max(np.abs(b - x0))) if len(x0) else 0.0, trace)
        for w, b, x0 in zip(best_wrong, best, X0)
    ]
    return AttackResult(cfg.epsilon, clean, float(np.mean(~best_wrong)), outcomes, best, worst, best_loss)


def pgd_attack(te: TrainedEcoc, ds: Dataset, cfg: AttackConfig | None = None) -> AttackResult:
    cfg = cfg or AttackConfig()
    if not te.differentiable:
        raise CapabilityError(f"{te.spec.kind} learners cannot be attacked with gradients")
    return _run(te, ds, cfg)


def fgsm(te: TrainedEcoc, ds: Dataset, epsilon: float, loss: str = "cross-entropy", mode: str = "scores-raw") -> AttackResult:
    """One signed-gradient step of size ``epsilon`` from the clean point."""
    cfg = AttackConfig(epsilon=epsilon, steps=1, step_size=epsilon if epsilon > 0 else None,
                       loss=loss, random_start=False, mode=mode)
    return pgd_attack(te, ds, cfg)


def attack_sweep(te: TrainedEcoc, ds: Dataset, epsilons, cfg: AttackConfig | None = None) -> list[AttackResult]:
    """PGD at each budget in ascending order.  The best point found at a
    smaller budget stays a candidate at the larger ones."""
    cfg = cfg or AttackConfig()
    if not te.differentiable:
        raise CapabilityError(f"{te.spec.kind} learners cannot be attacked with gradients")
    results, carry = [], None
    for eps in sorted(float(e) for e in epsilons):
        res = _run(te, ds, replace(cfg, epsilon=eps), carry)
        carry = res.adversarial
        results.append(res)
    return results


@dataclass
class GradientCheckReport:
    passed: bool
    max_relative_error: float
    analytic: np.ndarray
    numeric: np.ndarray


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    if scale < 1e-12:
        return 0.0
    return float(np.max(np.abs(a - b)) / scale)


def gradient_check(te: TrainedEcoc, x, tol: float = 1e-4, label: int = 0, loss: str = "cross-entropy",
                   h: float = 1e-5, target: str = "loss", normalized: bool = False, analytic=None) -> GradientCheckReport:
    """Central differences against the analytic gradient at one point.

    ``target`` is ``"loss"`` (gradient of the attack loss for ``label``) or
    ``"scores"`` (the k x d Jacobian of the class scores, checked row by row).
    ``analytic`` overrides the analytic value, for testing the checker.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    d = len(x)
    E = np.eye(d) * h
    if target == "loss":
        def f(Z):
            return loss_and_grad(te, Z, np.full(len(Z), label), loss, normalized)[0]

        a = loss_and_grad(te, x[None], [label], loss, normalized)[1][0] if analytic is None else np.asarray(analytic)
        num = (f(x + E) - f(x - E)) / (2 * h)
        err = _relative_error(a, num)
    elif target == "scores":
        a = class_scores(te, x[None], normalized, grad=True)[1][0] if analytic is None else np.asarray(analytic)
        num = ((class_scores(te, x + E, normalized) - class_scores(te, x - E, normalized)) / (2 * h)).T
        err = max(_relative_error(a[i], num[i]) for i in range(len(a)))
    else:
        raise PreconditionError(f"unknown target {target!r}")
    return GradientCheckReport(err < tol, err, a, num)
