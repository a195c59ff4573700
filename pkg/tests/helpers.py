"""Shared test helpers (independent oracles kept deliberately naive)."""

import itertools

import numpy as np

from ecocip.ecoc import BinaryLearnerSpec, BinaryScorer, TrainedEcoc, train


def fit(ds, M, kind="logistic", **kw):
    return train(ds, M, BinaryLearnerSpec(kind=kind, epochs=kw.pop("epochs", 200), **kw))


def brute_min_distance(entries, columns):
    """Independent min row distance of a column subset (plain loops)."""
    k = entries.shape[0]
    if not columns:
        return 0
    best = None
    for r, s in itertools.combinations(range(k), 2):
        d = sum(int(entries[r, c] != entries[s, c]) for c in columns)
        best = d if best is None else min(best, d)
    return best


def random_graph_edges(rng, n, p):
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return np.column_stack([iu[0][keep], iu[1][keep]])


def enumerate_max_min(model):
    """Optimum of a max-min model by evaluating its rows on every 0/1 ``x``.

    Dependent variables take their tightest values for each ``x``:
    ``y_i_j = x_i x_j`` and ``t = min_p c_p . x``.  Returns (value, x) of the
    best feasible assignment, or (None, None) when none is feasible.
    """
    names = model.var_names
    x_idx = model.x_indices()
    n = len(x_idx)
    N = 2 ** n
    X = ((np.arange(N)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    V = np.zeros((N, model.n_vars))
    V[:, x_idx] = X
    for j, name in enumerate(names):
        if name.startswith("y_"):
            a, b = (int(s) - 1 for s in name.split("_")[1:])
            V[:, j] = X[:, a] * X[:, b]
    t = names.index("t")
    link = model.block("objective-link")
    V[:, t] = np.asarray(-(link.A[:, x_idx] @ X.T)).min(axis=0)
    ok = np.all(V >= model.lower - 1e-9, axis=1) & np.all(V <= model.upper + 1e-9, axis=1)
    for b in model.blocks:
        lhs = np.asarray(b.A @ V.T)
        rhs = b.rhs[:, None]
        if b.sense == "<=":
            ok &= np.all(lhs <= rhs + 1e-9, axis=0)
        elif b.sense == ">=":
            ok &= np.all(lhs >= rhs - 1e-9, axis=0)
        else:
            ok &= np.all(np.abs(lhs - rhs) <= 1e-9, axis=0)
    if not ok.any():
        return None, None
    best = int(np.flatnonzero(ok)[np.argmax(V[ok, t])])
    return float(V[best, t]), X[best]


def constant_ecoc(M, r, d=2):
    """A TrainedEcoc whose column ``l`` always outputs probability ``r[l]``."""
    scorers = []
    for p in np.broadcast_to(np.asarray(r, dtype=np.float64), (M.L,)):
        b = float(np.log(p / (1 - p)))
        scorers.append(BinaryScorer("logistic", {"mu": np.zeros(d), "sd": np.ones(d), "w": np.zeros(d), "b": b}))
    return TrainedEcoc(M, scorers, BinaryLearnerSpec(kind="logistic"))
