"""Command-line front end: ``ecocip <subcommand> [options]``.

Every run writes a manifest next to its primary output (or to ``--manifest``)
holding the resolved parameters, derived seeds and SHA-256 hashes of the
artifacts; ``ecocip replay MANIFEST`` re-runs it and compares the hashes.

Exit codes: 0 ok, 1 replay mismatch, 2 validation or input error,
3 infeasible, 4 feasible but stopped at a limit.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import attack as atk
from . import codebook as cb
from . import conflict as cf
from . import ecoc
from . import model as md
from . import solve as sv
from .errors import EcocError

log = logging.getLogger("ecocip")

EXIT_OK, EXIT_MISMATCH, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 1, 2, 3, 4
CONFIG_ENV = "ECOCIP_CONFIG"
STATUS_EXIT = {sv.OPTIMAL: EXIT_OK, sv.FEASIBLE_LIMIT: EXIT_LIMIT, sv.INFEASIBLE: EXIT_INFEASIBLE,
               sv.UNBOUNDED: EXIT_VALIDATION}


class UsageError(EcocError):
    pass


def derive_seed(seed: int, label: str) -> int:
    """Per-stage seed from the run seed by labelled hashing."""
    h = hashlib.sha256(f"{int(seed)}:{label}".encode()).digest()
    return int.from_bytes(h[:4], "little")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Collects artifacts and parameters for the manifest."""

    def __init__(self, args):
        self.args = args
        self.artifacts: list[str] = []
        self.seeds: dict[str, int] = {}
        self.deterministic = bool(getattr(args, "deterministic", False))

    @property
    def workers(self) -> int:
        return 1 if self.deterministic else max(1, int(getattr(self.args, "workers", 1) or 1))

    def seed(self, label: str) -> int:
        s = derive_seed(getattr(self.args, "seed", 0) or 0, label)
        self.seeds[label] = s
        return s

    def write(self, path, text: str):
        if path is None or str(path) == "-":
            sys.stdout.write(text)
            return
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
        self.artifacts.append(str(path))

    def write_json(self, path, doc):
        self.write(path, json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n")

    def elapsed(self, seconds: float):
        return None if self.deterministic else round(seconds, 6)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


# ---------------------------------------------------------------------------
# validation helpers


def _need(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def _check_k(k):
    _need(k is not None, "--k is required")
    _need(2 <= k <= 20, f"--k must be in [2, 20], got {k}")


def _check_band(k, rho, upper):
    _need(rho is not None, "--rho is required")
    _need(1 <= rho <= k - 1, f"--rho must be in [1, k-1] = [1, {k - 1}], got {rho}")
    _need(upper is None or rho <= upper, f"--upper ({upper}) must be >= --rho ({rho})")


def _candidates(args) -> cb.Codebook:
    """Exhaustive code of ``--k`` (or ``--codebook``), optionally balance-filtered."""
    if getattr(args, "codebook", None):
        M = cb.load(args.codebook)
    else:
        _check_k(args.k)
        M = cb.generate_exhaustive(args.k)
    if getattr(args, "tau", None) is not None:
        M = cb.filter_balanced(M, args.tau)
    return M


def _upper(args):
    return None if getattr(args, "upper", None) in (None, "none") else args.upper


# ---------------------------------------------------------------------------
# codebook commands


def cmd_exhaustive(args, run: Run) -> int:
    _check_k(args.k)
    M = cb.generate_exhaustive(args.k)
    _write_codebook(run, args.out, M)
    return EXIT_OK


def cmd_standard(args, run: Run) -> int:
    _check_k(args.k)
    M = cb.one_vs_all(args.k) if args.kind == "one-vs-all" else cb.one_vs_one(args.k)
    _write_codebook(run, args.out, M)
    return EXIT_OK


def cmd_random(args, run: Run) -> int:
    _check_k(args.k)
    _need(args.L is not None and args.L >= 1, "--L must be >= 1")
    M = cb.generate_random(args.k, args.L, args.alphabet, args.trials, run.seed("random"))
    _write_codebook(run, args.out, M)
    return EXIT_OK


def cmd_balance(args, run: Run) -> int:
    _need(args.tau is not None and args.tau >= 0, "--tau must be >= 0")
    M = cb.filter_balanced(_candidates(argparse.Namespace(codebook=args.codebook, k=args.k, tau=None)), args.tau)
    _write_codebook(run, args.out, M)
    return EXIT_OK


def _write_codebook(run: Run, out, M: cb.Codebook):
    if out and str(out).lower().endswith(".json"):
        run.write(out, cb.to_json(M))
    else:
        run.write(out, cb.to_csv(M))


# ---------------------------------------------------------------------------
# conflict commands


def cmd_classify(args, run: Run) -> int:
    M = _candidates(args)
    _check_band(M.k, args.rho, _upper(args))
    t0 = time.perf_counter()
    pc = cf.classify_pairs(M, args.rho, _upper(args))
    report = {
        "k": M.k, "rho": args.rho, "upper": _upper(args), "n_columns": M.L,
        "n_pairs": pc.n_pairs_total, "n_feasible": pc.n_feasible, "n_infeasible": pc.n_infeasible,
        "elapsed_s": run.elapsed(time.perf_counter() - t0),
    }
    if args.edges:
        cf.write_edge_list(cf.build_graph(pc), args.edges)
        run.artifacts.append(str(args.edges))
    run.write_json(args.out, report)
    return EXIT_OK


def _cover(args, run: Run, G: cf.ConflictGraph) -> cf.CliqueCover:
    parts = getattr(args, "parts", 1) or 1
    seed = run.seed("cover")
    if parts > 1:
        return cf.cover_in_parts(G, parts, seed, run.workers)
    return cf.edge_clique_cover(G, seed)


def cmd_cover(args, run: Run) -> int:
    if args.edges:
        G = cf.read_edge_list(args.edges)
    else:
        M = _candidates(args)
        _check_band(M.k, args.rho, _upper(args))
        G = cf.build_graph(cf.classify_pairs(M, args.rho, _upper(args)))
    t0 = time.perf_counter()
    cover = _cover(args, run, G)
    problems = cf.validate_cover(G, cover)
    _need(not problems, f"cover failed validation: {problems[:3]}")
    run.write(args.out, cf.cover_to_json(cover))
    log.info("cover: %d cliques for %d edges (%.2fs)", len(cover), G.n_edges, time.perf_counter() - t0)
    return EXIT_OK


def cmd_stats(args, run: Run) -> int:
    _check_k(args.k)
    k, rho, upper = args.k, args.rho, _upper(args)
    _check_band(k, rho, upper)
    M = _candidates(args)
    t0 = time.perf_counter()
    pc = cf.classify_pairs(M, rho, upper)
    t_classify = time.perf_counter() - t0
    report = {
        "k": k, "rho": rho, "upper": upper, "n_columns": M.L,
        "n_pairs": pc.n_pairs_total, "n_infeasible": pc.n_infeasible,
        "n_infeasible_closed_form": (cf.infeasible_count_closed_form(k, rho)
                                     if upper is None and args.tau is None and not args.codebook else None),
        "classify_s": run.elapsed(t_classify),
        "cover_size": None, "reduction_factor": None, "cover_s": None,
    }
    if pc.n_infeasible <= args.cover_max_edges:
        t1 = time.perf_counter()
        cover = _cover(args, run, cf.build_graph(pc))
        report["cover_size"] = len(cover)
        report["reduction_factor"] = pc.n_infeasible / max(1, len(cover))
        report["cover_s"] = run.elapsed(time.perf_counter() - t1)
    else:
        log.info("skipping cover: %d edges exceed --cover-max-edges", pc.n_infeasible)
    run.write_json(args.out, report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# model / solve


def _build(args, run: Run, M: cb.Codebook):
    upper = _upper(args)
    _check_band(M.k, args.rho, upper)
    _need(args.L is not None and args.L >= 0, "--L must be >= 0")
    cover = None
    if args.formulation == "ip1":
        model = md.build_ip1(M, args.L, args.rho, upper)
    elif args.formulation == "ip2":
        model = md.build_ip2(M, args.L, args.rho, upper)
    else:
        G = cf.build_graph(cf.classify_pairs(M, args.rho, upper))
        cover = _cover(args, run, G)
        model = md.build_ip3(M, args.L, args.rho, cover, upper)
    if getattr(args, "objective", "max-min") == "distribution":
        _need(args.target is not None, "--target is required for the distribution objective")
        model = md.set_objective_distribution(model, md.TargetDistances.constant(M.k, args.target))
    return model, cover


def cmd_build_model(args, run: Run) -> int:
    M = _candidates(args)
    model, _ = _build(args, run, M)
    run.write(args.out, md.to_lp(model))
    if args.stats:
        run.write_json(args.stats, md.model_stats(model).to_dict())
    return EXIT_OK


def _solver_cfg(args, run: Run) -> sv.SolverConfig:
    return sv.SolverConfig(time_limit=args.time_limit, node_limit=args.node_limit,
                           seed=run.seed("solve"), restarts=args.restarts)


def cmd_solve(args, run: Run) -> int:
    model = md.read_lp(args.model)
    if args.method == "highs":
        sol = sv.solve_highs(model, args.time_limit)
    else:
        sol = sv.solve_exact(model, _solver_cfg(args, run))
    run.write(args.out, sol.to_json(timings=not run.deterministic))
    return STATUS_EXIT[sol.status]


def cmd_design(args, run: Run) -> int:
    M = _candidates(args)
    upper = _upper(args)
    _check_band(M.k, args.rho, upper)
    _need(args.L is not None and args.L >= 0, "--L must be >= 0")
    t0 = time.perf_counter()
    pc = cf.classify_pairs(M, args.rho, upper)
    G = cf.build_graph(pc)
    cover = _cover(args, run, G)
    t_cover = time.perf_counter() - t0
    cfg = _solver_cfg(args, run)
    method = args.method
    if method == "auto":
        method = "exact" if M.L <= 63 else "local-search"
    if method == "local-search":
        sol = sv.solve_local_search(M, args.L, args.rho, cover, cfg, upper)
    else:
        model = md.build_ip3(M, args.L, args.rho, cover, upper)
        sol = sv.solve_highs(model, args.time_limit) if method == "highs" else sv.solve_exact(model, cfg)
    if sol.selected_columns and len(sol.selected_columns) < args.L and not sol.warnings:
        sol.warnings.append(f"short-selection: {len(sol.selected_columns)} of {args.L} columns")
    check = sv.certify(M, sol.selected_columns, args.L, args.rho, upper, sol.objective_value)
    _need(check.confirmed, f"solution failed certification: {check.issues}")
    report = sol.to_dict(timings=not run.deterministic)
    report.update({
        "method": method, "k": M.k, "L": args.L, "rho": args.rho, "upper": upper, "tau": args.tau,
        "n_columns": M.L, "n_pairs": pc.n_pairs_total, "n_infeasible": pc.n_infeasible,
        "cover_size": len(cover), "reduction_factor": pc.n_infeasible / len(cover) if len(cover) else None,
        "cover_s": run.elapsed(t_cover),
    })
    if sol.selected_columns:
        chosen = M.select(sol.selected_columns)
        _write_codebook(run, args.out, chosen)
    if args.report:
        run.write_json(args.report, report)
    else:
        print(json.dumps(report, sort_keys=True, default=_json_default), file=sys.stderr)
    return STATUS_EXIT[sol.status]


# ---------------------------------------------------------------------------
# data / evaluation


def cmd_toy(args, run: Run) -> int:
    ds = ecoc.make_gaussian_toy(args.k, args.n, run.seed("toy"), args.radius, args.sigma)
    if args.test_out:
        tr, te = ecoc.train_test_split(ds, args.test_fraction, run.seed("split"))
        run.write(args.out, ecoc.dataset_to_csv(tr))
        run.write(args.test_out, ecoc.dataset_to_csv(te))
    else:
        run.write(args.out, ecoc.dataset_to_csv(ds))
    return EXIT_OK


def _learner(args, run: Run) -> ecoc.BinaryLearnerSpec:
    return ecoc.BinaryLearnerSpec(kind=args.learner, learning_rate=args.learning_rate, epochs=args.epochs,
                                  regularization=args.regularization, n_features=args.n_features,
                                  width=args.width, seed=run.seed("train"))


def _train(args, run: Run):
    M = cb.load(args.codebook)
    tr = ecoc.dataset_from_csv(Path(args.train).read_text(), M.k)
    te = ecoc.dataset_from_csv(Path(args.test).read_text(), M.k) if args.test else tr
    if args.test:
        # attacks clip to the union of both files' observed range
        lo, hi = np.minimum(tr.lower, te.lower), np.maximum(tr.upper, te.upper)
        te = ecoc.Dataset(te.features, te.labels, te.k, lo, hi, te.label_values)
    model = ecoc.train(tr, M, _learner(args, run), workers=run.workers)
    if getattr(args, "model_out", None):
        run.write(args.model_out, ecoc.model_to_json(model))
    return model, te


def cmd_eval(args, run: Run) -> int:
    model, te = _train(args, run)
    report = ecoc.evaluate(model, te)
    report["codebook"] = {"k": model.codebook.k, "L": model.codebook.L, "path": str(args.codebook)}
    run.write_json(args.out, report)
    return EXIT_OK


def _parse_eps(text) -> list[float]:
    try:
        eps = [float(e) for e in str(text).split(",") if e.strip()]
    except ValueError:
        raise UsageError(f"--epsilons must be comma-separated numbers, got {text!r}") from None
    _need(eps and all(e >= 0 for e in eps), "--epsilons must be non-negative")
    return eps


def cmd_attack(args, run: Run) -> int:
    model, te = _train(args, run)
    eps = _parse_eps(args.epsilons)
    cfg = atk.AttackConfig(epsilon=max(eps), steps=args.steps, step_size=args.step_size, loss=args.loss,
                           random_start=args.random_start, seed=run.seed("attack"), mode=args.mode)
    rows = [r.to_dict() for r in atk.attack_sweep(model, te, eps, cfg)]
    report = {
        "config": {"epsilons": eps, "steps": args.steps, "step_size": args.step_size, "loss": args.loss,
                   "random_start": args.random_start, "mode": args.mode},
        "clean_accuracy": rows[0]["clean_accuracy"],
        "sweep": rows,
    }
    if args.fgsm:
        report["fgsm"] = [atk.fgsm(model, te, e, args.loss, args.mode).to_dict() for e in sorted(eps)]
    run.write_json(args.out, report)
    if args.csv:
        lines = ["epsilon,adversarial_accuracy"] + [f"{r['epsilon']},{r['adversarial_accuracy']}" for r in rows]
        run.write(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args, run: Run) -> int:
    doc = json.loads(Path(args.manifest_file).read_text())
    code = main(doc["argv"], _replaying=True)
    mismatched = [p for p, h in doc["artifacts"].items() if not Path(p).exists() or _sha256(p) != h]
    for p in mismatched:
        print(f"mismatch: {p}", file=sys.stderr)
    if mismatched:
        return EXIT_MISMATCH
    print(f"replay ok: {len(doc['artifacts'])} artifact(s) identical", file=sys.stderr)
    return code if code == doc.get("exit_code", code) else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# parser


def _add_common(p, out_help="output path (stdout if omitted)"):
    p.add_argument("--out", help=out_help)
    p.add_argument("--seed", type=int, default=0)


def _add_codebook_source(p, rho=True):
    p.add_argument("--k", type=int)
    p.add_argument("--codebook", help="candidate codebook file instead of the exhaustive code")
    p.add_argument("--tau", type=int, help="keep only columns with |#(+1) - #(-1)| <= tau")
    if rho:
        p.add_argument("--rho", type=int)
        p.add_argument("--upper", type=int, help="upper column-distance bound (inactive if omitted)")
    p.add_argument("--parts", type=int, default=1, help="split the conflict graph into this many parts")


def _add_solver(p):
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--restarts", type=int, default=300)


def _add_learner(p):
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--codebook", required=True)
    p.add_argument("--learner", choices=ecoc.KINDS, default="rbf-features-logistic")
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--regularization", type=float, default=1e-3)
    p.add_argument("--n-features", type=int, default=100)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--model-out", help="write the trained model as JSON")


def _add_globals(p, defaults: bool):
    def d(value):
        return value if defaults else argparse.SUPPRESS

    p.add_argument("--config", default=d(os.environ.get(CONFIG_ENV)),
                   help=f"key=value defaults file (default: ${CONFIG_ENV})")
    p.add_argument("--deterministic", action="store_true", default=d(False),
                   help="single-threaded reference path; timings written as null")
    p.add_argument("--workers", type=int, default=d(1))
    p.add_argument("--manifest", default=d(None), help="manifest path (default: <out>.manifest.json)")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecocip", description="ECOC codebook design by integer programming")
    parser.add_argument("--version", action="version", version=f"ecocip {__version__}")
    _add_globals(parser, defaults=True)
    # the same flags are accepted after the subcommand too
    shared = argparse.ArgumentParser(add_help=False)
    _add_globals(shared, defaults=False)
    sub = parser.add_subparsers(dest="command", required=True)
    add_parser = sub.add_parser

    def sub_parser(name, **kw):
        return add_parser(name, parents=[shared], **kw)

    sub.add_parser = sub_parser

    p = sub.add_parser("exhaustive", help="all 2^(k-1)-1 canonical columns")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("standard", help="one-vs-all or one-vs-one codebook")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--kind", choices=("one-vs-all", "one-vs-one"), default="one-vs-all")
    p.set_defaults(func=cmd_standard)

    p = sub.add_parser("random", help="best of many random dense/sparse codebooks")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--alphabet", choices=("dense", "sparse"), default="dense")
    p.add_argument("--trials", type=int, default=10000)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("balance", help="keep balanced columns")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--codebook")
    p.add_argument("--tau", type=int, default=1)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("classify", help="count column pairs violating the separation band")
    _add_common(p)
    _add_codebook_source(p)
    p.add_argument("--edges", help="also write the conflict graph as an edge list")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cover", help="edge clique cover of the conflict graph")
    _add_common(p)
    _add_codebook_source(p)
    p.add_argument("--edges", help="read the conflict graph from an edge list")
    p.set_defaults(func=cmd_cover)

    for name in ("build-model", "export"):
        p = sub.add_parser(name, help="write IP1/IP2/IP3 in LP format")
        _add_common(p)
        _add_codebook_source(p)
        p.add_argument("--L", type=int)
        p.add_argument("--formulation", choices=("ip1", "ip2", "ip3"), default="ip3")
        p.add_argument("--objective", choices=("max-min", "distribution"), default="max-min")
        p.add_argument("--target", type=float, help="constant target row distance (distribution objective)")
        p.add_argument("--stats", help="also write model statistics JSON")
        p.set_defaults(func=cmd_build_model)

    p = sub.add_parser("solve", help="solve an LP-format model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=("exact", "highs"), default="exact")
    _add_solver(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("design", help="exhaustive -> cover -> IP3 -> solve")
    _add_common(p, "selected codebook path (stdout if omitted)")
    _add_codebook_source(p)
    p.add_argument("--L", type=int)
    p.add_argument("--method", choices=("auto", "exact", "local-search", "highs"), default="auto")
    p.add_argument("--report", help="solution report JSON (stderr summary if omitted)")
    _add_solver(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("stats", help="constraint-reduction statistics")
    _add_common(p)
    _add_codebook_source(p)
    p.add_argument("--cover-max-edges", type=int, default=2_000_000,
                   help="skip the cover when the conflict graph has more edges")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("toy", help="2d Gaussian toy dataset")
    _add_common(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=200, help="points per class")
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--test-out", help="also split off a test set here")
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("eval", help="train and evaluate a codebook")
    _add_common(p)
    _add_learner(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attack", help="train, then PGD sweep over epsilons")
    _add_common(p)
    _add_learner(p)
    p.add_argument("--epsilons", default="0,0.05,0.1,0.2")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--step-size", type=float)
    p.add_argument("--loss", choices=atk.LOSSES, default="cross-entropy")
    p.add_argument("--random-start", action="store_true")
    p.add_argument("--mode", choices=ecoc.MODES, default="scores-raw")
    p.add_argument("--fgsm", action="store_true", help="also report FGSM at each epsilon")
    p.add_argument("--csv", help="per-epsilon table as CSV")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("replay", help="re-run a manifest and compare artifact hashes")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys may use dashes or underscores."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, subparser: argparse.ArgumentParser, values: dict):
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(raw) if action.type else raw
            if action.choices and defaults[key] not in action.choices:
                raise UsageError(f"config: {key}={raw} not in {list(action.choices)}")
    subparser.set_defaults(**defaults)


def _manifest_path(args):
    if args.manifest:
        return Path(args.manifest)
    primary = getattr(args, "out", None) or getattr(args, "report", None)
    if primary and str(primary) != "-":
        return Path(str(primary) + ".manifest.json")
    return Path("ecocip-manifest.json")


def main(argv=None, _replaying: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(parser, sub, read_config(args.config))
            args = parser.parse_args(argv)
        run = Run(args)
        code = args.func(args, run)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EcocError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command != "replay":
        _write_manifest(args, run, argv, code)
    return code


def _write_manifest(args, run: Run, argv, code: int):
    params = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {
        "tool": "ecocip",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "params": params,
        "seed": getattr(args, "seed", None),
        "derived_seeds": run.seeds,
        "deterministic": run.deterministic,
        "exit_code": code,
        "artifacts": {p: _sha256(p) for p in run.artifacts},
    }
    path = _manifest_path(args)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")


if __name__ == "__main__":
    sys.exit(main())
