"""Command-line harness: single evaluations and config-driven experiments.

Subcommands
-----------
simulate        Monte Carlo makespan for one model and task batch
exact           integral-equation value refined to a tolerance
single-failure  at-most-one-failure expected makespans and differences
thresholds      sufficient-condition certification reports
sweep           config-driven experiment producing CSV/JSON reports
selftest        fast oracle battery (closed forms vs engines)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import jsonschema

from . import rates, single_failure, theory
from .errors import InvalidModelError
from .sampling import INVERSION, THINNING
from .simulate import estimate_makespan, estimate_single_failure
from .solver import (constant_rate_batch, refine_until, two_phase_delta,
                     zero_then_constant_two_task)
from .tasks import Permutation, TaskBatch, feasible_permutations, lpt, spt

_ENV_THREADS = "NHPP_SCHED_THREADS"

_KIND_ALIASES = {k.lower(): k for k in rates.KINDS}
_KIND_ALIASES.update({
    "constant": "Constant",
    "zero": "Constant",
    "linear_increasing": "LinearIncreasing",
    "concave_increasing": "ConcaveIncreasing",
    "step_increasing": "StepIncreasing",
    "linear_decreasing": "LinearDecreasing",
    "convex_decreasing": "ConvexDecreasing",
    "step_decreasing": "StepDecreasing",
    "sinusoidal": "Sinusoidal",
    "bathtub": "Bathtub",
    "zero_then_constant": "ZeroThenConstant",
    "two_phase_constant": "TwoPhaseConstant",
    "piecewise_constant": "PiecewiseConstant",
})


class UsageError(ValueError):
    pass


def parse_model_arg(text: str) -> rates.RateModel:
    """Parse an inline model descriptor.

    Forms: "zero", "constant:0.4", "<kind>:key=value,key=value", where list
    values use semicolons ("piecewise_constant:breakpoints=1;2,levels=0.1;0.2;0").
    """
    head, _, rest = text.partition(":")
    key = head.strip().lower()
    if key not in _KIND_ALIASES:
        raise UsageError(f"unknown rate kind {head!r}; known: "
                         + ", ".join(sorted(set(_KIND_ALIASES.values()))))
    kind = _KIND_ALIASES[key]
    if key == "zero":
        if rest:
            raise UsageError("'zero' takes no parameters")
        return rates.zero_rate()
    params: Dict[str, object] = {}
    if rest:
        for chunk in rest.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "=" not in chunk:
                if params or kind not in ("Constant", "ConvexDecreasing"):
                    raise UsageError(
                        f"bare value only allowed as the single 'lam' of "
                        f"Constant/ConvexDecreasing, got {chunk!r}")
                params["lam"] = float(chunk)
                continue
            name, _, value = chunk.partition("=")
            name = name.strip()
            value = value.strip()
            if ";" in value:
                params[name] = tuple(float(v) for v in value.split(";") if v)
            else:
                params[name] = float(value)
    try:
        return rates.RateModel.make(kind, **params)
    except InvalidModelError as exc:
        raise UsageError(str(exc)) from exc


def parse_tasks_arg(text: str) -> TaskBatch:
    try:
        lengths = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad task list {text!r}") from exc
    if not lengths:
        raise UsageError("need at least one task length")
    return TaskBatch.from_lengths(lengths)


def resolve_permutations(batch: TaskBatch, spec) -> List[Permutation]:
    if isinstance(spec, str):
        token = spec.strip().lower()
        if token == "spt":
            return [spt(batch)]
        if token == "lpt":
            return [lpt(batch)]
        if token == "spt_lpt":
            perms = [spt(batch)]
            if lpt(batch) != perms[0]:
                perms.append(lpt(batch))
            return perms
        if token == "all":
            if batch.n > 7:
                raise UsageError("'all' permutations supported only for n <= 7")
            return list(feasible_permutations(batch.n))
        try:
            order = [int(v) for v in token.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad permutation {spec!r}") from exc
        return [Permutation.from_one_based(order)]
    return [Permutation.from_one_based(p) for p in spec]


def _load_schema(name: str) -> dict:
    with resources.files("nhpp_sched.schemas").joinpath(name).open("r") as fh:
        return json.load(fh)


@dataclass
class ExperimentConfig:
    families: List[Tuple[str, rates.RateModel]]
    batch: TaskBatch
    methods: Dict[str, bool]
    permutations: object
    replications: int
    seed: int
    parallelism: Optional[int]
    tolerance: float
    t_close: Optional[float]
    out_dir: Optional[str]
    formats: Tuple[str, ...]
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        jsonschema.validate(data, _load_schema("config.schema.json"))
        families = []
        for fam in data["families"]:
            families.append((fam["name"],
                             rates.RateModel.from_descriptor(fam["model"])))
        methods = {"mc": True, "exact": False,
                   "single_failure": False, "thresholds": False}
        methods.update(data.get("methods", {}))
        output = data.get("output", {})
        return cls(
            families=families,
            batch=TaskBatch.from_lengths(data["tasks"]),
            methods=methods,
            permutations=data.get("permutations", "spt_lpt"),
            replications=int(data.get("replications", 10_000)),
            seed=int(data.get("seed", 0)),
            parallelism=data.get("parallelism"),
            tolerance=float(data.get("tolerance", 1e-4)),
            t_close=data.get("t_close"),
            out_dir=output.get("dir"),
            formats=tuple(output.get("formats", ("csv", "json"))),
            raw=data,
        )

    @classmethod
    def from_path(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _perm_label(perm: Permutation) -> str:
    return "-".join(str(i) for i in perm.one_based())


def _evaluate_family(name: str, model: rates.RateModel, cfg: ExperimentConfig,
                     perms: Sequence[Permutation], threads: Optional[int]):
    rows = []
    for evaluator, enabled in (("mc", cfg.methods["mc"]),
                               ("exact", cfg.methods["exact"]),
                               ("single_failure", cfg.methods["single_failure"])):
        if not enabled:
            continue
        results = []
        for perm in perms:
            t0 = time.perf_counter()
            extra: Dict[str, object] = {}
            if evaluator == "mc":
                est = estimate_makespan(model, cfg.batch, perm,
                                        cfg.replications, cfg.seed,
                                        parallelism=threads)
                mean, se, reps = est.mean, est.std_error, est.replications
                extra = {"max_makespan": est.max_makespan,
                         "mean_restarts": est.mean_restarts}
            elif evaluator == "exact":
                res = refine_until(model, cfg.batch, perm, tol=cfg.tolerance,
                                   t_close=cfg.t_close)
                mean, se, reps = res.value, None, None
                extra = {"tail": res.tail_closure.kind, "grid_step": res.h}
            else:
                value = single_failure.expected_makespan_single_failure(
                    model, cfg.batch, perm).expected_makespan
                mean, se, reps = value, None, None
            results.append({
                "permutation": list(perm.one_based()),
                "mean": mean,
                "std_error": se,
                "replications": reps,
                "runtime_seconds": time.perf_counter() - t0,
                **extra,
            })
        best = min(results, key=lambda r: r["mean"])
        worst = max(results, key=lambda r: r["mean"])
        rows.append({
            "family": name,
            "evaluator": evaluator,
            "results": results,
            "best_permutation": best["permutation"],
            "worst_permutation": worst["permutation"],
            "best_mean": best["mean"],
            "worst_mean": worst["mean"],
            "missequencing_pct":
                100.0 * (worst["mean"] - best["mean"]) / best["mean"],
        })
    return rows


def _threshold_entry(name: str, model: rates.RateModel,
                     batch: TaskBatch) -> dict:
    rep = theory.rate_scale_threshold(model, batch)
    return {
        "family": name,
        "certified_order": rep.certified_order,
        "threshold_value": rep.threshold_value,
        "lambda_bar_cap": (None if not math.isfinite(rep.lambda_bar_cap)
                           else rep.lambda_bar_cap),
        "binding_permutation": (list(rep.binding_permutation.one_based())
                                if rep.binding_permutation else None),
        "hypothesis_failures": list(rep.hypothesis_failures),
        "heuristic": rep.heuristic,
    }


_CSV_COLUMNS = ("family", "permutation", "evaluator", "mean", "std_error",
                "replications", "runtime_seconds")


def render_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in rows:
        for res in row["results"]:
            writer.writerow([
                row["family"],
                "-".join(str(i) for i in res["permutation"]),
                row["evaluator"],
                repr(res["mean"]),
                "" if res["std_error"] is None else repr(res["std_error"]),
                "" if res["replications"] is None else res["replications"],
                repr(res["runtime_seconds"]),
            ])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None,
                   threads: Optional[int] = None) -> dict:
    """Run every requested evaluator for every family; write reports."""
    threads = threads if threads is not None else cfg.parallelism
    perms = resolve_permutations(cfg.batch, cfg.permutations)
    report = {"generated_by": "nhpp-sched 0.1.0", "config": cfg.raw, "rows": []}
    thresholds = []
    for name, model in cfg.families:
        report["rows"].extend(
            _evaluate_family(name, model, cfg, perms, threads))
        if cfg.methods.get("thresholds"):
            thresholds.append(_threshold_entry(name, model, cfg.batch))
    if thresholds:
        report["thresholds"] = thresholds
    jsonschema.validate(report, _load_schema("report.schema.json"))
    target = out_dir or cfg.out_dir
    if target:
        path = Path(target)
        path.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.formats:
            (path / "report.csv").write_text(render_csv(report["rows"]))
        if "json" in cfg.formats:
            (path / "report.json").write_text(json.dumps(report, indent=2))
    return report


# -- subcommand implementations -------------------------------------------------

def _threads_from(args) -> Optional[int]:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(_ENV_THREADS)
    return int(env) if env else None


def _cmd_simulate(args) -> int:
    model = parse_model_arg(args.model)
    batch = parse_tasks_arg(args.tasks)
    perms = resolve_permutations(batch, args.perm)
    method = THINNING if args.method == "thinning" else INVERSION
    rows = []
    for perm in perms:
        est = estimate_makespan(model, batch, perm, args.reps, args.seed,
                                parallelism=_threads_from(args), method=method)
        rows.append((perm, est))
        print(f"perm {_perm_label(perm)}: mean {est.mean:.6f}  "
              f"SE {est.std_error:.3g}  reps {est.replications}  "
              f"mean restarts {est.mean_restarts:.3f}  "
              f"max makespan {est.max_makespan:.6f}")
    if len(rows) > 1:
        best = min(rows, key=lambda r: r[1].mean)
        worst = max(rows, key=lambda r: r[1].mean)
        pct = 100.0 * (worst[1].mean - best[1].mean) / best[1].mean
        print(f"best {_perm_label(best[0])}  worst {_perm_label(worst[0])}  "
              f"mis-sequencing {pct:.3f}%")
    return 0


def _cmd_exact(args) -> int:
    model = parse_model_arg(args.model)
    batch = parse_tasks_arg(args.tasks)
    for perm in resolve_permutations(batch, args.perm):
        res = refine_until(model, batch, perm, tol=args.tol,
                           t_close=args.t_close)
        print(f"perm {_perm_label(perm)}: value {res.value:.10f}  "
              f"(h {res.h:.3g}, tail {res.tail_closure.kind} "
              f"rate {res.tail_closure.rate:.6g})")
    return 0


def _cmd_single_failure(args) -> int:
    model = parse_model_arg(args.model)
    batch = parse_tasks_arg(args.tasks)
    perms = resolve_permutations(batch, args.perm)
    base = None
    for perm in perms:
        res = single_failure.expected_makespan_single_failure(model, batch, perm)
        line = (f"perm {_perm_label(perm)}: value {res.expected_makespan:.10f}"
                f"  density {res.density_monotonicity}")
        if base is None:
            base = res.expected_makespan
        else:
            diff = single_failure.pairwise_difference(model, batch, perm)
            line += f"  identity-minus-this {diff:.10f}"
        print(line)
    return 0


def _cmd_thresholds(args) -> int:
    model = parse_model_arg(args.model)
    batch = parse_tasks_arg(args.tasks)
    entry = _threshold_entry("model", model, batch)
    if batch.n == 2:
        short, long_ = batch.lengths
        rep = theory.two_task_cutoffs(model, short, long_)
        entry["two_task_cutoff"] = {
            "certified_order": rep.certified_order,
            "threshold_value": rep.threshold_value,
            "lambda_bar_cap": rep.lambda_bar_cap,
            "hypothesis_failures": list(rep.hypothesis_failures),
        }
    print(json.dumps(entry, indent=2))
    return 0


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_path(args.config)
    if args.reps is not None:
        cfg.replications = args.reps
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tol is not None:
        cfg.tolerance = args.tol
    if args.perm is not None:
        cfg.permutations = args.perm
    if args.format is not None:
        cfg.formats = (args.format,)
    report = run_experiment(cfg, out_dir=args.out, threads=_threads_from(args))
    for row in report["rows"]:
        print(f"{row['family']} [{row['evaluator']}]: "
              f"best {'-'.join(map(str, row['best_permutation']))} "
              f"({row['best_mean']:.4f})  "
              f"worst {'-'.join(map(str, row['worst_permutation']))} "
              f"({row['worst_mean']:.4f})  "
              f"mis-sequencing {row['missequencing_pct']:.3f}%")
    return 0


def _cmd_selftest(args) -> int:
    failures = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        print(f"{'PASS' if ok else 'FAIL'}  {name}{ ('  ' + detail) if detail else ''}")
        if not ok:
            failures.append(name)

    batch = TaskBatch.from_lengths([1.0, 2.0])
    target = constant_rate_batch(1.0, batch)
    grid = refine_until(rates.constant(1.0), batch, tol=1e-5, t_close=4.0)
    check("constant-rate solver vs closed form",
          abs(grid.value - target) < 1e-4, f"{grid.value:.8f} vs {target:.8f}")

    m_ab, m_ba = zero_then_constant_two_task(1.0, 2.0, 1.0)
    z = rates.zero_then_constant(b=2.0, lam=1.0)
    va = refine_until(z, batch, spt(batch), tol=1e-5).value
    vb = refine_until(z, batch, lpt(batch), tol=1e-5).value
    check("zero-then-constant two-task closed forms",
          abs(va - m_ab) < 1e-4 and abs(vb - m_ba) < 1e-4,
          f"{va:.6f}/{vb:.6f} vs {m_ab:.6f}/{m_ba:.6f}")

    check("two-phase gap value",
          abs(two_phase_delta(1, 2, 0.5, 1.0) - 2.5316531549537708) < 1e-9)

    est = estimate_makespan(rates.zero_rate(), TaskBatch.from_lengths([2, 4]),
                            Permutation.identity(2), 10, seed=0)
    check("zero-rate simulation exact", est.mean == 6.0 and est.std_error == 0.0)

    res = single_failure.expected_makespan_single_failure(
        rates.constant(1.0), batch, spt(batch))
    alt = single_failure.makespan_by_windows(rates.constant(1.0), batch, spt(batch))
    check("single-failure two-route agreement",
          abs(res.expected_makespan - alt) < 1e-9)

    from scipy import stats
    from .sampling import first_arrivals
    a = first_arrivals(rates.constant(0.7), 20_000, seed=5, method=INVERSION)
    b = first_arrivals(rates.constant(0.7), 20_000, seed=6, method=THINNING)
    ks = stats.ks_2samp(a, b).statistic
    check("sampler two-method agreement", ks < 0.02, f"KS {ks:.4f}")

    print(f"{'OK' if not failures else 'FAILED'}: "
          f"{6 - len(failures)}/6 checks passed")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhpp-sched",
        description="Sequencing analysis for a machine disrupted by a "
                    "non-homogeneous Poisson process (preempt-repeat).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, tasks=True):
        p.add_argument("--model", required=tasks,
                       help="inline model, e.g. constant:0.4 or "
                            "linear_decreasing:lam=0.4,a=0.03,lam0=0.1")
        if tasks:
            p.add_argument("--tasks", required=True,
                           help="comma-separated task lengths, e.g. 2,4,6,8")
        p.add_argument("--perm", default="spt_lpt",
                       help="spt | lpt | spt_lpt | all | explicit like 2,1,3")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default ${_ENV_THREADS} or 1)")

    p = sub.add_parser("simulate", help="Monte Carlo makespan estimate")
    add_common(p)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--method", choices=["inversion", "thinning"],
                   default="inversion")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("exact", help="integral-equation expected makespan")
    add_common(p)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--t-close", type=float, default=None, dest="t_close")
    p.set_defaults(fn=_cmd_exact)

    p = sub.add_parser("single-failure",
                       help="at-most-one-failure expected makespans")
    add_common(p)
    p.set_defaults(fn=_cmd_single_failure)

    p = sub.add_parser("thresholds", help="certification reports")
    add_common(p)
    p.set_defaults(fn=_cmd_thresholds)

    p = sub.add_parser("sweep", help="config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--perm", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("selftest", help="fast oracle battery")
    p.set_defaults(fn=_cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (InvalidModelError, jsonschema.ValidationError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
