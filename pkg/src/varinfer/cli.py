"""Command-line interface.

Exit codes
----------
0  success
1  unexpected internal error
2  configuration or input parse error
3  unstable model (spectral radius >= 1)
4  degenerate curvature estimate mu_hat
5  pilot solver did not converge (set inference.allow_unconverged to override)
6  experiment: more than 20% of replications failed

stdout carries only the manifest path; diagnostics go to stderr.
"""
import argparse
from dataclasses import fields
from importlib import resources
import json
import os
from pathlib import Path
import sys
import time

import jsonschema
import numpy as np

from . import __version__, experiments, io
from .errors import ConfigError, DegenerateMu, NotConverged, Unstable, VarInferError
from .model import InnovationSpec, TransitionMatrix, companion_form, simulate, spectral_radius
from .pipeline import InferenceConfig, fit

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_MU, EXIT_PILOT, EXIT_FAILURES = 0, 1, 2, 3, 4, 5, 6
MAX_FAILURE_FRACTION = 0.2


def load_schema():
    return json.loads(resources.files("varinfer").joinpath("config.schema.json").read_text())


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: field {where}: {e.message}")
    return cfg


def inference_config(cfg):
    sec = dict(cfg.get("inference", {}))
    known = {f.name for f in fields(InferenceConfig)}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"inference: unknown keys {sorted(unknown)}")
    try:
        return InferenceConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"inference: {exc}") from None


def innovation_spec(sec):
    sec = dict(sec or {})
    try:
        return InnovationSpec(
            family=sec.get("family", "gaussian"),
            df=sec.get("df"),
            scale=sec.get("scale", 1.0),
            standardize=sec.get("standardize", False),
        )
    except ValueError as exc:
        raise ConfigError(f"model.innovation: {exc}") from None


def design_matrix(model_sec, seed):
    design = model_sec.get("design")
    if design is None:
        raise ConfigError("model.design: required")
    kind = design["kind"]
    if kind == "matrix":
        if "A" not in design:
            raise ConfigError("model.design.A: required for kind 'matrix'")
        A = np.asarray(design["A"], dtype=float)
        if A.ndim == 3:
            A = companion_form(list(A))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("model.design.A: must be a square matrix")
        return A, {"kind": "matrix"}
    p = design.get("p")
    if p is None:
        raise ConfigError(f"model.design.p: required for kind {kind!r}")
    s = design.get("s", max(1, int(np.floor(np.log(p)))))
    try:
        if kind == "banded":
            lam = design.get("lambda", 0.5)
            return experiments.banded_design(p, s, lam), {"kind": kind, "p": p, "s": s, "lambda": lam}
        return experiments.block_diagonal_design(p, s, seed), {"kind": kind, "p": p, "s": s, "seed": seed}
    except ValueError as exc:
        raise ConfigError(f"model.design: {exc}") from None


class Run:
    """Tracks outputs of one command and writes its manifest."""

    def __init__(self, command, cfg, seed, out_dir):
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.start = time.perf_counter()

    def path(self, name):
        # manifest lists names relative to the output directory
        self.outputs.append(name)
        return self.out / name

    def finish(self, extra=None):
        manifest = {
            "command": self.command,
            "config_digest": io.digest(self.cfg),
            "master_seed": self.seed,
            "artifact_version": __version__,
            "outputs": sorted(self.outputs),
            "wall_time": time.perf_counter() - self.start,
        }
        if extra:
            manifest.update(extra)
        path = self.out / "manifest.json"
        io.write_json(path, manifest)
        return path


def _seed(args, cfg):
    if args.seed is not None:
        cfg["seed"] = args.seed
    return int(cfg.get("seed", 0))


def cmd_simulate(args):
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    model = cfg.get("model")
    if not model or "n" not in model:
        raise ConfigError("model.n: required")
    A, provenance = design_matrix(model, seed)
    rho = spectral_radius(A)
    if rho >= 1:
        raise Unstable(rho)
    innov = innovation_spec(model.get("innovation"))
    sample = simulate(A, innov, model["n"], model.get("burn_in"), seed)
    run = Run("simulate", cfg, seed, args.out_dir)
    io.write_sample(run.path("sample.csv"), sample)
    tm = TransitionMatrix.from_array(A, model.get("decay_threshold", 0.5))
    io.write_json(run.path("sample.json"), {
        "seed": seed,
        "n": sample.n,
        "p": sample.p,
        "burn_in": sample.burn_in,
        "innovation": innov.to_dict(),
        "design": provenance,
        "A": A,
        "spectral_radius": tm.spectral_radius,
        "decay_index": tm.decay_index,
        "decay_gamma": tm.decay_gamma,
        "decay_threshold": tm.decay_threshold,
    })
    io.write_matrix(run.path("A.csv"), A)
    return run.finish()


def _fit(args, cfg):
    sample = io.read_sample(args.data)
    inf = inference_config(cfg)
    result = fit(sample, inf)
    return sample, inf, result


def _fit_outputs(run, result):
    io.write_matrix(run.path("beta_check.csv"), result.estimate.beta_check)
    io.write_matrix(run.path("beta_hat.csv"), result.pilot.beta_hat)
    io.write_matrix(run.path("omega.csv"), result.precision.omega)
    io.write_json(run.path("fit.json"), {
        "tuning": result.tuning,
        "pilot": result.pilot.to_dict(),
        "precision": result.precision.to_dict(),
        "estimate": result.estimate.to_dict(),
        "psd_clip_magnitude": result.covariance.psd_clip_magnitude,
    })


def cmd_fit(args):
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    _, _, result = _fit(args, cfg)
    run = Run("fit", cfg, seed, args.out_dir)
    _fit_outputs(run, result)
    return run.finish()


def cmd_test(args):
    from .bootstrap import simultaneous_test

    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    sample, inf, result = _fit(args, cfg)
    beta0 = io.read_matrix(args.beta0)
    if beta0.shape != (sample.p, sample.p):
        raise ConfigError(f"{args.beta0}: expected a {sample.p}x{sample.p} matrix, got {beta0.shape}")
    report = simultaneous_test(result.estimate, beta0, result.covariance, inf.draws, inf.alpha, seed)
    run = Run("test", cfg, seed, args.out_dir)
    io.write_json(run.path("report.json"), {"report": report.to_dict(), "tuning": result.tuning})
    _fit_outputs(run, result)
    if cfg.get("output", {}).get("write_draws"):
        io.write_matrix(run.path("w_draws.csv"), report.w_draws[:, None], header=["w"])
    return run.finish()


def experiment_configs(cfg, seed):
    sec = cfg.get("experiment", {})
    inf = inference_config(cfg)
    configs = []
    for design in sec.get("designs", ["banded", "block_diagonal"]):
        for df in sec.get("dfs", [5, 10]):
            configs.append(experiments.ExperimentConfig(
                design=design,
                design_lambda=sec.get("design_lambda", 0.5),
                block_size=sec.get("block_size"),
                n=sec.get("n", 30),
                p=sec.get("p", 10),
                innovation=InnovationSpec("student_t", df=float(df)),
                replications=sec.get("replications", 100),
                bootstrap_draws=sec.get("bootstrap_draws", 1000),
                alpha=sec.get("alpha", 0.05),
                ci_alpha=sec.get("ci_alpha"),
                master_seed=seed,
                power_delta=sec.get("power_delta", 0.0),
                inference=inf,
            ).validate())
    return configs


def write_replications(path, records):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "seed", "statistic", "c_alpha", "reject", "c_ci", "covered", "failed", "stage", "error"])
        for r in records:
            w.writerow([r.rep_index, r.seed, io.fmt(r.statistic), io.fmt(r.c_alpha), int(r.reject),
                        io.fmt(r.c_ci), int(r.covered), int(r.failed), r.stage, r.error])


def write_qq(path, pairs):
    io.write_matrix(path, np.array(pairs), header=["stat_quantile", "w_quantile"])


def cmd_experiment(args):
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    configs = experiment_configs(cfg, seed)
    workers = args.workers or cfg.get("workers") or os.cpu_count() or 1
    write_draws = cfg.get("experiment", {}).get("write_draws", True)
    run = Run("experiment", cfg, seed, args.out_dir)
    results, worst = [], 0.0
    for ec in configs:
        recs = experiments.run_experiment(ec, workers)
        results.append(recs)
        ok = [r for r in recs if not r.failed]
        failed = len(recs) - len(ok)
        worst = max(worst, failed / len(recs))
        for r in recs:
            if r.failed:
                print(f"[{ec.label}] replication {r.rep_index} failed in {r.stage}: {r.error}", file=sys.stderr)
        write_replications(run.path(f"replications_{ec.label}.csv"), recs)
        if ok:
            pool = np.concatenate([r.w_draws for r in ok])
            write_qq(run.path(f"qq_{ec.label}.csv"), experiments.qq_data([r.statistic for r in ok], pool))
            if write_draws:
                io.write_matrix(run.path(f"w_{ec.label}.csv"), np.vstack([r.w_draws for r in ok]))
    rows = experiments.size_coverage_table(configs, results=results)
    experiments.write_table(rows, run.path("size_table.csv"))
    io.write_json(run.path("experiment.json"), {
        "configs": [c.to_dict() for c in configs],
        "seeds": {c.label: [r.seed for r in res] for c, res in zip(configs, results)},
        "summary": rows,
    })
    manifest = run.finish()
    if worst > MAX_FAILURE_FRACTION:
        print(f"failure fraction {worst:.2f} exceeds {MAX_FAILURE_FRACTION}", file=sys.stderr)
        return manifest, EXIT_FAILURES
    return manifest


def read_statistics(path):
    """Successful-replication statistics from a replications CSV, or the first column of a plain CSV."""
    import csv

    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    col = "statistic" if "statistic" in rows[0] else next(iter(rows[0]))
    out = []
    for i, row in enumerate(rows, start=2):
        if row.get("failed", "0") not in ("0", ""):
            continue
        try:
            out.append(float(row[col]))
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: row {i}, column {col}: not a number: {row[col]!r}") from None
    return np.array(out)


def _file_digest(path):
    import hashlib

    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_qq(args):
    statistics = read_statistics(args.statistics)
    pool = io.read_matrix(args.draws).ravel()
    # inputs are identified by content so the digest does not depend on where they live
    cfg = {"statistics_sha256": _file_digest(args.statistics), "draws_sha256": _file_digest(args.draws)}
    run = Run("qq", cfg, None, args.out_dir)
    write_qq(run.path(args.name), experiments.qq_data(statistics, pool))
    return run.finish()


def build_parser():
    ap = argparse.ArgumentParser(prog="varinfer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--workers", type=int, default=None, help="parallel workers (default: logical cores)")
        p.add_argument("--out-dir", default=".", help="output directory")

    p = sub.add_parser("simulate", help="simulate a VAR(1) path")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("fit", help="fit the de-biased estimator")
    common(p)
    p.add_argument("--data", required=True, help="sample CSV (t,x1,...,xp)")
    p.set_defaults(func=cmd_fit)
    p = sub.add_parser("test", help="simultaneous test of H0: A = beta0")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--beta0", required=True, help="hypothesized matrix CSV (p rows, no header)")
    p.set_defaults(func=cmd_test)
    p = sub.add_parser("experiment", help="Monte Carlo size/qq study")
    common(p)
    p.set_defaults(func=cmd_experiment)
    p = sub.add_parser("qq", help="qq pairs from replication statistics and pooled draws")
    common(p, config=False)
    p.add_argument("--statistics", required=True, help="replications CSV or one-column CSV with header")
    p.add_argument("--draws", required=True, help="CSV of bootstrap draws (no header)")
    p.add_argument("--name", default="qq.csv")
    p.set_defaults(func=cmd_qq)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        out = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unstable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except DegenerateMu as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MU
    except NotConverged as exc:
        print(f"error: {exc}; set inference.allow_unconverged to accept the best iterate", file=sys.stderr)
        return EXIT_PILOT
    except VarInferError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    code = EXIT_OK
    if isinstance(out, tuple):
        out, code = out
    print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
