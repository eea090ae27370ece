"""Command line entry point ``spde-mkv``.

Result bodies (CSV/JSON) are byte-identical for identical config and seed;
wall-clock data goes to ``<out>.provenance.json`` unless ``--timings`` asks
for it in the CSV.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (exponent_consistency, factorization_integral, growth_probe,
                         lipschitz_probe, trace_sum)
from .errors import ConfigError, DivergenceError, NonConvergenceError
from .harness import config as config_mod
from .harness import experiments
from .particle_system import empirical_mean_table
from .spectral import dumps
from .transport import EmpiricalMeasure, PathCloud, wasserstein_p, wasserstein_path

log = logging.getLogger("spde_mkv")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_NONCONVERGED = 0, 2, 3, 4


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _sidecar(out: str | None, suffix: str, text: str):
    if out is not None:
        Path(str(out) + suffix).write_text(text, encoding="utf-8")


def _load_cfg(args):
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = config_mod.load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _finite_or_tag(v):
    if v is None or np.isfinite(v):
        return v
    return None if np.isnan(v) else ("inf" if v > 0 else "-inf")


def cmd_check(args):
    cfg = _load_cfg(args)
    doc = {"seed": cfg.seed, "config_hash": cfg.config_hash(), "K": cfg.K,
           "exponents": {"alpha": cfg.alpha, "p_prime": cfg.p_prime, "p_circ": cfg.p_circ,
                         "p_prime_gt_inv_alpha": exponent_consistency(cfg.alpha, cfg.p_prime)}}
    if np.all(cfg.model.eigenvalues > 0):
        ts = trace_sum(cfg.model, cfg.delta)
        doc["trace_sum"] = {"delta": cfg.delta, "partial_sum": ts.partial_sum,
                            "tail_estimate": _finite_or_tag(ts.tail_estimate), "verdict": ts.verdict,
                            "fitted_exponent": ts.exponent}
    else:
        doc["trace_sum"] = {"delta": cfg.delta, "verdict": "inconclusive",
                            "reason": "zero eigenvalue present"}
    fi = factorization_integral(cfg.model, cfg.coefficients.b, cfg.alpha, cfg.T)
    doc["factorization_integral"] = {"alpha": cfg.alpha, "T": cfg.T, "value": fi.value,
                                     "error": fi.error, "finite": fi.finite}
    lip = lipschitz_probe(cfg.coefficients, cfg.probe_samples, cfg.probe_region, cfg.p,
                          seed=cfg.seed)
    gro = growth_probe(cfg.coefficients, cfg.probe_samples, cfg.probe_region, cfg.p_prime,
                       seed=cfg.seed)
    doc["lipschitz_probe"] = {"mu_ratio_max": lip.mu_ratio_max,
                              "sigma_ratio_max": lip.sigma_ratio_max,
                              "declared": cfg.coefficients.declared_lipschitz(),
                              "samples": lip.samples, "skipped": lip.skipped}
    doc["growth_probe"] = {"estimate": gro.estimate,
                           "declared": cfg.coefficients.declared_growth(),
                           "samples": gro.samples}
    _emit(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", args.out)


def cmd_simulate(args):
    cfg = _load_cfg(args)
    N = cfg.system_size
    _, _, cloud = experiments.run_system(cfg, N, "simulate")
    _emit(dumps(cloud.to_json()) + "\n", args.out)
    table = empirical_mean_table(cloud, cfg.p)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"mean_{k + 1}" for k in range(cfg.K)] + ["p_moment"])
    for row in table:
        w.writerow([repr(float(v)) for v in row])
    _sidecar(args.out, ".means.csv", buf.getvalue())


def cmd_mkv(args):
    cfg = _load_cfg(args)
    result = experiments.reference_law(cfg, strict=False)
    _emit(dumps(result.cloud.to_json()) + "\n", args.out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter", "residual"] + (["wallclock_ms"] if args.timings else []))
    for j, r in enumerate(result.residuals, start=1):
        row = [j, repr(float(r))]
        if args.timings:
            row.append(f"{result.wallclock_ms[j - 1]:.3f}")
        w.writerow(row)
    _sidecar(args.out, ".residuals.csv", buf.getvalue())
    if not result.converged:
        raise NonConvergenceError(f"no convergence in {result.iterations} iterations "
                                  f"(residual {result.residual:.3e})")


def _report_cmd(fn):
    def run(args):
        cfg = _load_cfg(args)
        report = fn(cfg)
        _emit(report.to_csv(timings=args.timings), args.out)
        _sidecar(args.out, ".provenance.json", report.provenance_json() + "\n")
    return run


def _read_cloud(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "paths" in doc:
        return PathCloud.from_json(doc)
    if "atoms" in doc:
        return EmpiricalMeasure.from_json(doc)
    raise ConfigError(f"{path}: expected a path cloud or a state cloud")


def cmd_wasserstein(args):
    files = list(args.files)
    p = args.p
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        base = Path(args.config).parent
        files = files or [str(base / doc["a"]), str(base / doc["b"])]
        p = p if p is not None else float(doc.get("p", 2.0))
    if len(files) != 2:
        raise ConfigError("wasserstein needs exactly two cloud files")
    p = 2.0 if p is None else p
    try:
        a, b = (_read_cloud(f) for f in files)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read cloud: {exc}") from exc
    if type(a) is not type(b):
        raise ConfigError("cannot compare a path cloud with a state cloud")
    try:
        d = wasserstein_path(a, b, p) if isinstance(a, PathCloud) else wasserstein_p(a, b, p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(repr(float(d)) + "\n", args.out)


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "mkv": cmd_mkv,
    "chaos": _report_cmd(experiments.chaos_experiment),
    "coupled-chaos": _report_cmd(experiments.coupled_chaos),
    "chaoticity": _report_cmd(experiments.chaoticity_test),
    "moments": _report_cmd(experiments.moment_diagnostic),
    "wasserstein": cmd_wasserstein,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spde-mkv", description="Simulate McKean-Vlasov SPDEs on a spectral truncation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--out", help="result file; sidecar files share this prefix")
        sp.add_argument("--timings", action="store_true",
                        help="include wall-clock columns in CSV output")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "wasserstein":
            sp.add_argument("files", nargs="*", help="two cloud JSON files")
            sp.add_argument("--p", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except DivergenceError as exc:
        log.error("numerical divergence: %s", exc)
        return EXIT_DIVERGED
    except NonConvergenceError as exc:
        log.error("fixed point not reached: %s", exc)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
