"""Command-line interface.

``drglm estimate`` fits the propensity and outcome models on a CSV file and
prints one JSON record per estimator. ``drglm simulate`` runs a scenario
grid from a TOML file and prints an aligned table (optionally writing CSV).

Exit codes: 0 success, 1 data, formula or fitting error, 2 configuration
or usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, DrglmError
from .estimators import PreparedData, aipw_prepared, iptw_glm_prepared
from .families import make_family
from .formula import drop_variable, parse
from .inference import MODES, attach_bootstrap, attach_influence, bootstrap_indices, default_threads
from .report import summaries_to_csv, summaries_to_text
from .simconfig import bundled_config_path, bundled_configs, load_config
from .simlab import run_scenario
from .tabular import CATEGORICAL, read_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2

log = logging.getLogger("drglm")


@dataclass(frozen=True)
class RunConfig:
    """Validated command-line options for one run."""

    command: str
    path: Path
    outcome_formula: str | None = None
    ps_formula: str | None = None
    family: str = "gaussian"
    link: str | None = None
    estimators: tuple = ("iptw_glm",)
    inference: str = "none"
    B: int = 1000
    if_mode: str = "supplement_compatible"
    seed: int | None = 0
    out: Path | None = None
    threads: int = 1
    clamp: float | None = None
    aipw_mode: str = "stratified"
    categorical: tuple = ()
    replicates: int | None = None
    n: int | None = None

    def banner(self) -> str:
        seed = "from-config" if self.seed is None else self.seed
        parts = [f"drglm {__version__} {self.command}", f"seed={seed}"]
        if self.command == "estimate":
            fam = make_family(self.family, self.link)
            parts += [
                f"data={self.path}",
                f"outcome_formula={self.outcome_formula!r}",
                f"ps_formula={self.ps_formula!r}",
                f"family={fam.name}",
                f"link={fam.link_name}",
                f"estimator={','.join(self.estimators)}",
                f"aipw_mode={self.aipw_mode}" if "aipw" in self.estimators else None,
                f"inference={self._inference_text()}",
                f"clamp={self.clamp}" if self.clamp is not None else None,
            ]
        else:
            parts += [f"config={self.path}"]
            if self.replicates is not None:
                parts.append(f"replicates={self.replicates}")
            if self.n is not None:
                parts.append(f"n={self.n}")
        parts.append(f"threads={self.threads}")
        return "# " + " ".join(p for p in parts if p)

    def _inference_text(self):
        if self.inference == "bootstrap":
            return f"boot:{self.B}"
        if self.inference == "influence":
            return f"if:{self.if_mode}"
        return "none"


def _parse_inference(text):
    text = text.strip()
    if text == "none":
        return "none", {}
    kind, _, arg = text.partition(":")
    if kind == "boot":
        try:
            B = int(arg) if arg else 1000
        except ValueError:
            raise ConfigError(f"--inference boot:B needs an integer B, got {arg!r}") from None
        if B < 2:
            raise ConfigError("--inference boot:B needs B >= 2")
        return "bootstrap", {"B": B}
    if kind == "if":
        mode = arg or "supplement_compatible"
        if mode not in MODES:
            raise ConfigError(f"--inference if:MODE must use one of {MODES}, got {mode!r}")
        return "influence", {"if_mode": mode}
    raise ConfigError(f"--inference must be boot:B, if:MODE or none, got {text!r}")


_ESTIMATOR_FLAGS = {"iptw-glm": ("iptw_glm",), "aipw": ("aipw",), "both": ("iptw_glm", "aipw")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drglm",
        description="Doubly robust ATE estimation with propensity-weighted canonical-link GLMs.",
    )
    parser.add_argument("--version", action="version", version=f"drglm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the ATE on a CSV file")
    est.add_argument("--data", required=True, help="CSV file with a header row")
    est.add_argument("--outcome-formula", required=True, help="e.g. 'y ~ x * (a + b)'")
    est.add_argument("--ps-formula", required=True, help="e.g. 'x ~ a + b'; its response is the exposure")
    est.add_argument("--family", default="gaussian")
    est.add_argument("--link", default=None, help="defaults to the family's canonical link")
    est.add_argument("--estimator", choices=sorted(_ESTIMATOR_FLAGS), default="iptw-glm")
    est.add_argument("--aipw-mode", choices=("stratified", "shared"), default="stratified")
    est.add_argument("--inference", default="none", help="boot:B, if:MODE or none")
    est.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    est.add_argument("--clamp", type=float, default=None,
                     help="truncate propensities to [c, 1-c] before weighting")
    est.add_argument("--categorical", action="append", default=[],
                     help="treat this column as categorical (repeatable)")
    est.add_argument("--out", default=None, help="write the JSON records to this file")
    est.add_argument("--threads", type=int, default=None)

    sim = sub.add_parser("simulate", help="run a simulation grid from a TOML config")
    sim.add_argument("--config", required=True,
                     help=f"TOML file, or a bundled config name ({', '.join(bundled_configs())})")
    sim.add_argument("--replicates", type=int, default=None, help="override every scenario")
    sim.add_argument("--n", type=int, default=None, help="override every scenario's sample size")
    sim.add_argument("--seed", type=int, default=None, help="override every scenario's seed")
    sim.add_argument("--out", default=None, help="write the per-scenario CSV here")
    sim.add_argument("--threads", type=int, default=None)
    return parser


def config_from_args(args) -> RunConfig:
    threads = default_threads() if args.threads is None else args.threads
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    out = Path(args.out) if args.out else None
    if args.command == "estimate":
        path = Path(args.data)
        if not path.is_file():
            raise ConfigError(f"--data file {path} does not exist")
        try:
            make_family(args.family, args.link)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        kind, extra = _parse_inference(args.inference)
        if args.clamp is not None and not 0 < args.clamp < 0.5:
            raise ConfigError("--clamp must lie in (0, 0.5)")
        return RunConfig(
            "estimate", path, args.outcome_formula, args.ps_formula, args.family, args.link,
            _ESTIMATOR_FLAGS[args.estimator], kind, seed=args.seed, out=out, threads=threads,
            clamp=args.clamp, aipw_mode=args.aipw_mode, categorical=tuple(args.categorical),
            **extra,
        )
    path = Path(args.config)
    if not path.is_file():
        path = bundled_config_path(args.config)
    for name in ("replicates", "n"):
        value = getattr(args, name)
        if value is not None and value < (1 if name == "replicates" else 10):
            raise ConfigError(f"--{name} is too small")
    return RunConfig("simulate", path, seed=args.seed, out=out, threads=threads, replicates=args.replicates, n=args.n,
                     inference="config")


def cmd_estimate(cfg: RunConfig, stdout=None):
    """Run the estimators; returns ``(exit_code, records)``."""
    stdout = stdout or sys.stdout
    ds = read_csv(cfg.path, {c: CATEGORICAL for c in cfg.categorical})
    fam = make_family(cfg.family, cfg.link)
    out_ast, ps_ast = parse(cfg.outcome_formula), parse(cfg.ps_formula)
    records = []

    if "iptw_glm" in cfg.estimators:
        prep = PreparedData.build(ds, out_ast, ps_ast)
        est, bundle = iptw_glm_prepared(prep, fam, cfg.clamp)
        if cfg.inference == "influence":
            est = attach_influence(est, bundle, cfg.if_mode)
        elif cfg.inference == "bootstrap":
            res = bootstrap_indices(
                prep.n, lambda idx: iptw_glm_prepared(prep.take(idx), fam, cfg.clamp)[0].ate,
                cfg.B, cfg.seed, threads=cfg.threads,
            )
            est = attach_bootstrap(est, res)
        records.append(est.to_record())

    if "aipw" in cfg.estimators:
        a_ast = out_ast
        if cfg.aipw_mode == "stratified":
            a_ast = drop_variable(out_ast, ps_ast.response)
        prep_a = PreparedData.build(ds, a_ast, ps_ast)
        est = aipw_prepared(prep_a, fam, cfg.aipw_mode, cfg.clamp)
        if cfg.inference == "bootstrap":
            res = bootstrap_indices(
                prep_a.n, lambda idx: aipw_prepared(prep_a.take(idx), fam, cfg.aipw_mode, cfg.clamp).ate,
                cfg.B, cfg.seed, threads=cfg.threads,
            )
            est = attach_bootstrap(est, res)
        elif cfg.inference == "influence":
            est = replace(est, extra={**est.extra, "note": "influence-function SE is only implemented for iptw_glm"})
        rec = est.to_record()
        rec["outcome_formula"] = str(a_ast)
        records.append(rec)

    text = json.dumps(records, indent=2)
    print(text, file=stdout)
    if cfg.out is not None:
        cfg.out.write_text(text + "\n")
    return EXIT_OK, records


def cmd_simulate(cfg: RunConfig, stdout=None):
    """Run every scenario of the config; returns ``(exit_code, summaries)``."""
    stdout = stdout or sys.stdout
    specs = load_config(cfg.path)
    changes = {}
    if cfg.replicates is not None:
        changes["replicates"] = cfg.replicates
    if cfg.n is not None:
        changes["n"] = cfg.n
    if cfg.seed is not None:
        changes["seed"] = cfg.seed
    specs = [replace(s, **changes) for s in specs]
    summaries = []
    for spec in specs:
        print(f"# scenario: dgp={spec.dgp} family={spec.analysis_family.name} "
              f"link={spec.analysis_family.link_name} cell={spec.cell!r} n={spec.n} "
              f"replicates={spec.replicates} seed={spec.seed} estimators={','.join(spec.estimators)} "
              f"inference={','.join(spec.inference) or 'none'} B={spec.B} if_mode={spec.if_mode} "
              f"formulas={spec.formulas()}", file=sys.stderr)
        summaries.append(run_scenario(spec, threads=cfg.threads))
    print(summaries_to_text(summaries), file=stdout)
    if cfg.out is not None:
        summaries_to_csv(summaries, cfg.out)
    return EXIT_OK, summaries


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        print(cfg.banner(), file=sys.stderr)
        if cfg.command == "estimate":
            code, _ = cmd_estimate(cfg)
        else:
            code, _ = cmd_simulate(cfg)
        return code
    except ConfigError as exc:
        print(f"drglm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DrglmError, OSError) as exc:
        print(f"drglm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
