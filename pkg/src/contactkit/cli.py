"""``contactkit`` command line: estimate, simulate, compare, bootstrap.

Every command reads one JSON config (``--config``) with optional
``--override key=value`` pairs on top; flag values win. Relative paths in
a config resolve against the config file's directory. The effective config
is echoed into ``manifest.json`` in the output directory, and that manifest
can itself be passed back as ``--config`` to reproduce the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import date
from pathlib import Path

from . import __version__
from .analysis import MixingMatrices, build_mixing_matrices
from .burden import BurdenRisks, apply_burden
from .diary import read_diaries, validate_and_filter
from .exceptions import ContactkitError, ConvergenceError, IntegratorInstabilityError
from .model import AgeStructuredSIR
from .population import PopulationPyramid
from .reports import (atomic_write, bootstrap_table, burden_rows, dumps_json, locations_table,
                      province_tests_table, relations_table, render_csv, same_group_table,
                      summary_table, trajectory_table)
from .stats import bootstrap_statistics
from .transmission import FOI_SUMMATIONS, MODES, THRESHOLD_REACHED, infections_by_age_at_stop

logger = logging.getLogger("contactkit")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_THRESHOLD = 3
EXIT_NUMERICAL = 4

PATH_KEYS = ("diary_path", "matrices_path", "pyramid_path", "risks_path", "output_dir")

DEFAULTS = {
    "diary_path": None,
    "matrices_path": None,
    "pyramid_path": None,
    "risks_path": None,
    "output_dir": "contactkit-out",
    "target_r0": 1.3,
    "gamma": 1 / 5.1,
    "population_total": 2e7,
    "stop_cumulative": 1000.0,
    "seeds": 10.0,
    "dt": 0.05,
    "t_max": 5000.0,
    "record_every": 1,
    "foi_summation": "distinct_groups",
    "model": "contacts_and_duration",
    "beta": None,
    "bootstrap_replicates": 1000,
    "bootstrap_statistic": "mean",
    "master_seed": None,
    "study_window": ["2020-03-03", "2020-03-23"],
    "excluded_provinces": ["Hubei"],
    "require_mainland": True,
    "min_province_size": 10,
}


class ConfigError(ContactkitError, ValueError):
    pass


class ThresholdNotReached(ContactkitError):
    pass


def _parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path, overrides=()) -> dict:
    """Merge defaults, the config file and overrides into the effective config."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    if "config" in payload and "command" in payload:
        payload = payload["config"]

    base = path.resolve().parent
    cfg = dict(DEFAULTS)
    for source in (payload, dict(_parse_override(o) for o in overrides)):
        unknown = sorted(set(source) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        for key, value in source.items():
            if key in PATH_KEYS and value is not None:
                value = str((base / value).resolve()) if source is payload else str(Path(value).resolve())
            cfg[key] = value
    if cfg["master_seed"] is None:
        env = os.environ.get("CONTACTKIT_SEED")
        cfg["master_seed"] = int(env) if env else 0
    _check_config(cfg)
    return cfg


def _check_config(cfg: dict) -> None:
    for key in ("target_r0", "gamma", "population_total", "seeds", "dt", "t_max"):
        try:
            value = float(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from None
        if not value > 0:
            raise ConfigError(f"{key} must be positive, got {value}")
        cfg[key] = value
    if cfg["stop_cumulative"] is not None:
        cfg["stop_cumulative"] = float(cfg["stop_cumulative"])
        if not 0 < cfg["stop_cumulative"] < cfg["population_total"]:
            raise ConfigError("stop_cumulative must lie between 0 and population_total")
    if cfg["beta"] is not None:
        cfg["beta"] = float(cfg["beta"])
        if cfg["beta"] < 0:
            raise ConfigError("beta must be nonnegative")
    for key in ("bootstrap_replicates", "master_seed", "min_province_size", "record_every"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < 0:
            raise ConfigError(f"{key} must be a nonnegative integer, got {cfg[key]!r}")
    if cfg["bootstrap_replicates"] < 1 or cfg["record_every"] < 1:
        raise ConfigError("bootstrap_replicates and record_every must be at least 1")
    if cfg["foi_summation"] not in FOI_SUMMATIONS:
        raise ConfigError(f"foi_summation must be one of {FOI_SUMMATIONS}")
    if cfg["model"] not in MODES:
        raise ConfigError(f"model must be one of {MODES}")
    try:
        start, end = (date.fromisoformat(d) for d in cfg["study_window"])
    except (TypeError, ValueError):
        raise ConfigError(f"study_window must be two ISO dates, got {cfg['study_window']!r}") from None
    if end < start:
        raise ConfigError("study_window ends before it starts")


def _require_one_source(cfg: dict) -> None:
    if (cfg["diary_path"] is None) == (cfg["matrices_path"] is None):
        raise ConfigError("exactly one of diary_path and matrices_path must be set")


def _load_survey(cfg: dict):
    if cfg["diary_path"] is None:
        raise ConfigError("diary_path is required for this command")
    if cfg["matrices_path"] is not None:
        raise ConfigError("exactly one of diary_path and matrices_path must be set")
    path = Path(cfg["diary_path"])
    if not path.is_file():
        raise ConfigError(f"diary file not found: {path}")
    raw = read_diaries(path)
    start, end = (date.fromisoformat(d) for d in cfg["study_window"])
    survey = validate_and_filter(
        raw, (start, end), cfg["excluded_provinces"],
        require_mainland=cfg["require_mainland"], min_province_size=cfg["min_province_size"],
    )
    if len(survey) == 0:
        raise ConfigError(f"no participants left after filtering {path}")
    return survey


def _load_pyramid(cfg: dict) -> PopulationPyramid:
    if cfg["pyramid_path"] is None:
        raise ConfigError("pyramid_path is required")
    path = Path(cfg["pyramid_path"])
    if not path.is_file():
        raise ConfigError(f"population pyramid file not found: {path}")
    return PopulationPyramid.from_csv(path)


def _load_matrices(cfg: dict) -> MixingMatrices:
    _require_one_source(cfg)
    if cfg["matrices_path"] is not None:
        path = Path(cfg["matrices_path"])
        if not path.is_file():
            raise ConfigError(f"matrices file not found: {path}")
        return MixingMatrices.from_json(path.read_text(encoding="utf-8"))
    return build_mixing_matrices(_load_survey(cfg))


def _load_risks(cfg: dict) -> BurdenRisks:
    if cfg["risks_path"] is None:
        return BurdenRisks()
    path = Path(cfg["risks_path"])
    if not path.is_file():
        raise ConfigError(f"risk table not found: {path}")
    return BurdenRisks.from_json(path.read_text(encoding="utf-8"))


def _manifest(command: str, cfg: dict, outputs, **extra) -> str:
    return dumps_json({"command": command, "tool_version": __version__, "config": cfg,
                       "outputs": sorted(outputs), **extra})


def _model(cfg: dict, mode: str, beta=None) -> AgeStructuredSIR:
    return AgeStructuredSIR(
        mode=mode, target_r0=cfg["target_r0"], gamma=cfg["gamma"], beta=beta,
        seeds=cfg["seeds"], stop_cumulative=cfg["stop_cumulative"], dt=cfg["dt"],
        t_max=cfg["t_max"], foi_summation=cfg["foi_summation"],
        population_total=cfg["population_total"],
    )


# -- commands -------------------------------------------------------------------

def cmd_estimate(cfg: dict, dump_ngm: bool = False) -> int:
    survey = _load_survey(cfg)
    pyramid = _load_pyramid(cfg)
    out = Path(cfg["output_dir"])
    files = {
        "summary.csv": summary_table(survey, pyramid),
        "matrices.json": build_mixing_matrices(survey).to_json(),
        "relations.csv": relations_table(survey, pyramid),
        "locations.csv": locations_table(survey, pyramid),
        "same_group.csv": same_group_table(survey),
        "bootstrap.csv": bootstrap_table(bootstrap_statistics(
            survey, pyramid, cfg["bootstrap_replicates"], cfg["master_seed"],
            cfg["bootstrap_statistic"])),
        "province_tests.csv": province_tests_table(survey),
    }
    for name, text in files.items():
        atomic_write(out / name, text)
    atomic_write(out / "manifest.json", _manifest(
        "estimate", cfg, files, n_participants=len(survey), n_contacts=len(survey.contacts),
        exclusion_report=survey.exclusion_report))
    return EXIT_OK


def cmd_bootstrap(cfg: dict, dump_ngm: bool = False) -> int:
    survey = _load_survey(cfg)
    pyramid = _load_pyramid(cfg)
    rows = bootstrap_statistics(survey, pyramid, cfg["bootstrap_replicates"], cfg["master_seed"],
                                cfg["bootstrap_statistic"])
    out = Path(cfg["output_dir"])
    atomic_write(out / "bootstrap.csv", bootstrap_table(rows))
    atomic_write(out / "manifest.json", _manifest("bootstrap", cfg, ["bootstrap.csv"]))
    return EXIT_OK


def cmd_simulate(cfg: dict, dump_ngm: bool = False) -> int:
    mode = cfg["model"]
    matrices = _load_matrices(cfg) if (cfg["diary_path"] or cfg["matrices_path"]) else None
    if matrices is None and mode != "homogeneous":
        raise ConfigError(f"model {mode!r} needs diary_path or matrices_path")
    pyramid = _load_pyramid(cfg)
    est = _model(cfg, mode, beta=cfg["beta"]).fit(pyramid, matrices)
    traj = est.simulate(record_every=cfg["record_every"])
    out = Path(cfg["output_dir"])
    stop = traj.stop_record()
    outputs = ["trajectory.csv", "stop.json"]
    atomic_write(out / "trajectory.csv", trajectory_table(traj))
    atomic_write(out / "stop.json", dumps_json(stop))
    if dump_ngm:
        atomic_write(out / "ngm.json", dumps_json(est.ngm_.to_dict()))
        outputs.append("ngm.json")
    atomic_write(out / "manifest.json", _manifest(
        "simulate", cfg, outputs, model=mode, beta=est.beta_, r0=est.r0_, stop=stop))
    if traj.status != THRESHOLD_REACHED and cfg["stop_cumulative"] is not None:
        raise ThresholdNotReached(
            f"cumulative infections stayed below {cfg['stop_cumulative']:g} up to t_max={cfg['t_max']:g}")
    return EXIT_OK


def run_compare(cfg: dict, matrices: MixingMatrices, pyramid: PopulationPyramid):
    """Calibrate, simulate and apply burden for the three mixing models."""
    risks = _load_risks(cfg)

    def one(mode):
        est = _model(cfg, mode).fit(pyramid, matrices)
        traj = est.simulate(record_every=cfg["record_every"])
        if traj.status != THRESHOLD_REACHED:
            return mode, est, traj, None
        return mode, est, traj, apply_burden(infections_by_age_at_stop(traj), risks)

    with ThreadPoolExecutor(max_workers=len(MODES)) as pool:
        return list(pool.map(one, MODES))


def cmd_compare(cfg: dict, dump_ngm: bool = False) -> int:
    if cfg["stop_cumulative"] is None:
        raise ConfigError("compare needs a stop_cumulative threshold")
    matrices = _load_matrices(cfg)
    pyramid = _load_pyramid(cfg)
    results = run_compare(cfg, matrices, pyramid)
    out = Path(cfg["output_dir"])
    unreached = [mode for mode, _, _, report in results if report is None]
    rows = []
    models = {}
    outputs = ["compare.csv"]
    for mode, est, traj, report in results:
        models[mode] = {"beta": est.beta_, "r0": est.r0_, "stop": traj.stop_record()}
        if report is not None:
            rows.extend(burden_rows(report, mode))
        if dump_ngm:
            atomic_write(out / f"ngm_{mode}.json", dumps_json(est.ngm_.to_dict()))
            outputs.append(f"ngm_{mode}.json")
    atomic_write(out / "compare.csv", render_csv(("model", "indicator", "band", "count", "share"), rows))
    atomic_write(out / "manifest.json", _manifest("compare", cfg, outputs, models=models))
    if unreached:
        raise ThresholdNotReached(f"threshold not reached for model(s): {', '.join(unreached)}")
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "bootstrap": cmd_bootstrap,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contactkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file (or a previous manifest.json)")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value; VALUE is parsed as JSON when possible")
    parser.add_argument("--dump-ngm", action="store_true", help="also write the next-generation matrix")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.override)
        return COMMANDS[args.command](cfg, dump_ngm=args.dump_ngm)
    except ThresholdNotReached as exc:
        print(f"contactkit: threshold unreached: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except (IntegratorInstabilityError, ConvergenceError) as exc:
        print(f"contactkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ContactkitError, ValueError, OSError) as exc:
        print(f"contactkit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
