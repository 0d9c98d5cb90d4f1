"""Batch front-end: ``isetsim --config run.yaml`` or ``python -m isetsim``.

Config file (YAML)::

    experiment: chsh          # single | bell | chsh | sequential | counterfactual |
                              # meas-dep | nonlocality | psi-ontic |
                              # noncommutativity | conspiracy
    params: {N: 1024, delta: 0.02, seed: 0}
    runs: 100000
    settings: {b: 0, b_prime: 90, c: 45, c_prime: 135}   # degrees or [x, y, z]
    options: {}               # experiment specific, see DEFAULT_OPTIONS
    thresholds: {}            # PASS/FAIL limits, see DEFAULT_THRESHOLDS
    out: results/chsh.json
    format: json              # json | csv (json is always written)
    emit_run_records: false   # single/bell/sequential: NDJSON next to ``out``

Flags override the file.  The default seed can be set with ``ISETSIM_SEED``.

Outputs
-------
JSON report, keys sorted, no timestamps::

    {schema_version, experiment, params, config, results, verdicts: {passed, checks}}

CSV summary, one row per ensemble (header ``CSV_FIELDS``).  Run records are
newline-delimited JSON objects.  Exit status is 0 iff every check passed,
1 if a check failed and 2 on configuration or feasibility errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import analysis
from .errors import ConfigError, ModelError, ParameterError
from .experiments import (
    CHSH_DEFAULT_DEGREES,
    DriftModel,
    chsh,
    run_bell_ensemble,
    run_sequential,
    run_single_ensemble,
)
from .geometry import UnitVector, sample_cap
from .ontology import ExperimenterChoice, ModelParams, mechanism

SCHEMA_VERSION = "1.0"
SEED_ENV = "ISETSIM_SEED"

EXPERIMENTS = ("single", "bell", "chsh", "sequential", "counterfactual", "meas-dep",
               "nonlocality", "psi-ontic", "noncommutativity", "conspiracy")
FORMATS = ("json", "csv")
# the witness search and the lattice census run at any even N
FEASIBILITY_EXEMPT = ("nonlocality", "noncommutativity")

DEFAULT_SETTINGS = {
    "single": {"a": 0.0, "b": 60.0},
    "bell": {"b": 0.0, "c": 45.0},
    "chsh": dict(CHSH_DEFAULT_DEGREES),
    "sequential": {"a": 0.0, "b": 50.0, "c": 110.0},
    "counterfactual": {"a": 0.0, "b": 50.0, "c": 110.0, "b_prime": 40.0},
    "meas-dep": {"A": 10.0, "b1": 60.0, "b2": 120.0, "m": 60.0, "c": 0.0},
    "nonlocality": {},
    "psi-ontic": {"a1": 0.0, "a2": 60.0},
    "noncommutativity": {},
    "conspiracy": {"b": 0.0, "c": 45.0},
}

DEFAULT_OPTIONS = {
    "single": {},
    "bell": {},
    "chsh": {},
    "sequential": {"drift_rate": 0.01, "offset_scale": 1.0, "snap_fraction": 0.05},
    "counterfactual": {"mode": "orientations", "drift_rate": 0.01, "offset_scale": 1.0,
                       "snap_fraction": 0.05},
    "meas-dep": {"variant": "single", "samples": 20000},
    "nonlocality": {"max_trials": 1000},
    "psi-ontic": {"samples": 20000},
    "noncommutativity": {"trials": 1000},
    "conspiracy": {"n_app": 8, "null": False},
}

DEFAULT_RUNS = {
    "single": 100_000, "bell": 100_000, "chsh": 100_000, "sequential": 10_000,
    "counterfactual": 10_000, "meas-dep": 20_000, "nonlocality": 1000, "psi-ontic": 20_000,
    "noncommutativity": 1000, "conspiracy": 100_000,
}

# defaults follow the acceptance criteria
DEFAULT_THRESHOLDS = {
    "single": {"delta_factor": 2.0, "sigma_factor": 5.0},
    "bell": {"delta_factor": 2.0, "sigma_factor": 5.0},
    "chsh": {"delta_factor": 8.0, "sigma_factor": 20.0},
    "sequential": {},
    "counterfactual": {"min_fraction": 0.0},
    "meas-dep": {},
    "nonlocality": {},
    "psi-ontic": {},
    "noncommutativity": {},
    "conspiracy": {"mi_tolerance": 0.05},
}

CSV_FIELDS = ["experiment", "ensemble", "N", "delta", "seed", "runs", "statistic", "value",
              "reference", "threshold", "passed"]

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "experiment", "params", "config", "results", "verdicts"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "params": {
            "type": "object",
            "required": ["N", "delta", "azimuth_steps", "seed"],
            "properties": {
                "N": {"type": "integer", "minimum": 4},
                "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.2},
                "azimuth_steps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "config": {"type": "object"},
        "results": {"type": "object"},
        "verdicts": {
            "type": "object",
            "required": ["passed", "checks"],
            "properties": {
                "passed": {"type": "boolean"},
                "checks": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "required": ["passed"],
                        "properties": {"passed": {"type": "boolean"}},
                    },
                },
            },
        },
    },
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _vector(name, value) -> UnitVector:
    if isinstance(value, bool):
        raise ConfigError(f"setting {name!r}: expected degrees or a 3-vector")
    if isinstance(value, (int, float)):
        return UnitVector.from_angle(float(value))
    if isinstance(value, (list, tuple)) and len(value) == 3:
        try:
            return UnitVector(*(float(v) for v in value))
        except (TypeError, ValueError, ParameterError) as exc:
            raise ConfigError(f"setting {name!r}: {exc}") from None
    raise ConfigError(f"setting {name!r}: expected degrees or a 3-vector, got {value!r}")


@dataclass
class ExperimentConfig:
    experiment: str
    params: ModelParams
    settings: dict = field(default_factory=dict)
    runs: int = 100_000
    out: str | None = None
    format: str = "json"
    emit_run_records: bool = False
    options: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params.to_dict(),
            "settings": {k: v.to_list() for k, v in sorted(self.settings.items())},
            "runs": self.runs,
            "out": self.out,
            "format": self.format,
            "emit_run_records": self.emit_run_records,
            "options": dict(sorted(self.options.items())),
            "thresholds": dict(sorted(self.thresholds.items())),
        }

    @classmethod
    def from_dict(cls, data: dict, env: dict | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {"experiment", "params", "settings", "runs", "out", "format",
                 "emit_run_records", "options", "thresholds"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}")

        raw = dict(data.get("params") or {})
        unknown = set(raw) - {"N", "delta", "azimuth_steps", "seed"}
        if unknown:
            raise ConfigError(f"unknown params: {sorted(unknown)}")
        if raw.get("seed") is None:
            env = os.environ if env is None else env
            raw["seed"] = int(env[SEED_ENV]) if env.get(SEED_ENV) else 0
        try:
            params = ModelParams(**raw)
        except (ParameterError, TypeError) as exc:
            raise ConfigError(f"invalid params: {exc}") from None
        if exp not in FEASIBILITY_EXEMPT:
            try:
                params.require_feasible()
            except ParameterError as exc:
                raise ConfigError(f"infeasible params: {exc}") from None

        settings = dict(DEFAULT_SETTINGS[exp])
        settings.update(data.get("settings") or {})
        vectors = {k: _vector(k, v) for k, v in settings.items()}

        options = dict(DEFAULT_OPTIONS[exp])
        options.update(data.get("options") or {})
        thresholds = dict(DEFAULT_THRESHOLDS[exp])
        thresholds.update(data.get("thresholds") or {})

        runs = data.get("runs", DEFAULT_RUNS[exp])
        if isinstance(runs, bool) or not isinstance(runs, int) or runs < 1:
            raise ConfigError(f"runs must be a positive integer, got {runs!r}")
        fmt = data.get("format", "json")
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {list(FORMATS)}, got {fmt!r}")
        out = data.get("out")
        return cls(exp, params, vectors, runs, None if out is None else str(out), fmt,
                   bool(data.get("emit_run_records", False)), options, thresholds)


def _parse_yaml(text: str, source: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: parse error: {problem}") from None


def load_config(path, overrides: dict | None = None, env: dict | None = None) -> ExperimentConfig:
    """Read a YAML config, apply flag overrides and validate."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    data = _parse_yaml(p.read_text(), str(p)) or {}
    return ExperimentConfig.from_dict(_merge(data, overrides or {}), env)


def _merge(data: dict, overrides: dict) -> dict:
    out = dict(data)
    params = dict(out.get("params") or {})
    for key in ("N", "delta", "seed"):
        if overrides.get(key) is not None:
            params[key] = overrides[key]
    out["params"] = params
    for key in ("experiment", "runs", "out", "format"):
        if overrides.get(key) is not None:
            out[key] = overrides[key]
    if overrides.get("emit_run_records"):
        out["emit_run_records"] = True
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

@dataclass
class Outcome:
    results: dict
    checks: dict
    rows: list
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def _row(cfg, ensemble, runs, statistic, value, reference, threshold, passed) -> dict:
    p = cfg.params
    return {"experiment": cfg.experiment, "ensemble": ensemble, "N": p.N, "delta": p.delta,
            "seed": p.seed, "runs": runs, "statistic": statistic, "value": value,
            "reference": reference, "threshold": threshold, "passed": passed}


def _ensemble_check(stats, t: dict, delta: float) -> dict:
    limit = t["delta_factor"] * delta + t["sigma_factor"] * stats.sigma
    return {"passed": stats.deviation < limit, "deviation": stats.deviation, "limit": limit}


def _run_single(cfg: ExperimentConfig) -> Outcome:
    s, records = cfg.settings, []
    sink = records.append if cfg.emit_run_records else None
    stats = run_single_ensemble(cfg.params, ExperimenterChoice.fixed(s["a"]),
                                ExperimenterChoice.fixed(s["b"]), cfg.runs, record_sink=sink)
    check = _ensemble_check(stats, cfg.thresholds, cfg.params.delta)
    row = _row(cfg, "ab", stats.runs, "E_hat", stats.E_hat, stats.quantum_E, check["limit"],
               check["passed"])
    return Outcome({"ensemble": stats.to_dict()}, {"correlation": check}, [row], records)


def _run_bell(cfg: ExperimentConfig) -> Outcome:
    s, records = cfg.settings, []
    sink = records.append if cfg.emit_run_records else None
    stats = run_bell_ensemble(cfg.params, ExperimenterChoice.fixed(s["b"]),
                              ExperimenterChoice.fixed(s["c"]), cfg.runs, record_sink=sink)
    check = _ensemble_check(stats, cfg.thresholds, cfg.params.delta)
    row = _row(cfg, "bc", stats.runs, "E_hat", stats.E_hat, stats.quantum_E, check["limit"],
               check["passed"])
    return Outcome({"ensemble": stats.to_dict()}, {"correlation": check}, [row], records)


def _run_chsh(cfg: ExperimentConfig) -> Outcome:
    s = {k: cfg.settings[k] for k in ("b", "b_prime", "c", "c_prime")}
    res = chsh(cfg.params, s, runs_per_pair=cfg.runs)
    t = cfg.thresholds
    threshold = 2.0 * math.sqrt(2.0) - t["delta_factor"] * cfg.params.delta \
        - t["sigma_factor"] * res.sigma_max
    passed = res.S >= threshold
    rows = [_row(cfg, name, st.runs, "E_hat", st.E_hat, st.quantum_E, None, None)
            for name, st in res.correlators.items()]
    rows.append(_row(cfg, "S", cfg.runs * 4, "S", res.S, 2.0 * math.sqrt(2.0), threshold, passed))
    results = res.to_dict()
    results["threshold"] = threshold
    results["passed"] = passed
    return Outcome({"chsh": results}, {"S": {"passed": passed, "S": res.S,
                                             "threshold": threshold}}, rows)


def _drift(cfg) -> DriftModel:
    o = cfg.options
    return DriftModel(angular_rate=float(o["drift_rate"]), seed=cfg.params.seed,
                      offset_scale=float(o["offset_scale"]))


def _run_sequential(cfg: ExperimentConfig) -> Outcome:
    s = cfg.settings
    drift = _drift(cfg)
    rng = np.random.default_rng(cfg.params.seed)
    admissible, records = 0, []
    for i in range(cfg.runs):
        rec = run_sequential(cfg.params, [s["a"], s["b"], s["c"]], drift=drift, rng=rng,
                             run_index=i, snap_fraction=float(cfg.options["snap_fraction"]))
        rep = rec.context["report"]
        admissible += rep["admissible"]
        if cfg.emit_run_records:
            records.append({"run_index": i, "M": [m.to_list() for m in rec.hidden.M],
                            "k": rec.hidden.k,
                            "exact": [v.to_list() for v in rec.exact_settings],
                            "AB": rep["AB"].to_dict(), "BC": rep["BC"].to_dict(),
                            "admissible": rep["admissible"]})
    frac = admissible / cfg.runs
    results = {"runs": cfg.runs, "admissible_runs": admissible, "admissible_fraction": frac}
    row = _row(cfg, "abc", cfg.runs, "admissible_fraction", frac, None, None, True)
    return Outcome(results, {"completed": {"passed": True}}, [row], records)


def _run_counterfactual(cfg: ExperimentConfig) -> Outcome:
    o, s = cfg.options, cfg.settings
    drift = _drift(cfg)
    snap_fraction = float(o["snap_fraction"])
    if o["mode"] == "bell":
        census = analysis.counterfactual_bell_census(
            cfg.params, cfg.runs, drift,
            {"b": s["b"], "b_prime": s["b_prime"], "c": s["c"]}, snap_fraction)
    else:
        census = analysis.counterfactual_census(cfg.params, cfg.runs, o["mode"], drift,
                                                [s["a"], s["b"], s["c"]],
                                                snap_fraction=snap_fraction)
    if census.zero_error:
        passed = census.differing == 0
        ref = "zero-error control: no run may differ"
    else:
        passed = census.fraction > float(cfg.thresholds["min_fraction"])
        ref = "fraction of differing verdicts must exceed min_fraction"
    row = _row(cfg, census.mode, cfg.runs, "fraction_differing", census.fraction, None,
               cfg.thresholds["min_fraction"], passed)
    return Outcome({"census": census.to_dict()},
                   {"census": {"passed": passed, "rule": ref}}, [row])


def _run_meas_dep(cfg: ExperimentConfig) -> Outcome:
    s, o = cfg.settings, cfg.options
    rng = np.random.default_rng(cfg.params.seed)
    samples = int(o["samples"])
    if o["variant"] == "bell":
        c = s["c"]
        C = mechanism(sample_cap(c, cfg.params.delta, rng), c, c)
        B1, B2 = analysis.lattice_sharing_partners(cfg.params, C, s["b1"], s["b2"], rng)
        if s["b1"] == s["b2"]:
            B2 = B1
        rep = analysis.measurement_dependence_bell(cfg.params, B1, B2, c, c, samples, rng)
        control = B1 == B2
    elif o["variant"] == "single":
        rep = analysis.measurement_dependence_single(cfg.params, s["A"], s["b1"], s["b2"],
                                                     s["m"], samples, rng)
        control = s["b1"] == s["b2"]
    else:
        raise ConfigError(f"meas-dep variant must be 'single' or 'bell', got {o['variant']!r}")
    expected = "independent-within-tolerance" if control else "dependent"
    passed = rep.verdict == expected
    row = _row(cfg, o["variant"], samples, "tv_distance", rep.distance, expected, None, passed)
    return Outcome({"dependence": rep.to_dict()},
                   {"verdict": {"passed": passed, "expected": expected}}, [row])


def _run_nonlocality(cfg: ExperimentConfig) -> Outcome:
    rng = np.random.default_rng(cfg.params.seed)
    w = analysis.nonlocality_witness(cfg.params, rng, int(cfg.options["max_trials"]))
    replay_ok = w.found and w.replay() == w.O2 and w.O2[0] != w.O2[1]
    row = _row(cfg, "witness", w.trials, "found", int(w.found), None, None, replay_ok)
    return Outcome({"witness": w.to_dict()}, {"witness": {"passed": replay_ok}}, [row])


def _run_psi_ontic(cfg: ExperimentConfig) -> Outcome:
    s = cfg.settings
    rng = np.random.default_rng(cfg.params.seed)
    rep = analysis.psi_ontic_check(cfg.params, s["a1"], s["a2"],
                                   int(cfg.options["samples"]), rng)
    passed = rep.recomputable and (rep.sub_resolution or rep.disjoint)
    row = _row(cfg, "a1a2", rep.samples, "support_overlap", rep.support_overlap, None, None,
               passed)
    return Outcome({"psi_ontic": rep.to_dict()}, {"overlap": {"passed": passed}}, [row])


def _run_noncommutativity(cfg: ExperimentConfig) -> Outcome:
    rng = np.random.default_rng(cfg.params.seed)
    rep = analysis.noncommutativity_census(cfg.params, trials=int(cfg.options["trials"]),
                                           rng=rng)
    passed = rep.max_pairwise_dot > 0.0
    row = _row(cfg, "census", rep.trials, "max_pairwise_dot", rep.max_pairwise_dot, None, None,
               passed)
    return Outcome({"census": rep.to_dict()},
                   {"non_orthogonal_exact_settings": {"passed": passed}}, [row])


def _run_conspiracy(cfg: ExperimentConfig) -> Outcome:
    o, s = cfg.options, cfg.settings
    rng = np.random.default_rng(cfg.params.seed)
    n_app, null = int(o["n_app"]), bool(o["null"])
    rep = analysis.conspiracy_experiment(cfg.params, n_app, cfg.runs, rng, null, s["b"], s["c"])
    tol = float(cfg.thresholds["mi_tolerance"])
    target = 0.0 if null else rep.log2_count
    passed = abs(rep.mutual_information - target) < tol
    row = _row(cfg, f"n_app={n_app}", cfg.runs, "mutual_information", rep.mutual_information,
               target, tol, passed)
    return Outcome({"conspiracy": rep.to_dict()},
                   {"mutual_information": {"passed": passed, "target": target,
                                           "tolerance": tol}}, [row])


RUNNERS = {
    "single": _run_single, "bell": _run_bell, "chsh": _run_chsh,
    "sequential": _run_sequential, "counterfactual": _run_counterfactual,
    "meas-dep": _run_meas_dep, "nonlocality": _run_nonlocality,
    "psi-ontic": _run_psi_ontic, "noncommutativity": _run_noncommutativity,
    "conspiracy": _run_conspiracy,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, UnitVector):
        return obj.to_list()
    return obj


def build_report(cfg: ExperimentConfig, outcome: Outcome) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "params": cfg.params.to_dict(),
        # the destination path is not part of the result
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
        "results": outcome.results,
        "verdicts": {"passed": outcome.passed, "checks": outcome.checks},
    }
    report = _jsonable(report)
    jsonschema.validate(report, REPORT_SCHEMA)
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _paths(cfg: ExperimentConfig) -> tuple[Path, Path, Path]:
    base = Path(cfg.out) if cfg.out else Path(f"{cfg.experiment}.json")
    if base.suffix != ".json":
        base = base.with_suffix(".json")
    return base, base.with_suffix(".csv"), base.with_suffix(".records.ndjson")


def summary_line(cfg: ExperimentConfig, report: dict) -> str:
    r = report["results"]
    if cfg.experiment in ("single", "bell"):
        stat = f"E_hat={r['ensemble']['E_hat']:.5f}"
    elif cfg.experiment == "chsh":
        stat = f"S={r['chsh']['S']:.5f} (threshold {r['chsh']['threshold']:.4f})"
    elif cfg.experiment == "conspiracy":
        stat = f"MI={r['conspiracy']['mutual_information']:.4f} bits"
    elif cfg.experiment == "counterfactual":
        stat = f"fraction_differing={r['census']['fraction_differing']:.4f}"
    elif cfg.experiment == "meas-dep":
        stat = f"TV={r['dependence']['distance']:.4f} ({r['dependence']['verdict']})"
    elif cfg.experiment == "sequential":
        stat = f"admissible_fraction={r['admissible_fraction']:.4f}"
    elif cfg.experiment == "nonlocality":
        stat = f"witness found={r['witness']['found']}"
    elif cfg.experiment == "psi-ontic":
        stat = f"overlap={r['psi_ontic']['support_overlap']:.4f}"
    else:
        stat = f"max|Xi.Xj|={r['census']['max_pairwise_dot']:.4g}"
    verdict = "PASS" if report["verdicts"]["passed"] else "FAIL"
    return f"{cfg.experiment}: {stat} {verdict}"


def run_experiment(cfg: ExperimentConfig, stream=None) -> int:
    """Run, write artifacts, print the summary; returns the exit status."""
    stream = stream or sys.stdout
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
    except (ModelError, ValueError) as exc:
        print(f"{cfg.experiment}: error: {exc}", file=sys.stderr)
        return 2
    report = build_report(cfg, outcome)
    json_path, csv_path, rec_path = _paths(cfg)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(dumps_report(report))
    if cfg.format == "csv":
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            w.writeheader()
            for row in outcome.rows:
                w.writerow(row)
    if cfg.emit_run_records:
        with open(rec_path, "w") as fh:
            for rec in outcome.records:
                fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
    print(summary_line(cfg, report), file=stream)
    return 0 if report["verdicts"]["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isetsim", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="YAML config file")
    ap.add_argument("--experiment", choices=EXPERIMENTS)
    ap.add_argument("--N", type=int)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--emit-run-records", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"experiment": args.experiment, "N": args.N, "delta": args.delta,
                 "runs": args.runs, "seed": args.seed, "out": args.out, "format": args.format,
                 "emit_run_records": args.emit_run_records}
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            if not args.experiment:
                raise ConfigError("either --config or --experiment is required")
            cfg = ExperimentConfig.from_dict(_merge({}, overrides))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
