"""Command-line entry point.

Configuration is an INI document parsed strictly: unknown sections or keys
are rejected, and every physical parameter is validated before any run
starts.  Exit codes are the machine contract: 0 for a completed run, 10
when blow-up is detected, 11 when resolution is lost, 2 for configuration
errors (and any other failure to evaluate).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, field as dc_field

from . import criteria as crit
from . import damping as dmp
from . import experiments as exp
from . import quantities as qt
from .errors import ConfigurationError, NlslabError
from .grid import Field, Grid, field_slice_csv, load_field, save_field
from .solver import ProblemSpec, simulate, trajectory_summary

EXIT_OK = 0
EXIT_BLOWUP = 10
EXIT_RESOLUTION = 11
EXIT_CONFIG = 2

_THEOREMS = ("Blow0", "Blow1", "Blow2", "GE", "AppendixB")
_FAMILIES = ("gaussian", "gaussian-chirp", "ring", "file")


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise ConfigurationError(f"value must be finite, got {text!r}")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"not an integer: {text!r}")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple:
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    return tuple(_parse_float(s) for s in items)


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_names(text: str) -> tuple:
    return tuple(s for s in (part.strip() for part in text.split(",")) if s)


# schema: section -> key -> (default, parser); None default means optional
_SCHEMA = {
    "problem": {
        "dim": ("1", _parse_int),
        "p": ("3.0", _parse_float),
        "mu": ("-1", _parse_int),
    },
    "grid": {
        "half_width": ("16.0", _parse_float),
        "points": ("512", _parse_int),
    },
    "damping": {
        "kind": ("constant", _parse_str),
        "param": ("0.5", _parse_float),
        "table": (None, _parse_str),
        "weight_alpha": ("1.0", _parse_float),
        "weight_beta": ("0.0", _parse_float),
        "weight_gamma": ("0.0", _parse_float),
        "weight_delta": ("0.0", _parse_float),
        "weight_sigma": ("1.0", _parse_float),
    },
    "initial": {
        "family": ("gaussian", _parse_str),
        "amplitude": ("1.0", _parse_float),
        "width": ("1.0", _parse_float),
        "chirp": ("0.0", _parse_float),
        "radius": ("3.0", _parse_float),
        "center": (None, _parse_floats),
        "path": (None, _parse_str),
    },
    "integrator": {
        "dt_max": ("1e-3", _parse_float),
        "t_end": ("1.0", _parse_float),
        "safety": ("0.5", _parse_float),
        "frames": ("200", _parse_int),
    },
    "thresholds": {
        "grad_factor": ("1e3", _parse_float),
        "tail_fraction": ("1e-2", _parse_float),
    },
    "run": {
        "out_dir": ("out", _parse_str),
        "seed": ("12345", _parse_int),
        "calibration_c": ("1.0", _parse_float),
        "calibration_c0": ("1.0", _parse_float),
        "save_fields": ("true", _parse_bool),
    },
    "criteria": {
        "theorems": ("Blow1", _parse_names),
        "horizon": ("100.0", _parse_float),
        "cutoff_radius": ("8.0", _parse_float),
    },
    "sweep": {
        "mode": ("bisect", _parse_str),
        "a_lo": ("0.0", _parse_float),
        "a_hi": ("1.0", _parse_float),
        "tol": ("0.01", _parse_float),
        "t_probe": ("1.0", _parse_float),
        "max_probes": ("40", _parse_int),
        "values": (None, _parse_floats),
        "kind": ("constant", _parse_str),
        "workers": (None, _parse_int),
    },
}


@dataclass
class RunConfig:
    """Fully typed configuration; equality is field-by-field."""

    values: dict = dc_field(default_factory=dict)

    def __getitem__(self, pair):
        section, key = pair
        return self.values[section][key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    def echo(self) -> dict:
        """Normalized string form; re-parsing it reproduces this config."""
        out = {}
        for section, keys in self.values.items():
            rendered = {}
            for key, value in keys.items():
                if value is None:
                    continue
                if isinstance(value, tuple):
                    rendered[key] = ",".join(str(v) for v in value)
                elif isinstance(value, bool):
                    rendered[key] = "true" if value else "false"
                else:
                    rendered[key] = str(value)
            out[section] = rendered
        return out


def parse_config_mapping(mapping: dict) -> RunConfig:
    """Typed, strict parse of {section: {key: string}}."""
    unknown = set(mapping) - set(_SCHEMA)
    if unknown:
        raise ConfigurationError(f"unknown section(s): {sorted(unknown)}")
    values = {}
    for section, schema in _SCHEMA.items():
        given = dict(mapping.get(section, {}))
        extra = set(given) - set(schema)
        if extra:
            raise ConfigurationError(
                f"unknown key(s) in [{section}]: {sorted(extra)}")
        parsed = {}
        for key, (default, parser) in schema.items():
            raw = given.get(key, default)
            if raw is None:
                parsed[key] = None
                continue
            try:
                parsed[key] = parser(raw)
            except ConfigurationError as err:
                raise ConfigurationError(f"[{section}] {key}: {err}")
        values[section] = parsed
    cfg = RunConfig(values)
    _validate(cfg)
    return cfg


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigurationError(f"cannot read config {path}: {err}")
    except configparser.Error as err:
        raise ConfigurationError(f"malformed config {path}: {err}")
    mapping = {s: dict(parser.items(s)) for s in parser.sections()}
    return parse_config_mapping(mapping)


def _validate(cfg: RunConfig) -> None:
    """Physical-parameter checks with messages naming the offending key."""
    if cfg["problem", "dim"] not in (1, 2, 3):
        raise ConfigurationError("[problem] dim: must be 1, 2 or 3")
    if cfg["problem", "p"] <= 1.0:
        raise ConfigurationError("[problem] p: must be > 1")
    if cfg["problem", "mu"] not in (-1, 1):
        raise ConfigurationError("[problem] mu: must be -1 or 1")
    if cfg["grid", "half_width"] <= 0.0:
        raise ConfigurationError("[grid] half_width: must be positive")
    if cfg["damping", "kind"] not in dmp.KINDS:
        raise ConfigurationError(
            f"[damping] kind: must be one of {', '.join(dmp.KINDS)}")
    if cfg["initial", "family"] not in _FAMILIES:
        raise ConfigurationError(
            f"[initial] family: must be one of {', '.join(_FAMILIES)}")
    if cfg["initial", "family"] == "file" and not cfg["initial", "path"]:
        raise ConfigurationError("[initial] path: required for family file")
    if cfg["initial", "width"] <= 0.0:
        raise ConfigurationError("[initial] width: must be positive")
    for key in ("dt_max", "t_end", "safety"):
        if cfg["integrator", key] <= 0.0:
            raise ConfigurationError(f"[integrator] {key}: must be positive")
    if cfg["integrator", "frames"] < 2:
        raise ConfigurationError("[integrator] frames: must be at least 2")
    if cfg["thresholds", "grad_factor"] <= 1.0:
        raise ConfigurationError("[thresholds] grad_factor: must exceed 1")
    if not 0.0 < cfg["thresholds", "tail_fraction"] <= 1.0:
        raise ConfigurationError(
            "[thresholds] tail_fraction: must lie in (0, 1]")
    bad = set(cfg["criteria", "theorems"]) - set(_THEOREMS)
    if bad:
        raise ConfigurationError(
            f"[criteria] theorems: unknown tag(s) {sorted(bad)}")
    if cfg["criteria", "horizon"] <= 0.0:
        raise ConfigurationError("[criteria] horizon: must be positive")
    if cfg["criteria", "cutoff_radius"] <= 0.0:
        raise ConfigurationError("[criteria] cutoff_radius: must be positive")
    if cfg["sweep", "mode"] not in ("bisect", "grid"):
        raise ConfigurationError("[sweep] mode: must be bisect or grid")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> Grid:
    try:
        return Grid(cfg["problem", "dim"], cfg["grid", "half_width"],
                    cfg["grid", "points"])
    except NlslabError as err:
        raise ConfigurationError(f"[grid]: {err}")


def build_damping(cfg: RunConfig) -> dmp.DampingSpec:
    kind = cfg["damping", "kind"]
    param = cfg["damping", "param"]
    try:
        if kind == "piecewise-linear":
            table = cfg["damping", "table"]
            if not table:
                raise ConfigurationError("table path required")
            return dmp.from_csv(table)
        if kind == "zero":
            return dmp.zero()
        factory = {"constant": dmp.constant, "saturating": dmp.saturating,
                   "polynomial-decay": dmp.polynomial_decay,
                   "appendix-spike": dmp.appendix_spike}[kind]
        return factory(param)
    except NlslabError as err:
        raise ConfigurationError(f"[damping]: {err}")


def build_initial(cfg: RunConfig, grid: Grid) -> Field:
    family = cfg["initial", "family"]
    amplitude = cfg["initial", "amplitude"]
    width = cfg["initial", "width"]
    chirp = cfg["initial", "chirp"]
    center = cfg["initial", "center"]
    try:
        if family == "file":
            field = load_field(cfg["initial", "path"])
            if field.grid != grid:
                raise ConfigurationError(
                    "stored field grid does not match the configured grid")
            return field
        if family == "ring":
            return exp.ring_data(grid, amplitude=amplitude,
                                 radius=cfg["initial", "radius"],
                                 width=width, chirp=chirp)
        # gaussian-chirp is the gaussian family with a nonzero chirp key
        return exp.gaussian_data(grid, amplitude=amplitude, width=width,
                                 chirp=chirp, center=center)
    except NlslabError as err:
        raise ConfigurationError(f"[initial]: {err}")


def build_problem(cfg: RunConfig, frames_override: int | None = None
                  ) -> ProblemSpec:
    grid = build_grid(cfg)
    try:
        return ProblemSpec(
            grid=grid,
            p=cfg["problem", "p"],
            mu=cfg["problem", "mu"],
            damping=build_damping(cfg),
            initial=build_initial(cfg, grid),
            dt_max=cfg["integrator", "dt_max"],
            t_end=cfg["integrator", "t_end"],
            safety=cfg["integrator", "safety"],
            frames=frames_override or cfg["integrator", "frames"],
            grad_factor=cfg["thresholds", "grad_factor"],
            tail_fraction=cfg["thresholds", "tail_fraction"],
        )
    except ConfigurationError:
        raise
    except NlslabError as err:
        raise ConfigurationError(f"invalid problem configuration: {err}")


def _out_dir(cfg: RunConfig, args) -> str:
    out = args.out or cfg["run", "out_dir"]
    os.makedirs(out, exist_ok=True)
    return out


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    spec = build_problem(cfg, args.frames)
    record = simulate(spec)
    out = _out_dir(cfg, args)
    qt.write_diagnostics_csv(record.frames, os.path.join(out,
                                                         "diagnostics.csv"))
    summary = trajectory_summary(record, spec, config_echo=cfg.echo())
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if cfg["run", "save_fields"]:
        save_field(record.initial_field, os.path.join(out,
                                                      "field_initial.bin"))
        if not record.final_field.post_blowup:
            save_field(record.final_field, os.path.join(out,
                                                        "field_final.bin"))
            field_slice_csv(record.final_field,
                            os.path.join(out, "final_slice.csv"))
    _emit(args, json.dumps(summary, indent=2))
    return {"completed": EXIT_OK, "blowup-detected": EXIT_BLOWUP,
            "resolution-lost": EXIT_RESOLUTION}[record.classification]


def _evaluate_theorem(tag: str, cfg: RunConfig, grid: Grid, u0: Field):
    p = cfg["problem", "p"]
    horizon = cfg["criteria", "horizon"]
    spec = build_damping(cfg)
    if tag == "Blow1":
        return crit.check_blow1(u0, p)
    if tag == "Blow0":
        return crit.check_blow0(u0, spec, p, horizon)
    if tag == "Blow2":
        profile = qt.CutoffProfile(cfg["criteria", "cutoff_radius"])
        return crit.check_blow2(u0, p, profile)
    if tag == "GE":
        return crit.check_global_existence(
            u0, p, spec, horizon, calibration=cfg["run", "calibration_c"])
    return crit.check_subcritical(grid.dim, p, cfg["problem", "mu"])


def cmd_criteria(args) -> int:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    u0 = build_initial(cfg, grid)
    verdicts = [_evaluate_theorem(tag, cfg, grid, u0)
                for tag in cfg["criteria", "theorems"]]
    payload = {"config": cfg.echo(),
               "verdicts": [v.to_dict() for v in verdicts]}
    out = args.out
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "verdicts.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    spec = build_problem(cfg, args.frames)
    report = exp.verify_identities(spec)
    lines = [f"{name}: {value:.3e}"
             for name, value in report.residuals.items()]
    lines += [f"halving ratio {name}: {value:.2f}"
              for name, value in report.convergence.items()]
    _emit(args, "\n".join(lines))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        payload = report.to_dict()
        payload["config"] = cfg.echo()
        with open(os.path.join(args.out, "verify.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    mode = cfg["sweep", "mode"]
    if mode == "bisect":
        grid = build_grid(cfg)
        u0 = build_initial(cfg, grid)
        result = exp.bisect_threshold(
            u0, cfg["problem", "p"],
            cfg["sweep", "a_lo"], cfg["sweep", "a_hi"],
            cfg["sweep", "tol"], cfg["sweep", "t_probe"],
            mu=cfg["problem", "mu"],
            dt_max=cfg["integrator", "dt_max"],
            safety=cfg["integrator", "safety"],
            frames=args.frames or cfg["integrator", "frames"],
            grad_factor=cfg["thresholds", "grad_factor"],
            tail_fraction=cfg["thresholds", "tail_fraction"],
            max_probes=cfg["sweep", "max_probes"])
    else:
        values = cfg["sweep", "values"]
        if not values:
            raise ConfigurationError("[sweep] values: required in grid mode")
        base = build_problem(cfg, args.frames)
        result = exp.sweep_grid(base, values, kind=cfg["sweep", "kind"],
                                workers=cfg["sweep", "workers"])
    out = _out_dir(cfg, args)
    exp.write_sweep_csv(result, os.path.join(out, "sweep.csv"))
    payload = result.to_dict()
    payload["config"] = cfg.echo()
    with open(os.path.join(out, "sweep.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    _emit(args, json.dumps({"bracket": payload["bracket"],
                            "bracket_width": payload["bracket_width"],
                            "anomalies": payload["anomalies"]}, indent=2))
    return EXIT_OK


def cmd_damping_info(args) -> int:
    cfg = load_config(args.config)
    spec = build_damping(cfg)
    horizon = cfg["criteria", "horizon"]
    cd = dmp.CumulativeDamping(spec)
    weight = dmp.WeightParams(
        alpha=cfg["damping", "weight_alpha"],
        beta=cfg["damping", "weight_beta"],
        gamma=cfg["damping", "weight_gamma"],
        delta=cfg["damping", "weight_delta"],
        sigma=cfg["damping", "weight_sigma"])
    sup_est = dmp.sup_average(cd, horizon)
    inf_est = dmp.inf_average(cd, horizon)
    wam = dmp.weighted_inf_average(cd, weight, horizon)

    def render(est):
        return {"value": est.value, "arg_t": est.arg_t,
                "at_lower": est.at_lower, "at_upper": est.at_upper}

    info = {
        "kind": spec.kind,
        "param": spec.param,
        "horizon": horizon,
        "cumulative": float(dmp.cumulative(cd, horizon)),
        "monotonicity": dmp.classify_monotonicity(spec, horizon),
        "sup_average": render(sup_est),
        "inf_average": render(inf_est),
        "weighted_inf_average": render(wam),
    }
    if spec.kind == "appendix-spike":
        info["moments"] = [
            {"n": n, "q": q, "value": dmp.spike_moment(spec.param, n, q)}
            for n in range(1, 11) for q in (1, 2, 3)]
    _emit(args, json.dumps(info, indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "damping.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(info, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Numerical laboratory for the damped focusing "
                    "nonlinear Schrodinger equation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in (("simulate", cmd_simulate),
                          ("criteria", cmd_criteria),
                          ("verify", cmd_verify),
                          ("sweep", cmd_sweep),
                          ("damping-info", cmd_damping_info)):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--out", default=None)
        cmd.add_argument("--frames", type=int, default=None)
        cmd.add_argument("--quiet", action="store_true")
        cmd.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NlslabError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
