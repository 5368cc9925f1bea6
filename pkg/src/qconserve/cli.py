"""qconserve command line: validate a config, run a scenario, emit reports.

Exit status: 0 success, 2 configuration/validation error, 3 numerical
guard tripped mid-run. Identical config and seed produce byte-identical
report.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import NumericalGuardError
from .grids import GridSpec
from .reporting import SCHEMA_TAG, ledger_report_to_dict, render_json, write_csv
from .scenarios import (
    APRBoxSpec,
    GaussianPacketSpec,
    MachZehnderSpec,
    SternGerlachSpec,
    run_apr_box,
    run_free_packet,
    run_mach_zehnder,
    run_stern_gerlach,
)

VALID_FORMATS = ("json", "csv")


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise ValueError(f"expected a number or [re, im] pair, got {value!r}")


def _build_mach_zehnder(params: dict) -> MachZehnderSpec:
    kwargs = dict(params)
    if "branch_amplitudes" in kwargs:
        pair = kwargs["branch_amplitudes"]
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ValueError("branch_amplitudes must be a pair")
        kwargs["branch_amplitudes"] = tuple(_as_complex(v) for v in pair)
    return MachZehnderSpec(**kwargs)


def _build_free_packet(params: dict) -> GaussianPacketSpec:
    kwargs = dict(params)
    points = kwargs.pop("grid_points", 4096)
    length = kwargs.pop("grid_length", 200.0)
    kwargs["grid"] = GridSpec(int(points), float(length))
    return GaussianPacketSpec(**kwargs)


def _build_stern_gerlach(params: dict) -> SternGerlachSpec:
    return SternGerlachSpec(**params)


def _build_apr_box(params: dict) -> APRBoxSpec:
    kwargs = dict(params)
    if "window" in kwargs:
        window = kwargs["window"]
        if not isinstance(window, (list, tuple)) or len(window) != 2:
            raise ValueError("window must be a [lo, hi] pair")
        kwargs["window"] = (float(window[0]), float(window[1]))
    return APRBoxSpec(**kwargs)


SCENARIOS = {
    "mach_zehnder": {
        "build": _build_mach_zehnder,
        "run": run_mach_zehnder,
        "describe": "beam-splitter back-action: overlap deficit, entropy, "
        "collapse fidelity, branch momentum totals",
        "parameters": "kick, apparatus_sigma_p, branch_amplitudes",
    },
    "free_packet": {
        "build": _build_free_packet,
        "run": run_free_packet,
        "describe": "free Gaussian spreading, window detection, segment "
        "momentum vs m*x*/t, momentum/energy audits",
        "parameters": "a, mass, grid_points, grid_length, detect_time, "
        "window_center, window_width, snapshots, steps",
    },
    "stern_gerlach": {
        "build": _build_stern_gerlach,
        "run": run_stern_gerlach,
        "describe": "spin-conditioned momentum exchange with the apparatus; "
        "branch deltas offset exactly",
        "parameters": "kick, particle_mode_dim, apparatus_mode_dim, "
        "apparatus_spread, track_angular_momentum, angular_mode_dim",
    },
    "apr_box": {
        "build": _build_apr_box,
        "run": run_apr_box,
        "describe": "superoscillatory box state; window opening yields a "
        "low-probability branch above the band-limit energy",
        "parameters": "box_length, n_modes, target_wavenumber, window, "
        "mass, grid_points, control_wavenumber",
    },
}


class ConfigError(ValueError):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"scenario", "parameters", "seed", "output_dir", "formats"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if raw.get("scenario") not in SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {sorted(SCENARIOS)}, "
            f"got {raw.get('scenario')!r}"
        )
    seed = raw.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed is required and must be a non-negative integer")
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters must be an object")
    formats = raw.get("formats", ["json"])
    if (
        not isinstance(formats, list)
        or not formats
        or any(f not in VALID_FORMATS for f in formats)
    ):
        raise ConfigError(f"formats must be a non-empty subset of {VALID_FORMATS}")
    return {
        "scenario": raw["scenario"],
        "parameters": params,
        "seed": seed,
        "output_dir": raw.get("output_dir"),
        "formats": list(dict.fromkeys(formats)),
    }


def build_report(config: dict):
    """Validate parameters, run the scenario, and assemble the report.

    Returns (report dict, ConservationReport) -- the latter feeds the CSV
    time-series writer.
    """
    entry = SCENARIOS[config["scenario"]]
    try:
        spec = entry["build"](dict(config["parameters"]))
    except TypeError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc

    results = entry["run"](spec)
    ledger = results.pop("ledger")
    results["ledger"] = ledger_report_to_dict(ledger)

    sampled = None
    if ledger.events:
        rng = np.random.default_rng(config["seed"])
        probs = ledger.events[-1].probabilities
        labels = sorted(probs)
        weights = np.array([probs[k] for k in labels])
        sampled = labels[int(rng.choice(len(labels), p=weights / weights.sum()))]

    return {
        "schema": SCHEMA_TAG,
        "scenario": config["scenario"],
        "seed": config["seed"],
        "config": {
            "scenario": config["scenario"],
            "parameters": config["parameters"],
            "seed": config["seed"],
            "formats": config["formats"],
        },
        "sampled_outcome": sampled,
        "results": results,
    }, ledger


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.out is not None:
            config["output_dir"] = args.out
        if args.format is not None:
            formats = [f.strip() for f in args.format.split(",") if f.strip()]
            if not formats or any(f not in VALID_FORMATS for f in formats):
                raise ConfigError(
                    f"--format must be a comma list from {VALID_FORMATS}"
                )
            config["formats"] = list(dict.fromkeys(formats))
        if not config["output_dir"]:
            raise ConfigError("output_dir is required (config key or --out)")
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2

    try:
        report, ledger = build_report(config)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"error: numerical-guard: {exc}", file=sys.stderr)
        return 3

    outdir = config["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    written = []
    if "json" in config["formats"]:
        path = os.path.join(outdir, "report.json")
        with open(path, "w") as fh:
            fh.write(render_json(report))
        written.append(path)
    if "csv" in config["formats"]:
        path = os.path.join(outdir, "series.csv")
        write_csv(path, ledger)
        written.append(path)
    if args.figures:
        from .figures import render_figures

        written += render_figures(config["scenario"], report["results"], outdir)
    for path in written:
        print(path)
    return 0


def cmd_list(_args) -> int:
    for name in sorted(SCENARIOS):
        entry = SCENARIOS[name]
        print(f"{name}: {entry['describe']}")
        print(f"    parameters: {entry['parameters']}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qconserve",
        description="composite-system conservation audits for measured "
        "quantum systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one scenario from a JSON config")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument(
        "--format", default=None, help="comma list from {json,csv}"
    )
    p_run.add_argument(
        "--figures", action="store_true", help="render PNG figures as well"
    )
    p_run.set_defaults(func=cmd_run)
    p_list = sub.add_parser("list", help="list available scenarios")
    p_list.set_defaults(func=cmd_list)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
