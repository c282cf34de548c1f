"""Command-line front end.

    sqzspec spectrum     --config run.json --out DIR
    sqzspec planewave    --config scene.json --out DIR
    sqzspec figure       --preset fig1 --out DIR
    sqzspec oracle-check --out DIR

Every config key can be overridden with ``--set key=value`` (dotted keys
reach into nested objects, values are parsed as JSON when possible) and the
detuning grid with ``--grid MIN:MAX:POINTS`` in units of gamma.

Exit status: 0 success, 1 invalid input, 2 infeasible parameters,
3 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .channels import (
    AggregateSqueezing,
    ChannelSet,
    aggregate_to_dict,
    channel_set_from_json,
    realize_target,
)
from .errors import DegenerateInputError, InfeasibleError, InvalidInputError
from .features import channel_features
from .oracle_check import run_oracle_check
from .planewave import aggregate_from_sphere, direction_spectrum, fixed_polarization_spectrum, scene_from_dict
from .spectra import channel_spectrum, observe
from .transforms import DetuningGrid

log = logging.getLogger("sqzspec")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 1, 2, 3
PRESETS = ("fig1", "fig2", "fig3")
DEFAULT_GRID_SPEC = "-8:8:2001"


class OracleFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation status instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# --- configuration ------------------------------------------------------------

def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("sqzspec").joinpath("presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, pairs: list[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys address nested objects."""
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise InvalidInputError(f"--set expects key=value, got {pair!r}")
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise InvalidInputError(f"--set {key}: {p!r} is not an object")
        node[parts[-1]] = _parse_value(value)
    return cfg


def build_config(args, base: dict | None = None) -> dict:
    cfg = dict(base or {})
    if args.config:
        try:
            user = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from exc
        if isinstance(user, list):
            user = {"channels": user}
        if not isinstance(user, dict):
            raise InvalidInputError("config must be a JSON object")
        cfg.update(user)
    apply_overrides(cfg, args.set)
    if args.grid:
        cfg["grid"] = args.grid
    cfg.setdefault("grid", DEFAULT_GRID_SPEC)
    return cfg


def _grid(cfg: dict) -> DetuningGrid:
    g = cfg["grid"]
    if isinstance(g, str):
        return DetuningGrid.parse(g)
    if isinstance(g, dict):
        return DetuningGrid.linspace(float(g["min"]), float(g["max"]), int(g["points"]))
    raise InvalidInputError("grid must be 'MIN:MAX:POINTS' or {min, max, points}")


def _phase(obj: dict, key: str = "phase") -> float:
    if f"{key}_pi" in obj:
        return float(obj[f"{key}_pi"]) * math.pi
    return float(obj.get(key, 0.0))


def _scaled(grid: DetuningGrid, gamma: float) -> DetuningGrid:
    return grid if gamma == 1.0 else DetuningGrid(grid.detunings * gamma)


# --- subcommands --------------------------------------------------------------

def _channel_setup(cfg: dict) -> tuple[ChannelSet, int, float | None]:
    if "channels" in cfg:
        cs = channel_set_from_json(cfg["channels"], allow_mixed=bool(cfg.get("allow_mixed", False)))
        return cs, int(cfg.get("observe", 0)), None
    if "target" in cfg and "channel" in cfg:
        t, c = cfg["target"], cfg["channel"]
        gamma = float(t.get("gamma", 1.0))
        if "m_squared_ratio" in t:
            target = AggregateSqueezing.from_ratio(float(t["big_n"]), float(t["m_squared_ratio"]), gamma)
        else:
            target = AggregateSqueezing.from_moments(float(t["big_n"]), float(t["big_m"]), gamma)
        w = c.get("weight")
        cs, w = realize_target(target, float(c["n_alpha"]), _phase(c), None if w in (None, "max") else float(w))
        return cs, 0, w
    raise InvalidInputError("spectrum config needs 'channels' or both 'target' and 'channel'")


def run_channel(cfg: dict, out: Path) -> dict:
    cs, idx, weight = _channel_setup(cfg)
    grid = _grid(cfg)
    agg, ch = observe(cs, idx)
    dec = channel_spectrum(agg, ch, _scaled(grid, agg.gamma),
                           include_background=bool(cfg.get("include_background", True)))
    d = grid.detunings
    feats = channel_features(agg, ch, float(d[0]), float(d[-1]))
    io.write_spectrum_csv(out / "spectrum.csv", dec, detuning_unit=agg.gamma)
    summary = {"aggregate": aggregate_to_dict(agg),
               "observed": {"index": idx, "n_alpha": ch.n_alpha,
                            "m_alpha": [ch.m_alpha.real, ch.m_alpha.imag],
                            "gamma_alpha": ch.gamma_alpha},
               "weight": weight, "features": feats.to_dict(), "grid": cfg["grid"]}
    io.write_json(out / "summary.json", summary)
    return summary


def run_planewave(cfg: dict, out: Path) -> dict:
    dipole, sq, det, analyzer, order = scene_from_dict(cfg)
    grid = _grid(cfg)
    agg = aggregate_from_sphere(dipole, sq, order)
    g = _scaled(grid, agg.gamma)
    pol = cfg.get("polarization")
    if pol is None:
        dec = direction_spectrum(dipole, sq, det, agg, g, analyzer=analyzer, order=order)
    else:
        dec = fixed_polarization_spectrum(dipole, sq, det, agg, g, lam=int(pol), analyzer=analyzer,
                                          order=order)
    meta = {"geometric_prefactor": dec.metadata["geometric_prefactor"],
            "distance": det.distance, "projected_area": det.projected_area,
            "quadrature_order": order, "polarization": "both" if pol is None else int(pol)}
    io.write_spectrum_csv(out / "planewave.csv", dec, detuning_unit=agg.gamma, metadata=meta)
    summary = {"aggregate": aggregate_to_dict(agg), "quadrature": agg.metadata,
               "spectrum": dec.metadata}
    io.write_json(out / "summary.json", summary)
    return summary


def _figure_runs(cfg: dict):
    target = AggregateSqueezing.from_ratio(float(cfg["big_n"]), float(cfg["m_squared_ratio"]))
    sweep = cfg.get("sweep", "phase")
    if sweep == "phase":
        for p in cfg["phases_pi"]:
            yield f"phi_{float(p):g}pi", {"phase_pi": float(p)}, target, float(cfg["n_alpha"]), float(p) * math.pi
    elif sweep == "zeta":
        n = target.big_n
        for z in cfg["zetas"]:
            n_alpha = (1 + float(z) / 1000) * n * n / (2 * n + 1)
            yield f"zeta_{float(z):g}", {"zeta": float(z)}, target, n_alpha, _phase(cfg)
    else:
        raise InvalidInputError(f"unknown sweep {sweep!r}")


def run_figure(cfg: dict, out: Path) -> dict:
    grid = _grid(cfg)
    name = cfg.get("preset", "figure")
    entries = []
    for label, value, target, n_alpha, phase in _figure_runs(cfg):
        cs, w = realize_target(target, n_alpha, phase)
        agg, ch = observe(cs, 0)
        dec = channel_spectrum(agg, ch, grid)
        io.write_spectrum_csv(out / f"{name}_{label}.csv", dec)
        io.write_atomic(out / f"{name}_{label}_reference.csv", io.reference_csv(dec))
        feats = channel_features(agg, ch, float(grid.detunings[0]), float(grid.detunings[-1]))
        entries.append({**value, "label": label, "weight": w, "n_alpha": ch.n_alpha,
                        "m_alpha": [ch.m_alpha.real, ch.m_alpha.imag],
                        "central_value": float(np.interp(0.0, dec.detunings, dec.total)),
                        "central_above_background": float(np.interp(0.0, dec.detunings,
                                                                    dec.total - dec.background)),
                        "features": feats.to_dict()})
    summary = {"preset": name, "aggregate": aggregate_to_dict(target),
               "weights_note": "gamma_alpha/gamma is the largest weight compatible with the aggregate",
               "runs": entries}
    io.write_json(out / f"{name}_summary.json", summary)
    return summary


def run_oracle(cfg: dict, out: Path) -> dict:
    report = run_oracle_check(n_random=int(cfg.get("n_random", 20)), seed=int(cfg.get("seed", 0)),
                              include_fig3=bool(cfg.get("include_fig3", True)),
                              mutate=bool(cfg.get("mutate", False)),
                              spectra=bool(cfg.get("spectra", True)),
                              grid=_grid(cfg))
    io.write_json(out / "oracle_report.json", report)
    failed = [t for t in report["tests"] if not t["pass"]]
    for t in failed:
        log.error("FAIL %s: max_dev=%.3g tol=%.3g", t["test"], t["max_dev"], t["tol"])
    if failed:
        raise OracleFailure(f"{len(failed)} of {len(report['tests'])} oracle comparisons failed")
    return report


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    common.add_argument("--grid", metavar="MIN:MAX:POINTS", help="detuning grid in units of gamma")
    common.add_argument("--set", metavar="key=value", action="append", default=[],
                        help="override a config entry (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sqzspec", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="channel spectrum from a channel set")
    sub.add_parser("planewave", parents=[common], help="direction-resolved plane-wave spectrum")
    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure preset")
    fig.add_argument("--preset", choices=PRESETS, required=True)
    orc = sub.add_parser("oracle-check", parents=[common], help="closed form vs master-equation oracle")
    orc.add_argument("--mutate", action="store_true", help="corrupt gamma_+ to test the harness")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        if args.command == "figure":
            cfg = build_config(args, load_preset(args.preset))
            result = run_figure(cfg, out)
            for r in result["runs"]:
                print(f"{r['label']}: weight={r['weight']:.6g} central={r['central_value']:.6g}")
        elif args.command == "spectrum":
            result = run_channel(build_config(args), out)
            agg = result["aggregate"]
            print(f"N={agg['big_n']:.6g} M={agg['big_m']:.6g} "
                  f"gamma+={agg['gamma_plus']:.6g} gamma-={agg['gamma_minus']:.6g}")
        elif args.command == "planewave":
            result = run_planewave(build_config(args), out)
            print(f"geometric_prefactor={result['spectrum']['geometric_prefactor']:.6g}")
        else:
            cfg = build_config(args)
            if args.mutate:
                cfg["mutate"] = True
            result = run_oracle(cfg, out)
            print(f"oracle-check: {len(result['tests'])} comparisons passed")
    except OracleFailure as exc:
        print(f"oracle-check failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except InfeasibleError as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidInputError, DegenerateInputError, KeyError, TypeError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
