"""Command-line front end: simulate / diagnose / perturb / estimate.

A scenario is a single JSON document; file paths inside it are resolved
relative to the scenario file so a run is reproducible from one directory.
Exit codes: 0 success, 1 error, 2 estimation ran but the data were not
identifiable.

Scenario schema (SEIR shown; SIR omits beta_e/sigma and the e seeds):

    {
      "model": "seir",
      "n": 20,
      "network": "net.csv",            // edge-list, or "layers": [...] extras
      "params": {"beta_e": 0.04, "beta": 0.06, "sigma": 0.4,
                 "gamma": 0.3, "h": 1.0},
      "initial": {"seeds": {"e": {"1": 0.02, "2": 0.03}, "p": {"1": 0.01}}},
      "steps": 100,
      "noise": {"e_slope": 0.015, "e_floor": 0.0001,
                "x_slope": 0.008, "x_floor": 0.00001,
                "seed": 0, "start_k": 14},
      "seed": 0
    }

Parameter values may be scalars, per-node lists, or a path to a text file
with one value per line. "initial" may instead give explicit "s"/"e"/"p"/"r"
lists.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dynamics, estimation, graph, spectral

log = logging.getLogger("netepi")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_IDENTIFIABLE = 2


class ScenarioError(ValueError):
    pass


def _resolve(value, base: Path, n: int) -> np.ndarray:
    if isinstance(value, str):
        path = base / value
        return np.array([float(x) for x in path.read_text().split()])
    return np.asarray(value, dtype=float) if isinstance(value, list) else np.full(n, float(value))


def load_scenario(path: str | Path) -> dict:
    path = Path(path)
    sc = json.loads(path.read_text())
    base = path.parent
    model = sc.get("model")
    if model not in ("sir", "seir"):
        raise ScenarioError("scenario 'model' must be 'sir' or 'seir'")
    n = int(sc["n"])
    net_path = base / sc["network"]
    if not net_path.exists():
        raise ScenarioError(f"network file not found: {net_path}")
    with open(net_path) as fh:
        layers = []
        for lp in sc.get("layers", []):
            lpath = base / lp
            if not lpath.exists():
                raise ScenarioError(f"layer file not found: {lpath}")
            layers.append(graph.load_network(lpath.read_text(), n).adjacency)
        net = graph.load_network(fh, n)
        if layers:
            net = graph.Network(net.adjacency, layers=tuple(layers))
    p = sc["params"]
    h = float(p.get("h", 1.0))
    if model == "sir":
        params = dynamics.SirParams(beta=_resolve(p["beta"], base, n),
                                    gamma=_resolve(p["gamma"], base, n), h=h)
    else:
        params = dynamics.SeirParams(
            beta_e=_resolve(p["beta_e"], base, n),
            beta=_resolve(p["beta"], base, n),
            sigma=_resolve(p["sigma"], base, n),
            gamma=_resolve(p["gamma"], base, n), h=h,
            layer_beta_e=tuple(_resolve(v, base, n) for v in p.get("layer_beta_e", [])),
            layer_beta=tuple(_resolve(v, base, n) for v in p.get("layer_beta", [])),
        )
    initial = _build_initial(sc.get("initial", {}), model, n)
    noise = None
    if "noise" in sc:
        nz = dict(sc["noise"])
        nz.setdefault("seed", sc.get("seed", 0))
        noise = estimation.NoiseModel(**nz)
    return {
        "model": model,
        "n": n,
        "net": net,
        "params": params,
        "initial": initial,
        "steps": int(sc.get("steps", 0)),
        "noise": noise,
        "seed": int(sc.get("seed", 0)),
    }


def _build_initial(spec: dict, model: str, n: int) -> dynamics.EpidemicState:
    comps = ("s", "p", "r") if model == "sir" else ("s", "e", "p", "r")
    if "seeds" in spec:
        vals = {c: np.zeros(n) for c in comps if c != "s"}
        for comp, seeds in spec["seeds"].items():
            if comp not in vals:
                raise ScenarioError(f"cannot seed compartment {comp!r} for model {model}")
            for node, level in seeds.items():
                vals[comp][int(node)] = float(level)
        s = 1.0 - sum(vals.values())
        return dynamics.EpidemicState(s=s, **{c: vals[c] for c in vals})
    try:
        arrays = {c: np.asarray(spec[c], dtype=float) for c in comps}
    except KeyError as exc:
        raise ScenarioError(f"initial state missing compartment {exc}") from exc
    e = arrays.pop("e", None)
    return dynamics.EpidemicState(e=e, **arrays)


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    check = (dynamics.check_assumption_sir(sc["params"], sc["net"])
             if sc["model"] == "sir"
             else dynamics.check_assumption_seir(sc["params"], sc["net"]))
    if not check.ok:
        for v in check.violations:
            print(f"assumption violation: {v}", file=sys.stderr)
        return EXIT_ERROR
    traj = dynamics.simulate(sc["initial"], sc["params"], sc["net"],
                             steps=sc["steps"], strict=args.strict)
    (out / "trajectory.csv").write_text(dynamics.trajectory_to_csv(traj))
    summary = {
        "model": sc["model"],
        "steps": sc["steps"],
        "h": traj.h,
        "assumptions_ok": True,
        "simplex_tolerance": dynamics.SUM_TOL,
        "states": len(traj),
    }
    (out / "validation.json").write_text(json.dumps(summary, indent=2))
    log.info("wrote %s", out / "trajectory.csv")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    sc = load_scenario(args.scenario)
    traj = dynamics.trajectory_from_csv(Path(args.trajectory).read_text(),
                                        h=sc["params"].h)
    report = spectral.convergence_diagnostics(traj, sc["params"], sc["net"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lambda.csv").write_text(spectral.report_to_csv(report))
    (out / "convergence.json").write_text(spectral.report_to_json(report))
    return EXIT_OK


def cmd_perturb(args) -> int:
    sc = load_scenario(args.scenario)
    if sc["noise"] is None:
        print("scenario has no noise model", file=sys.stderr)
        return EXIT_ERROR
    noise = sc["noise"]
    if args.seed is not None:
        noise = estimation.NoiseModel(
            e_slope=noise.e_slope, e_floor=noise.e_floor,
            x_slope=noise.x_slope, x_floor=noise.x_floor,
            seed=args.seed, start_k=noise.start_k,
            param_is_std=noise.param_is_std)
    traj = dynamics.trajectory_from_csv(Path(args.trajectory).read_text(),
                                        h=sc["params"].h)
    measured = estimation.apply_noise(traj, noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "measured.csv").write_text(dynamics.trajectory_to_csv(measured))
    sidecar = {
        "seed": noise.seed,
        "start_k": noise.start_k,
        "e_slope": noise.e_slope,
        "e_floor": noise.e_floor,
        "x_slope": noise.x_slope,
        "x_floor": noise.x_floor,
        "param_is_std": noise.param_is_std,
    }
    (out / "noise.json").write_text(json.dumps(sidecar, indent=2))
    return EXIT_OK


def cmd_estimate(args) -> int:
    sc = load_scenario(args.scenario)
    traj = dynamics.trajectory_from_csv(Path(args.trajectory).read_text(),
                                        h=sc["params"].h)
    report = estimation.estimate_pipeline(traj, sc["net"], sc["model"],
                                          node=args.node)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "estimate.json").write_text(estimation.report_to_json(report))
    if report.verdict is not None and not report.verdict.identifiable:
        print("data not identifiable: " + ", ".join(report.verdict.failed_conditions),
              file=sys.stderr)
        return EXIT_NOT_IDENTIFIABLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netepi",
                                     description="Networked SIR/SEIR simulation and estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_traj=False):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        strict = p.add_mutually_exclusive_group()
        strict.add_argument("--strict", dest="strict", action="store_true", default=True)
        strict.add_argument("--no-strict", dest="strict", action="store_false")
        if with_traj:
            p.add_argument("--trajectory", required=True, help="trajectory CSV input")

    common(sub.add_parser("simulate", help="run a scenario and write the trajectory"))
    common(sub.add_parser("diagnose", help="eigenvalue/convergence diagnostics"), with_traj=True)
    common(sub.add_parser("perturb", help="inject measurement noise"), with_traj=True)
    est = sub.add_parser("estimate", help="recover spread parameters")
    common(est, with_traj=True)
    est.add_argument("--node", type=int, default=None,
                     help="estimate per-node parameters for this node only")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("NETEPI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "diagnose": cmd_diagnose,
        "perturb": cmd_perturb,
        "estimate": cmd_estimate,
    }
    try:
        return handlers[args.command](args)
    except (ScenarioError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
