"""Command-line entry point.

Subcommands: ``parse`` (ingest + normalize), ``derive`` (network constants),
``ploss`` (pressure-loss curve sampling), ``build`` (model generation, batch
capable), ``validate`` (solution checking) and ``oracle`` (tree-network
ground truth).  Relative input paths are also resolved against the
``GASNOMVAL_DATA`` directory; an optional JSON config file provides flag
defaults, explicit flags win.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from .errors import GasNomValError
from .export import (
    model_fingerprint,
    model_to_text,
    parse_model,
    parse_solution,
    serialize_model,
)
from .gaslib import load_instance
from .model import CUT_FAMILIES, build_instance, instance_stats
from .network import ArcKind, DerivedConstants, NodeKind
from .oracle import tree_oracle
from .pressure_loss import PipeGeometry, derive_pipe_params, sample_curves
from .validation import validate

ENV_DATA_DIR = "GASNOMVAL_DATA"


def _resolve(path: str) -> str:
    if os.path.exists(path):
        return path
    base = os.environ.get(ENV_DATA_DIR)
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    raise GasNomValError(f"input file not found: {path}")


def _parse_cuts(request: str) -> list[str]:
    if request in ("", "none"):
        return []
    if request == "all":
        return list(CUT_FAMILIES)
    families = [f.strip() for f in request.split(",") if f.strip()]
    for fam in families:
        if fam not in CUT_FAMILIES:
            raise GasNomValError(
                f"unknown cut family {fam!r}; choose from {CUT_FAMILIES} or all|none"
            )
    return families


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_parse(args) -> int:
    network, scenario, consts = load_instance(_resolve(args.net), _resolve(args.scn))
    summary = {
        "nodes": len(network.nodes),
        "nodes_by_kind": {
            kind.value: len(network.nodes_of_kind(kind)) for kind in NodeKind
        },
        "arcs": len(network.arcs),
        "arcs_by_kind": {
            kind.value: len(network.arcs_of_kind(kind)) for kind in ArcKind
        },
        "scenario": scenario.id,
        "total_supply_m3_per_s": scenario.total_supply(),
        "balance_residual_m3_per_s": scenario.imbalance(),
    }
    if args.dump:
        dump = {
            "network": {
                "nodes": {nid: _node_dump(n) for nid, n in network.nodes.items()},
                "arcs": {aid: _arc_dump(a) for aid, a in network.arcs.items()},
            },
            "scenario": {
                "id": scenario.id,
                "q_nom": scenario.q_nom,
                "flow_bounds": scenario.flow_bounds,
                "pressure_overrides": scenario.pressure,
                "balance_shift": scenario.balance_shift,
            },
            "derived_constants": asdict(consts),
        }
        Path(args.dump).write_text(
            json.dumps(dump, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        summary["dump"] = args.dump
    _print_json(summary)
    return 0


def _node_dump(n) -> dict:
    out = {
        "kind": n.kind.value,
        "p_lo": n.p_lo,
        "p_hi": n.p_hi,
        "H_lo": n.H_lo,
        "H_hi": n.H_hi,
        "q_nom": n.q_nom,
    }
    if n.H_sup is not None:
        out["H_sup"] = n.H_sup
    if n.q_lo is not None:
        out["q_lo"], out["q_hi"] = n.q_lo, n.q_hi
    return out


def _arc_dump(a) -> dict:
    out = {
        "from": a.from_node,
        "to": a.to_node,
        "kind": a.kind.value,
        "q_lo": a.q_lo,
        "q_hi": a.q_hi,
    }
    if a.delta_hi is not None:
        out["delta_hi"] = a.delta_hi
    if a.pipe_geom is not None:
        out["pipe"] = asdict(a.pipe_geom)
    return out


def _cmd_derive(args) -> int:
    _, _, consts = load_instance(_resolve(args.net), _resolve(args.scn))
    _print_json(asdict(consts))
    return 0


def _cmd_ploss(args) -> int:
    diameter = args.pipe_diameter
    geom = PipeGeometry(
        length=args.pipe_length,
        diameter=diameter,
        area=3.141592653589793 * diameter * diameter / 4.0,
        roughness=args.pipe_roughness,
    )
    consts = DerivedConstants(
        R_sm=args.r_sm,
        T_m=args.t_m,
        z_m=args.z_m,
        H_m=0.0,
        p_m=0.0,
        p_cm=1.0,
        T_cm=1.0,
        rho_norm=args.rho_norm,
        molar_mass_m=8.3144621 / args.r_sm,
    )
    params = derive_pipe_params(geom, consts)
    steps = max(2, args.q_steps)
    grid = [
        args.q_min + i * (args.q_max - args.q_min) / (steps - 1) for i in range(steps)
    ]
    rows = sample_curves(params, grid)
    lines = ["q,hppc,sqrt,fs,pkr"]
    lines += [",".join("%.17g" % col for col in row) for row in rows]
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        sidecar = args.params_out or (args.out + ".params.json")
    else:
        sys.stdout.write(csv_text)
        sidecar = args.params_out
    if sidecar:
        payload = {
            "pipe_loss_params": asdict(params),
            "gas_constants": {
                "R_sm": args.r_sm,
                "T_m": args.t_m,
                "z_m": args.z_m,
                "rho_norm": args.rho_norm,
            },
            "units": {"q": "kg_per_s", "phi": "Pa^2"},
        }
        Path(sidecar).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _build_one(
    net_path: str,
    scn_path: str,
    formulation: str,
    ploss: str,
    cuts: list[str],
    out_dir: Path,
) -> dict:
    started = time.perf_counter()
    network, scenario, consts = load_instance(net_path, scn_path)
    model = build_instance(network, scenario, consts, formulation, ploss, cuts)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_bytes = serialize_model(model)
    (out_dir / "model.json").write_bytes(model_bytes)
    (out_dir / "model.txt").write_text(model_to_text(model), encoding="utf-8")
    stats = instance_stats(model)
    return {
        "scenario_file": os.path.basename(scn_path),
        "scenario": scenario.id,
        "out_dir": str(out_dir),
        "variables": stats["variable_count"],
        "binaries": stats["binary_count"],
        "constraints_by_tag": stats["constraints_by_tag"],
        "build_seconds": time.perf_counter() - started,
    }


def _batch_worker(task: tuple) -> dict:
    return _build_one(*task[:4], list(task[4]), Path(task[5]))


def _cmd_build(args) -> int:
    cuts = _parse_cuts(args.cuts)
    net_path = _resolve(args.net)
    out_root = Path(args.out_dir)
    if args.scn:
        row = _build_one(
            net_path, _resolve(args.scn), args.formulation, args.ploss, cuts, out_root
        )
        _print_json(row)
        return 0
    scn_dir = Path(_resolve(args.scn_dir))
    scn_files = sorted(p for p in scn_dir.iterdir() if p.suffix == ".scn")
    if not scn_files:
        raise GasNomValError(f"no .scn files in {scn_dir}")
    tasks = [
        (net_path, str(p), args.formulation, args.ploss, tuple(cuts),
         str(out_root / p.stem))
        for p in scn_files
    ]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_batch_worker, tasks))
    else:
        rows = [_batch_worker(task) for task in tasks]
    rows.sort(key=lambda r: r["scenario_file"])
    summary = {
        "network": os.path.basename(net_path),
        "formulation": args.formulation,
        "ploss": args.ploss,
        "cuts": cuts,
        "instances": rows,
    }
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _print_json({"instances": len(rows), "summary": str(out_root / "summary.json")})
    return 0


def _cmd_validate(args) -> int:
    model_bytes = Path(_resolve(args.model)).read_bytes()
    model = parse_model(model_bytes)
    fp = model_fingerprint(model)
    solution = parse_solution(
        Path(_resolve(args.solution)).read_bytes(), model, fp
    )
    report = validate(model, solution.values, tol=args.tol)
    payload = report.to_dict()
    payload["completed_variables"] = solution.completed
    _print_json(payload)
    return 0 if report.feasible else 1


def _cmd_oracle(args) -> int:
    network, scenario, consts = load_instance(_resolve(args.net), _resolve(args.scn))
    result = tree_oracle(network, scenario, consts, variant=args.ploss)
    payload = result.to_dict()
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _print_json({"feasible": result.feasible, "out": args.out})
    else:
        _print_json(payload)
    return 0 if result.feasible else 1


def _add_instance_args(sub) -> None:
    sub.add_argument("--net", required=True, help="GasLib network file (.net)")
    sub.add_argument("--scn", required=True, help="GasLib scenario file (.scn)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gasnomval",
        description="Gas network nomination validation toolkit",
    )
    parser.add_argument(
        "--config", help="JSON file with default flag values (explicit flags win)"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("parse", help="ingest and normalize a network + scenario")
    _add_instance_args(p)
    p.add_argument("--dump", help="write the normalized instance as JSON")
    p.set_defaults(func=_cmd_parse)

    p = subs.add_parser("derive", help="print the derived network constants")
    _add_instance_args(p)
    p.set_defaults(func=_cmd_derive)

    p = subs.add_parser("ploss", help="sample pressure-loss curves for one pipe")
    p.add_argument("--pipe-diameter", type=float, required=True, help="m")
    p.add_argument("--pipe-roughness", type=float, required=True, help="m")
    p.add_argument("--pipe-length", type=float, default=1000.0, help="m")
    p.add_argument("--q-min", type=float, default=-1.0, help="kg/s")
    p.add_argument("--q-max", type=float, default=1.0, help="kg/s")
    p.add_argument("--q-steps", type=int, default=201)
    p.add_argument("--r-sm", type=float, default=500.0, help="J/(kg K)")
    p.add_argument("--t-m", type=float, default=288.15, help="K")
    p.add_argument("--z-m", type=float, default=0.9)
    p.add_argument("--rho-norm", type=float, default=0.8, help="kg/m3")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.add_argument("--params-out", help="sidecar JSON with the pipe constants")
    p.set_defaults(func=_cmd_ploss)

    p = subs.add_parser("build", help="assemble and export model instances")
    p.add_argument("--net", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scn", help="single scenario file")
    group.add_argument("--scn-dir", help="directory of .scn files (batch mode)")
    p.add_argument("--formulation", choices=("minlp", "nlp"), required=True)
    p.add_argument("--ploss", choices=("sqrt", "fs", "pkr"), required=True)
    p.add_argument(
        "--cuts", default="none",
        help="comma list of {mccormick,flowdir,bilinear_d}, or all|none",
    )
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1, help="batch parallelism degree")
    p.set_defaults(func=_cmd_build)

    p = subs.add_parser("validate", help="check a solution file against a model")
    p.add_argument("--model", required=True, help="model.json")
    p.add_argument("--solution", required=True, help="solution.json")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_validate)

    p = subs.add_parser("oracle", help="tree-network feasibility ground truth")
    _add_instance_args(p)
    p.add_argument("--ploss", choices=("sqrt", "fs", "pkr"), default="fs")
    p.add_argument("--out", help="write the oracle result as JSON")
    p.set_defaults(func=_cmd_oracle)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Inject config-file values as defaults: flags given on the line win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise GasNomValError("--config needs a file argument")
    config_path = argv[idx + 1]
    with open(config_path, "r", encoding="utf-8") as handle:
        defaults = json.load(handle)
    if not isinstance(defaults, dict):
        raise GasNomValError("config file must hold a JSON object")
    out = list(argv)
    for key, value in sorted(defaults.items()):
        flag = "--" + key.replace("_", "-")
        if flag not in out:
            out.extend([flag, str(value)])
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except GasNomValError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
