"""Command-line entry point: ``stq-lru {verify,search,simulate,report}``.

Exit codes: 0 pass, 1 domain failure (verdict fails, no solution found),
2 input error, 3 internal consistency error (e.g. a non-unitary operator).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .lattice import LatticeError, build_lattice, run
from .search import TEMPLATES, optimize, reference_set_consistency, reference_set_reconstruction, search_report
from .spin import SpinError
from .verify import DEFAULT_TOL, LruKind, LruVerdict, NonUnitaryError, assemble, format_sequence, read_sequence, verify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

SIM_KEYS = {"n", "p_leak", "lru_mode", "lru_failure", "seed", "rounds", "burn_in", "transfer_prob"}
SIM_REQUIRED = {"n", "p_leak", "lru_mode", "seed", "rounds"}


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: Optional[int]
    version: str = __version__
    inputs: dict = field(default_factory=dict)

    @classmethod
    def for_files(cls, subcommand: str, config: dict, seed: Optional[int], paths: Sequence[Path]) -> "RunManifest":
        return cls(subcommand, config, seed, inputs={str(p): sha256(p) for p in paths})


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(payload: dict, out_dir: Optional[Path], name: str) -> None:
    text = dump(payload)
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text, encoding="utf-8")


def _load_json(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return data


# -- verify -----------------------------------------------------------------


def _load_operator(path: Path):
    """A gate-sequence text file, or a ``.npy`` 16x16 matrix."""
    if not path.exists():
        raise InputError(f"no such file: {path}")
    if path.suffix == ".npy":
        m = np.load(path)
        if m.shape != (16, 16):
            raise InputError(f"{path}: expected a 16x16 matrix, got {m.shape}")
        return m, None
    try:
        seq = read_sequence(path)
    except (SpinError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return assemble(seq), seq


def cmd_verify(args) -> int:
    path = Path(args.sequence)
    op, seq = _load_operator(path)
    kind = LruKind.parse(args.target)
    verdict = verify(op, kind, args.tol)
    manifest = RunManifest.for_files("verify", {"target": kind.value, "tol": args.tol}, None, [path])
    payload = {"manifest": asdict(manifest), "verdict": verdict.to_dict()}
    if seq is not None:
        payload["sequence"] = [str(g) for g in seq]
    _emit(payload, args.out, "verdict.json")
    return EXIT_OK if verdict.passed else EXIT_FAIL


# -- search -----------------------------------------------------------------


def _resolve_search(args) -> dict:
    cfg = {"template": None, "target": None, "restarts": 100, "seed": None, "tol": DEFAULT_TOL, "method": "lm"}
    inputs = []
    if args.config:
        inputs.append(Path(args.config))
        extra = _load_json(args.config)
        unknown = set(extra) - set(cfg)
        if unknown:
            raise InputError(f"unknown search config keys: {sorted(unknown)}")
        cfg.update(extra)
    for key in ("template", "target", "restarts", "seed", "tol"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if cfg["template"] not in TEMPLATES:
        raise InputError(f"unknown template {cfg['template']!r}; known: {', '.join(TEMPLATES)}")
    if cfg["target"] is None or cfg["seed"] is None:
        raise InputError("search needs --target and --seed")
    cfg["target"] = LruKind.parse(cfg["target"]).value
    if int(cfg["restarts"]) < 1:
        raise InputError("--restarts must be >= 1")
    cfg["inputs"] = inputs
    return cfg


def cmd_search(args) -> int:
    cfg = _resolve_search(args)
    inputs = cfg.pop("inputs")
    template = TEMPLATES[cfg["template"]]
    sols = optimize(template, cfg["target"], int(cfg["restarts"]), int(cfg["seed"]), float(cfg["tol"]), cfg["method"])
    report = search_report(template, cfg["target"], int(cfg["restarts"]), int(cfg["seed"]), float(cfg["tol"]), sols)
    manifest = RunManifest.for_files("search", cfg, int(cfg["seed"]), inputs)
    report["manifest"] = asdict(manifest)
    _emit(report, args.out, f"search_{template.id}_{cfg['target']}.json")
    if sols and args.out is not None:
        header = [f"{template.id} solution for {cfg['target']}, seed {cfg['seed']}, cost {sols[0].cost:.3e}"]
        text = format_sequence(template.descriptors(sols[0].params), header)
        (args.out / f"{template.id}_{cfg['target']}.seq").write_text(text, encoding="utf-8")
    return EXIT_OK if sols else EXIT_FAIL


# -- simulate ---------------------------------------------------------------


def _sim_config(path: Path) -> dict:
    cfg = _load_json(path)
    unknown = set(cfg) - SIM_KEYS
    missing = SIM_REQUIRED - set(cfg)
    if unknown or missing:
        raise InputError(f"{path}: unknown keys {sorted(unknown)}, missing keys {sorted(missing)}")
    return cfg


def cmd_simulate(args) -> int:
    if not args.config:
        raise InputError("simulate needs --config FILE")
    path = Path(args.config)
    cfg = _sim_config(path)
    try:
        lattice = build_lattice(
            int(cfg["n"]), float(cfg["p_leak"]), cfg["lru_mode"], float(cfg.get("lru_failure", 0.0)),
            int(cfg["seed"]), float(cfg.get("transfer_prob", 0.5)),
        )
        report = run(lattice, int(cfg["rounds"]), int(cfg.get("burn_in", 0)))
    except (LatticeError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    manifest = RunManifest.for_files("simulate", cfg, int(cfg["seed"]), [path])
    payload = report.to_dict()
    payload["manifest"] = asdict(manifest)
    _emit(payload, args.out, "simulate.json")
    if args.out is not None:
        (args.out / "series.csv").write_text(report.series_csv(), encoding="utf-8")
    return EXIT_OK


# -- report -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_reference_sets() -> list[str]:
    res = reference_set_consistency()
    lines = [
        "## Tabulated SINL parameter sets: pairwise sums",
        "",
        "| sets | component | sum | nearest 1/2 | residual | residual mod 1/2 |",
        "|---|---|---|---|---|---|",
    ]
    for r in res["rows"]:
        a, b = r["sets"]
        lines.append(
            f"| ({a},{b}) | {r['component']} | {r['sum']:.15f} | {r['expected']} | {r['residual']:.2e} | {r['residual_mod_half']:.2e} |"
        )
    status = "pass" if res["pass"] else "FAIL"
    lines += ["", f"{res['n_residuals']} residuals, max {res['max_residual']:.2e} ({status} at 1e-12)", ""]
    lines += [
        "## Set (1) substituted into gradient-free nine-step scaffolds",
        "",
        "| scaffold | angle order | cost | SINL verdict | layout |",
        "|---|---|---|---|---|",
    ]
    for r in reference_set_reconstruction("1"):
        verdict = "pass" if r["pass"] else "fail"
        lines.append(f"| {r['scaffold']} | {r['order']} | {r['cost']:.4f} | {verdict} | `{r['layout'].replace(' | ', ' ; ')}` |")
    return lines + [""]


def render_verdict(v: LruVerdict, title: str) -> list[str]:
    mods = v.moduli
    lines = [
        f"## {title}",
        "",
        f"- target: {v.kind}, verdict: {'pass' if v.passed else 'fail'} (tol {v.tol:g})",
        f"- theta: {_fmt(v.theta)}",
        "- residuals: " + ", ".join(f"{r:.2e}" for r in v.residuals),
        "",
        "| constant | value | modulus |",
        "|---|---|---|",
    ]
    for name, val, m in zip(("alpha1", "beta1", "alpha2", "beta2"), (v.alpha1, v.beta1, v.alpha2, v.beta2), mods):
        lines.append(f"| {name} | {val.real:+.6f}{val.imag:+.6f}j | {m:.6f} |")
    return lines + [""]


def render_search(data: dict, title: str) -> list[str]:
    lines = [
        f"## {title}",
        "",
        f"- template {data['template']}: `{data['template_layout']}`",
        f"- target {data['target']}, seed {data['seed']}, restarts {data['restarts']}, tol {data['tol']:g}",
        f"- distinct solutions: {len(data['solutions'])}",
        "",
    ]
    if data["solutions"]:
        lines += ["| # | cost | |a1| | |b1| | |a2| | |b2| | params |", "|---|---|---|---|---|---|---|"]
        for k, s in enumerate(data["solutions"]):
            v = LruVerdict.from_dict(s["verdict"])
            mods = " | ".join(f"{m:.6f}" for m in v.moduli)
            params = ", ".join(f"{p:.6f}" for p in s["params"])
            lines.append(f"| {k} | {s['cost']:.2e} | {mods} | {params} |")
        lines.append("")
    return lines


def render_simulation(data: dict, title: str) -> list[str]:
    layout, c = data["layout"], data["counters"]
    z = data["z_score"]
    return [
        f"## {title}",
        "",
        "| quantity | value |",
        "|---|---|",
        f"| lattice n | {layout['n']} |",
        f"| data qubits | {layout['data_qubits']} |",
        f"| ancilla qubits | {layout['ancilla_qubits']} |",
        f"| LRU mode | {layout['lru_mode']} |",
        f"| rounds (burn-in) | {data['rounds']} ({data['burn_in']}) |",
        f"| pre-LRU leaked fraction | {data['mean']:.4e} ± {data['stderr']:.2e} |",
        f"| analytic | {data['analytic']:.4e} |",
        f"| z-score | {'n/a' if z is None else f'{z:+.2f}'} |",
        f"| final leaked fraction | {data['final_fraction']:.4f} |",
        f"| parity ops / data / round | {c['parity_ops_per_data_per_round']:g} |",
        f"| LRU ops / data / round | {c['lru_ops_per_data_per_round']:g} |",
        "",
    ]


def cmd_report(args) -> int:
    if not args.inputs and not args.reference_sets:
        raise InputError("report needs at least one input file or --reference-sets")
    lines = ["# LRU report", ""]
    if args.reference_sets:
        lines += render_reference_sets()
    paths = [Path(p) for p in args.inputs]
    for path in paths:
        data = _load_json(path)
        sub = data.get("manifest", {}).get("subcommand")
        try:
            if sub == "verify":
                lines += render_verdict(LruVerdict.from_dict(data["verdict"]), f"Verdict: {path.name}")
            elif sub == "search":
                lines += render_search(data, f"Search: {path.name}")
            elif sub == "simulate":
                lines += render_simulation(data, f"Simulation: {path.name}")
            else:
                raise InputError(f"{path}: not an output of verify, search or simulate")
        except KeyError as exc:
            raise InputError(f"{path}: missing field {exc}") from None
    manifest = RunManifest.for_files("report", {"reference_sets": bool(args.reference_sets)}, None, paths)
    lines += ["<!-- manifest", dump(asdict(manifest)).rstrip(), "-->", ""]
    text = "\n".join(lines)
    sys.stdout.write(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.md").write_text(text, encoding="utf-8")
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stq-lru", description="Leakage reduction units for singlet-triplet qubits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", type=Path, default=None, help="directory for output files")

    p = sub.add_parser("verify", help="check a gate sequence (or .npy matrix) against an LRU truth table")
    p.add_argument("sequence", help="sequence file, one gate per line, e.g. U(0.5,0)")
    p.add_argument("--target", required=True, choices=["sil", "sinl", "SIL", "SINL"])
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="multi-start synthesis on a named template")
    p.add_argument("--template", default=None, help=f"one of: {', '.join(TEMPLATES)}")
    p.add_argument("--target", default=None, choices=["sil", "sinl", "SIL", "SINL"])
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--config", type=Path, default=None, help="JSON with any of template/target/restarts/seed/tol/method")
    common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("simulate", help="lattice leakage Monte Carlo")
    p.add_argument("--config", type=Path, default=None, help="JSON with n, p_leak, lru_mode, seed, rounds, ...")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render earlier JSON outputs as Markdown")
    p.add_argument("inputs", nargs="*", help="JSON files written by verify, search or simulate")
    p.add_argument("--reference-sets", action="store_true", help="include the tabulated-parameter consistency check")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonUnitaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except SpinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
