"""Command-line interface.

Subcommands: ``gen-data``, ``train``, ``diagnose``, ``counts``,
``fidelity-scan``, ``verify``.  Configuration precedence is defaults, then
a ``--config`` JSON file, then explicit flags.  Exit codes: 0 success,
1 validation error, 2 verification failure, 3 runtime divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import ACLS, PDR, AnsatzSpec, ansatz_from_json, build_ansatz, count_report, from_slots
from .clamaps import (
    Bilinear,
    CLAMap,
    Constant,
    PureData,
    acls_check,
    cla_map_from_json,
    closed_form_derivative_1d,
    closed_form_fidelity_1d,
    normal_sampler,
    selective_direction_count,
    uniform_sampler,
)
from .core import (
    PauliString,
    StateVector,
    apply_rotation,
    fidelity,
    fidelity_weight_derivative,
)
from .data import (
    DEFAULT_SPLIT_SIZES,
    Dataset,
    HypersphereConfig,
    SCENARIOS,
    gen_hypersphere,
    load_csv,
    minmax_scale,
    save_csv,
    split_rows,
)
from .errors import DivergenceError, QflexError, ValidationError
from .training import TrainConfig, run_suite, save_checkpoint
from .verify import run_all

DEFAULT_PSI0_SEED = 7
OUT_ROOT_ENV = "QFLEX_OUT"


def _out_root(explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------


def cmd_gen_data(args: argparse.Namespace) -> int:
    sizes = {
        "train": args.n_train if args.n_train is not None else DEFAULT_SPLIT_SIZES["train"],
        "val": args.n_val if args.n_val is not None else DEFAULT_SPLIT_SIZES["val"],
        "test": args.n_test if args.n_test is not None else DEFAULT_SPLIT_SIZES["test"],
    }
    out_dir = Path(args.out) if args.out else _out_root(None) / "data" / args.scenario
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.scenario in SCENARIOS:
        cfg = HypersphereConfig.for_scenario(
            args.scenario,
            n_train=sizes["train"],
            n_val=sizes["val"],
            n_test=sizes["test"],
            seed=args.seed,
        )
        splits = gen_hypersphere(cfg)
    elif args.scenario == "csv":
        if not args.input:
            raise ValidationError("--scenario csv requires --input")
        full = load_csv(args.input)
        splits = split_rows(full, sizes["train"], sizes["val"], sizes["test"], seed=args.seed)
        if not args.no_scale:
            (train, val, test), _ = minmax_scale(splits["train"], splits["val"], splits["test"])
            splits = {"train": train, "val": val, "test": test}
    else:
        raise ValidationError(
            f"unknown scenario {args.scenario!r}; pick one of "
            f"{sorted(SCENARIOS) + ['csv']}"
        )
    for name, dataset in splits.items():
        path = out_dir / f"{name}.csv"
        save_csv(path, dataset)
        print(f"{name}: {dataset.n_samples} rows -> {path}  classes {dataset.class_histogram()}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

TRAIN_DEFAULTS = {
    "model": ACLS,
    "qubits": 2,
    "layers": 3,
    "d_inp": None,
    "d_out": None,
    "scenario": None,
    "data_dir": None,
    "runs": 5,
    "seed": 0,
    "psi0_seed": DEFAULT_PSI0_SEED,
    "lr": 0.001,
    "lr_decay_factor": 0.1,
    "lr_patience": 3,
    "early_stop_patience": 20,
    "max_epochs": 300,
    "batch_size": 128,
    "n_train": None,
    "n_val": None,
    "n_test": None,
    "out": None,
    "name": None,
    "verbose": False,
}


def _load_splits(conf: dict) -> tuple[dict[str, Dataset], str]:
    if conf["data_dir"]:
        data_dir = Path(conf["data_dir"])
        splits = {
            name: load_csv(data_dir / f"{name}.csv", split=name)
            for name in ("train", "val", "test")
        }
        return splits, data_dir.name
    scenario = conf["scenario"] or "sphere-3sigma"
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}")
    cfg = HypersphereConfig.for_scenario(
        scenario,
        n_train=conf["n_train"] or DEFAULT_SPLIT_SIZES["train"],
        n_val=conf["n_val"] or DEFAULT_SPLIT_SIZES["val"],
        n_test=conf["n_test"] or DEFAULT_SPLIT_SIZES["test"],
        seed=conf["seed"],
    )
    return gen_hypersphere(cfg), scenario


def cmd_train(args: argparse.Namespace) -> int:
    conf = _merge_config(args, TRAIN_DEFAULTS)
    splits, data_tag = _load_splits(conf)
    train_ds = splits["train"]
    d_inp = conf["d_inp"] if conf["d_inp"] is not None else train_ds.d_inp
    if d_inp != train_ds.d_inp:
        raise ValidationError(
            f"--d-inp {d_inp} does not match the dataset ({train_ds.d_inp} features)"
        )
    n_classes = max(ds.n_classes for ds in splits.values())
    d_out = conf["d_out"] if conf["d_out"] is not None else (1 if n_classes <= 2 else n_classes)
    if n_classes > 2 and d_out != n_classes:
        raise ValidationError(
            f"--d-out {d_out} does not match the {n_classes} dataset classes"
        )
    spec = build_ansatz(conf["model"], conf["qubits"], d_inp, d_out, conf["layers"])
    cfg = TrainConfig(
        lr=conf["lr"],
        lr_decay_factor=conf["lr_decay_factor"],
        lr_patience=conf["lr_patience"],
        early_stop_patience=conf["early_stop_patience"],
        max_epochs=conf["max_epochs"],
        batch_size=conf["batch_size"],
        n_runs=conf["runs"],
        seed=conf["seed"],
    )
    name = conf["name"] or f"{data_tag}-{conf['model']}-n{conf['qubits']}-L{conf['layers']}"
    out_dir = _out_root(conf["out"]) / name
    models, run_metrics, summary = run_suite(
        spec, splits, cfg, psi0_seed=conf["psi0_seed"], verbose=conf["verbose"]
    )
    summary["experiment"] = name
    summary["data"] = data_tag
    for run, (model, metrics) in enumerate(zip(models, run_metrics)):
        run_dir = out_dir / f"run-{run}"
        run_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(
            run_dir / "checkpoint.json", model, metrics.best_epoch, metrics.best_val_loss
        )
        _write_json(run_dir / "metrics.json", metrics.to_json())
    _write_json(out_dir / "summary.json", summary)
    mean, std, best = summary["auc_mean"], summary["auc_std"], summary["auc_best"]
    print(
        f"{name}: runs={cfg.n_runs}  AUC {mean:.4f} +/- {std:.4f}  best {best:.4f}"
        f"  -> {out_dir / 'summary.json'}"
    )
    return 0


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def _verdict_json(cla_map: CLAMap, n_samples: int, seed: int) -> dict:
    verdict = acls_check(
        cla_map,
        x_sampler=uniform_sampler(cla_map.d_inp),
        w_sampler=normal_sampler(cla_map.d_w_total),
        n_samples=n_samples,
        seed=seed,
    )
    return {
        "classification": verdict.classification.value,
        "complete_fraction": verdict.complete_fraction,
        "selective_fraction": verdict.selective_fraction,
        "weight_rank_target": verdict.weight_rank_target,
        "data_rank_target": verdict.data_rank_target,
        "k": cla_map.k,
        "d_inp": cla_map.d_inp,
        "d_w_total": cla_map.d_w_total,
    }


def _direction_json(cla_map: CLAMap) -> dict:
    count = selective_direction_count(cla_map)
    n = cla_map.n_qubits or 0
    single = all(
        len(g.support) == 1
        for g, entry in zip(cla_map.generators, cla_map.alphas)
        if any(isinstance(s, (PureData, Bilinear)) for s in entry)
    )
    return {
        "selective_directions": count,
        "cap_3n": 3 * n,
        "single_qubit_encoders": single,
        "within_cap": (count <= 3 * n) if single else None,
    }


def _layer_report(layer, d_inp: int, n_samples: int, seed: int) -> dict:
    encoder = [s for s in layer if isinstance(s.alpha, (PureData, Bilinear))]
    bias = [s for s in layer if isinstance(s.alpha, Constant)]
    report: dict = {"blocks": {}}
    if encoder:
        emap = from_slots(encoder, d_inp, reindex=True)
        report["blocks"]["encoder"] = _verdict_json(emap, n_samples, seed)
    if bias:
        bmap = from_slots(bias, d_inp, reindex=True)
        report["blocks"]["bias"] = _verdict_json(bmap, n_samples, seed)
    combined = from_slots(layer, d_inp)
    report["combined"] = _verdict_json(combined, n_samples, seed)
    report.update(_direction_json(combined))
    return report


def cmd_diagnose(args: argparse.Namespace) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    schema = doc.get("schema")
    report: dict = {"source": str(args.spec), "schema": schema, "n_samples": args.samples, "seed": args.seed}
    if schema == "ansatz":
        spec = ansatz_from_json(doc)
        report["kind"] = spec.kind
        report["n_qubits"] = spec.n_qubits
        layers = []
        for idx, layer in enumerate(spec.layers):
            entry = _layer_report(layer, spec.d_inp, args.samples, args.seed)
            entry["layer"] = idx
            layers.append(entry)
        report["layers"] = layers
    elif schema == "cla_map":
        cmap = cla_map_from_json(doc)
        report["map"] = _verdict_json(cmap, args.samples, args.seed)
        report.update(_direction_json(cmap))
    else:
        raise ValidationError(f"unrecognized schema {schema!r} in {args.spec}")
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        _write_json(Path(args.out), report)
        print(f"diagnosis -> {args.out}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------


def cmd_counts(args: argparse.Namespace) -> int:
    d_inp = args.d_inp if args.d_inp is not None else args.qubits
    layers = args.layers
    rows = []
    if args.model in (None, ACLS):
        rows.append(count_report(ACLS, args.qubits, d_inp, layers))
    if args.model in (None, PDR):
        pdr_qubits = args.qubits if args.model == PDR else d_inp
        rows.append(count_report(PDR, pdr_qubits, pdr_qubits, layers))
    header = f"{'model':>6} {'n':>3} {'d_inp':>5} {'k_SE':>5} {'gates/L':>8} {'weights/L':>10} {'gates':>7} {'weights':>8} {'readout':>8}"
    print(header)
    for r in rows:
        print(
            f"{r.kind:>6} {r.n_qubits:>3} {r.d_inp:>5} {r.k_se:>5} {r.gates_per_layer:>8}"
            f" {r.weights_per_layer:>10} {r.total_gates:>7} {r.total_weights:>8} {r.readout_weights:>8}"
        )
    if len(rows) == 2:
        acls_row, pdr_row = rows
        gate_ratio = acls_row.gates_per_layer / pdr_row.gates_per_layer
        weight_ratio = acls_row.weights_per_layer / pdr_row.weights_per_layer
        print(
            f"gate ratio {acls_row.gates_per_layer}/{pdr_row.gates_per_layer}"
            f" = {gate_ratio:.4f}   weight ratio = {weight_ratio:.4f}"
        )
    return 0


# ---------------------------------------------------------------------------
# fidelity-scan
# ---------------------------------------------------------------------------

SCAN_X2 = {"0": 0.0, "pi4": math.pi / 4, "pi2": math.pi / 2}


def cmd_fidelity_scan(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out else _out_root(None) / "fidelity-scan"
    out_dir.mkdir(parents=True, exist_ok=True)
    sigma_x = PauliString(("X",))
    sigma_z = PauliString(("Z",))
    zero = StateVector.basis_state(1)
    x1_grid = np.linspace(-math.pi, math.pi, args.grid)
    w_grid = np.linspace(args.w_min, args.w_max, args.grid)
    for tag, x2 in SCAN_X2.items():
        path = out_dir / f"fidelity_scan_x2_{tag}.csv"
        encoded2 = apply_rotation(zero, sigma_x, x2)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x1,w,fidelity_closed,fidelity_sim,dfdw_closed,dfdw_sim\n")
            for x1 in x1_grid:
                encoded1 = apply_rotation(zero, sigma_x, x1)
                for w in w_grid:
                    s1 = apply_rotation(encoded1, sigma_z, w * x1)
                    s2 = apply_rotation(encoded2, sigma_z, w * x2)
                    f_sim = fidelity(s1, s2)
                    f_closed = closed_form_fidelity_1d(x1, x2, w)
                    d_sim = fidelity_weight_derivative(
                        encoded1, encoded2, sigma_z, w * (x1 - x2), x1 - x2
                    )
                    d_closed = closed_form_derivative_1d(x1, x2, w)
                    fh.write(
                        f"{x1!r},{w!r},{f_closed!r},{f_sim!r},{d_closed!r},{d_sim!r}\n"
                    )
        print(f"x2={tag}: {args.grid}x{args.grid} grid -> {path}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_all(args.seed)
    failures = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  {result.name}: {result.detail}")
        failures += 0 if result.passed else 1
    if failures:
        print(f"{failures}/{len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qflex",
        description="Statevector simulation, geometric diagnostics, and "
        "re-uploading classifier benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"qflex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate benchmark CSV splits")
    p.add_argument("--scenario", default="sphere-3sigma", help="sphere-1sigma | sphere-3sigma | csv")
    p.add_argument("--input", help="source CSV for --scenario csv")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, dest="n_train")
    p.add_argument("--n-val", type=int, dest="n_val")
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--no-scale", action="store_true", help="skip [-1,1] scaling of ingested CSVs")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model family over several seeded runs")
    p.add_argument("--model", choices=[PDR, ACLS])
    p.add_argument("--qubits", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--d-inp", type=int, dest="d_inp")
    p.add_argument("--d-out", type=int, dest="d_out")
    p.add_argument("--scenario", help="generate data on the fly")
    p.add_argument("--data-dir", dest="data_dir", help="directory with train/val/test.csv")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--psi0-seed", type=int, dest="psi0_seed")
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-decay-factor", type=float, dest="lr_decay_factor")
    p.add_argument("--lr-patience", type=int, dest="lr_patience")
    p.add_argument("--early-stop-patience", type=int, dest="early_stop_patience")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--n-train", type=int, dest="n_train")
    p.add_argument("--n-val", type=int, dest="n_val")
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--out", help="output root (default $QFLEX_OUT or ./runs)")
    p.add_argument("--name", help="experiment directory name")
    p.add_argument("--config", help="JSON file with defaults for any train flag")
    p.add_argument("--verbose", action="store_true", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("diagnose", help="geometric classification of a spec or map file")
    p.add_argument("--spec", required=True, help="ansatz or coefficient-map JSON")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("counts", help="gate and weight count table")
    p.add_argument("--model", choices=[PDR, ACLS])
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--d-inp", type=int, dest="d_inp")
    p.add_argument("--layers", type=int, default=1)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("fidelity-scan", help="closed form vs simulator grids")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--w-min", type=float, default=-3.0, dest="w_min")
    p.add_argument("--w-max", type=float, default=3.0, dest="w_max")
    p.set_defaults(func=cmd_fidelity_scan)

    p = sub.add_parser("verify", help="run the cross-module invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except (QflexError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
