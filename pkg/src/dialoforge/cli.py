"""Command-line entry point: validate, generate, inject, encode, train, eval, sweep.

Conventions: all diagnostics go to stderr, all data to files (or stdout for
`eval`'s machine-readable report); every output directory receives exactly one
manifest.json recording the resolved configuration and input hashes, and
carries no wall-clock fields so reruns stay byte-identical.  Exit codes:
0 success, 1 validation error, 2 runtime error, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import generate_dataset, read_dataset, write_dataset
from .encoding import encode_dataset, read_encoded, write_encoded
from .engine import GeneratorConfig
from .errors import (
    DialoforgeError,
    SchemaError,
    UnknownLabel,
    UnknownPreset,
    ValidationError,
)
from .harness import (
    LinearModel,
    MemorizerModel,
    compute_metrics,
    predict,
    robustness_sweep,
    train_linear,
    train_memorizer,
    write_sweep_csv,
    write_sweep_long,
)
from .injection import ErrorConfig, inject_errors, write_records
from .ontology import Ontology, load_ontology_file, preset_ontology

SEED_ENV_VAR = "DIALOFORGE_SEED"

_MODE_WEIGHTS = {"relabel": (1.0, 0.0), "unk": (0.0, 1.0), "mixed": (0.5, 0.5)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 64 with a synopsis
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _input_hashes(indir: Path) -> dict:
    return {
        p.name: _sha256_file(p)
        for p in sorted(indir.iterdir())
        if p.is_file() and p.suffix in (".json", ".jsonl", ".bin")
    }


def _write_manifest(outdir: Path, payload: dict) -> None:
    manifest = {"tool": "dialoforge", "version": __version__}
    manifest.update(payload)
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _resolve_seed(args) -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        return int(env)
    return args.seed


def _load_cli_ontology(args) -> Ontology:
    if getattr(args, "preset", None):
        return preset_ontology(args.preset)
    if getattr(args, "ontology", None):
        return load_ontology_file(args.ontology)
    raise ValidationError("one of --preset or --ontology is required")


def _dataset_ontology(indir: Path) -> Ontology:
    path = indir / "ontology.json"
    if not path.exists():
        raise SchemaError(f"{indir} has no ontology.json (not produced by `generate`?)")
    return load_ontology_file(path)


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValidationError("--split-fractions needs three comma-separated numbers")
    return tuple(parts)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_validate(args) -> int:
    ontology = load_ontology_file(args.file)
    _log(
        f"ok: {len(ontology.domains)} domain(s), "
        f"{len(ontology.slot_keys())} slot(s), "
        f"{len(ontology.action_catalog)} atomic action(s)"
    )
    return 0


def _build_generator_config(args, ontology: Ontology) -> GeneratorConfig:
    defaults = ontology.generation_defaults
    n = args.dialogues or defaults.get("n_dialogues") or 2000
    if args.split_fractions:
        fractions = _parse_fractions(args.split_fractions)
    elif "split" in defaults:
        counts = defaults["split"]
        total = sum(counts)
        fractions = tuple(c / total for c in counts)  # type: ignore[assignment]
    else:
        fractions = (0.6, 0.2, 0.2)
    return GeneratorConfig(
        n_dialogues=n,
        p_chitchat=args.p_chitchat,
        p_mind_change=args.p_mind_change,
        p_domain_change=args.p_domain_change,
        max_stack_depth=args.max_stack_depth,
        seed=_resolve_seed(args),
        split_fractions=fractions,
    )


def _cmd_generate(args) -> int:
    ontology = _load_cli_ontology(args)
    cfg = _build_generator_config(args, ontology)
    dataset = generate_dataset(ontology, cfg, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ontology.json").write_text(
        json.dumps(ontology.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    write_dataset(
        dataset,
        out,
        manifest_extra={
            "tool": "dialoforge",
            "version": __version__,
            "subcommand": "generate",
            "preset": args.preset,
        },
    )
    sizes = dataset.split_sizes()
    _log(
        f"generated {dataset.n_dialogues} dialogues "
        f"({sizes['train']}/{sizes['val']}/{sizes['test']}) into {out}"
    )
    return 0


def _cmd_inject(args) -> int:
    indir = Path(getattr(args, "in"))
    dataset = read_dataset(indir)
    ontology = _dataset_ontology(indir)
    cfg = ErrorConfig(
        p_intent=args.p_intent,
        p_action=args.p_action,
        p_slot=args.p_slot,
        mode_weights=_MODE_WEIGHTS[args.mode],
        seed=_resolve_seed(args),
    )
    perturbed, records = inject_errors(dataset, ontology, cfg, splits=args.splits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ontology.json").write_text(
        json.dumps(ontology.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    write_dataset(
        perturbed,
        out,
        manifest_extra={
            "tool": "dialoforge",
            "version": __version__,
            "subcommand": "inject",
            "error_config": cfg.to_dict(),
            "noise_applied_to": args.splits,
            "n_perturbations": len(records),
            "input_hashes": _input_hashes(indir),
        },
    )
    write_records(records, out / "perturbations.jsonl")
    _log(f"perturbed {len(records)} labels into {out}")
    return 0


def _cmd_encode(args) -> int:
    indir = Path(getattr(args, "in"))
    dataset = read_dataset(indir)
    ontology = _dataset_ontology(indir)
    encoded = encode_dataset(dataset, ontology)
    out = Path(args.out) if args.out else indir / "encoded"
    out.mkdir(parents=True, exist_ok=True)
    write_encoded(encoded, out, csv=args.csv)
    _write_manifest(
        out,
        {
            "subcommand": "encode",
            "state_width": encoded.layout.state_width,
            "target_width": encoded.layout.target_width,
            "rows": {s: encoded.n_pairs(s) for s in encoded.splits},
            "ontology_hash": encoded.ontology_hash,
            "input_hashes": _input_hashes(indir),
        },
    )
    _log(f"encoded {sum(encoded.n_pairs(s) for s in encoded.splits)} turns into {out}")
    return 0


def _find_encoded(indir: Path) -> Path:
    if (indir / "train.bin").exists():
        return indir
    if (indir / "encoded" / "train.bin").exists():
        return indir / "encoded"
    raise SchemaError(f"no encoded data under {indir}; run `encode` first")


def _cmd_train(args) -> int:
    enc_dir = _find_encoded(Path(getattr(args, "in")))
    encoded = read_encoded(enc_dir)
    train_split = encoded.splits["train"]
    if args.model == "memorizer":
        model = train_memorizer(train_split)
        states = np.stack(
            [np.frombuffer(k, dtype=np.uint8) for k in model.table.keys()]
        )
        targets = np.stack(list(model.table.values()))
        with open(args.out, "wb") as fh:
            np.savez(
                fh,
                kind="memorizer",
                state_width=model.state_width,
                target_width=model.target_width,
                packed_states=states,
                targets=targets,
                fallback=model.fallback,
                ontology_hash=encoded.ontology_hash,
            )
    else:
        model = train_linear(
            train_split,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            l2=args.l2,
            seed=_resolve_seed(args),
        )
        with open(args.out, "wb") as fh:
            np.savez(
                fh,
                kind="linear",
                weights=model.weights,
                bias=model.bias,
                threshold=model.threshold,
                loss_history=np.array(model.loss_history),
                ontology_hash=encoded.ontology_hash,
            )
    _log(f"trained {args.model} on {train_split[0].shape[0]} turns -> {args.out}")
    return 0


def _load_model(path: str):
    blob = np.load(path, allow_pickle=False)
    kind = str(blob["kind"])
    if kind == "memorizer":
        table = {
            row.tobytes(): target.copy()
            for row, target in zip(blob["packed_states"], blob["targets"])
        }
        return MemorizerModel(
            state_width=int(blob["state_width"]),
            target_width=int(blob["target_width"]),
            table=table,
            fallback=blob["fallback"].copy(),
        )
    if kind == "linear":
        return LinearModel(
            weights=blob["weights"],
            bias=blob["bias"],
            threshold=float(blob["threshold"]),
            loss_history=list(blob["loss_history"]),
        )
    raise SchemaError(f"{path}: unknown model kind {kind!r}")


def _cmd_eval(args) -> int:
    model = _load_model(args.model)
    enc_dir = _find_encoded(Path(getattr(args, "in")))
    encoded = read_encoded(enc_dir)
    if args.split not in encoded.splits:
        raise ValidationError(f"split {args.split!r} not present in {enc_dir}")
    states, golds = encoded.splits[args.split]
    preds = predict(model, states)
    report = compute_metrics(preds, golds)
    _log(report.pretty(list(encoded.layout.actions)))
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    ontology = _load_cli_ontology(args)
    rates = [float(r) for r in args.rates.split(",")]
    models = [m.strip() for m in args.models.split(",")]
    seed = _resolve_seed(args)
    defaults = ontology.generation_defaults
    n = args.dialogues or defaults.get("n_dialogues") or 2000
    if "split" in defaults and not args.dialogues:
        counts = defaults["split"]
        fractions = tuple(c / sum(counts) for c in counts)
    else:
        fractions = (0.6, 0.2, 0.2)
    gen_cfg = GeneratorConfig(n_dialogues=n, seed=seed, split_fractions=fractions)
    result = robustness_sweep(
        ontology,
        gen_cfg,
        rates,
        models,
        seed=seed,
        n_seeds=args.seeds,
        mode_weights=_MODE_WEIGHTS[args.mode],
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(result, out / "sweep.csv")
    write_sweep_long(result, out / "sweep_long.csv")
    _write_manifest(out, {"subcommand": "sweep", "sweep": result.manifest})
    _log(f"swept {len(rates)} rate(s) x {len(models)} model(s) x {args.seeds} seed(s) -> {out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="dialoforge", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check an ontology file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("generate", help="generate a clean dataset")
    p.add_argument("--preset", choices=("simple", "medium", "hard"))
    p.add_argument("--ontology", help="custom ontology file")
    p.add_argument("--dialogues", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-chitchat", type=float, default=0.2)
    p.add_argument("--p-mind-change", type=float, default=0.2)
    p.add_argument("--p-domain-change", type=float, default=0.2)
    p.add_argument("--max-stack-depth", type=int, default=2)
    p.add_argument("--split-fractions", default=None, help="e.g. 0.6,0.2,0.2")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("inject", help="apply label noise to a dataset")
    p.add_argument("--in", required=True)
    p.add_argument("--p-intent", type=float, default=0.0)
    p.add_argument("--p-action", type=float, default=0.0)
    p.add_argument("--p-slot", type=float, default=0.0)
    p.add_argument("--mode", choices=tuple(_MODE_WEIGHTS), default="mixed")
    p.add_argument("--splits", choices=("all", "train"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("encode", help="encode a dataset into binary matrices")
    p.add_argument("--in", required=True)
    p.add_argument("--out", default=None, help="defaults to <in>/encoded")
    p.add_argument("--csv", action="store_true", help="also export 0/1 CSV")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("train", help="train a baseline model")
    p.add_argument("--model", choices=("memorizer", "linear"), required=True)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=0.0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a model on an encoded split")
    p.add_argument("--model", required=True)
    p.add_argument("--in", required=True)
    p.add_argument("--split", default="test")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="error-rate robustness sweep")
    p.add_argument("--preset", choices=("simple", "medium", "hard"))
    p.add_argument("--ontology")
    p.add_argument("--rates", required=True, help="comma-separated ascending rates")
    p.add_argument("--models", default="memorizer")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dialogues", type=int, default=None)
    p.add_argument("--mode", choices=tuple(_MODE_WEIGHTS), default="mixed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    return parser


def run_cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 64
    try:
        return args.func(args)
    except (SchemaError, ValidationError, UnknownPreset, UnknownLabel) as exc:
        _log(f"error: {exc}")
        return 1
    except (DialoforgeError, OSError) as exc:
        _log(f"runtime error: {exc}")
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
