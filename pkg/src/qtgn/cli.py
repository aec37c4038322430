"""Command-line entry point: ``qtgn {synth,train,evaluate,ablate,compare-encodings,noisy-infer}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import neural, pipeline, stream
from .config import Settings, load_file, resolve
from .errors import CheckpointError, ConfigError, DataError, ShapeMismatch
from .noisy import noisy_evaluate

log = logging.getLogger("qtgn")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="YAML/JSON config file")
    p.add_argument("--seed", type=int, help="root random seed")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory (default: runs)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--epochs", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--batch", type=int, help="gradient-accumulation window (events per Adam step)")
    g.add_argument("--eval-k", type=int, help="negatives per query for ranking")
    g.add_argument("--beta", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--n-qubits", type=int)
    g.add_argument("--update-strategy", choices=("adaptive", "always", "never"))
    g.add_argument("--encoding", choices=("aae", "amplitude", "angle"))


def _noise_flags(p):
    g = p.add_argument_group("noise")
    g.add_argument("--shots", type=int)
    g.add_argument("--depol", type=float)
    g.add_argument("--readout-eps", type=float)
    g.add_argument("--n-eval", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="qtgn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic two-community event stream")
    p.add_argument("--users", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--signal", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--feature-noise", type=float)
    p.add_argument("--output", type=Path, help="CSV path (default: OUT/events.csv)")

    p = sub.add_parser("train", parents=[common], help="train and write a checkpoint")
    p.add_argument("data", type=Path)
    _model_flags(p)

    p = sub.add_parser("evaluate", parents=[common], help="print one metrics JSON line")
    p.add_argument("data", type=Path)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--split", choices=stream.SPLITS, default="test")
    _model_flags(p)

    for name, text in (("ablate", "adaptive vs always vs never update"), ("compare-encodings", "aae vs amplitude vs angle")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("data", type=Path)
        p.add_argument("--split", choices=stream.SPLITS, default="test")
        _model_flags(p)

    p = sub.add_parser("noisy-infer", parents=[common], help="evaluate with shot-sampled noisy readouts")
    p.add_argument("data", type=Path)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--split", choices=stream.SPLITS, default="test")
    _model_flags(p)
    _noise_flags(p)
    return parser


def _overrides(args) -> dict:
    def pick(mapping):
        return {key: getattr(args, attr) for key, attr in mapping.items() if getattr(args, attr, None) is not None}

    return {
        "run": pick({"seed": "seed", "epochs": "epochs", "lr": "lr", "batch": "batch", "eval_k": "eval_k"}),
        "aae": pick(
            {"beta": "beta", "tau": "tau", "n_qubits": "n_qubits", "update_strategy": "update_strategy", "encoding": "encoding"}
        ),
        "noise": pick({"shots": "shots", "depol": "depol", "readout_eps": "readout_eps", "n_eval": "n_eval"}),
        "synth": pick(
            {"n_users": "users", "n_items": "items", "n_events": "events", "signal": "signal", "d": "dim", "noise": "feature_noise"}
        ),
    }


def _settings(args) -> Settings:
    doc = load_file(args.config) if args.config else None
    return resolve(doc, _overrides(args))


def _load_data(path: Path, settings: Settings) -> stream.Dataset:
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    ds = stream.parse_events(path)
    if ds.d > (1 << settings.run.n_qubits):
        raise ConfigError(f"{ds.d} features do not fit in {settings.run.n_qubits} qubits")
    return ds


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit(records, out_file: Path | None = None):
    lines = [json.dumps(r, sort_keys=True) for r in records]
    if out_file is not None:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        out_file.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    for line in lines:
        print(line)


def _load_checkpoint(path: Path, settings: Settings) -> neural.ParamStore:
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    params = neural.load_params(path)
    cfg = settings.run
    if (params.memory_dim, params.n_qubits) != (cfg.memory_dim, cfg.n_qubits):
        raise ShapeMismatch(
            f"checkpoint has {params.memory_dim}-dim memory and {params.n_qubits} qubits; "
            f"config expects {cfg.memory_dim} and {cfg.n_qubits}"
        )
    return params


def cmd_synth(args, settings: Settings):
    s = settings.synth
    seed = settings.run.seed
    ds = stream.synth_generate(s.n_users, s.n_items, s.n_events, s.signal, seed, d=s.d, noise=s.noise)
    path = args.output or args.out / "events.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    stream.write_events(ds, path)
    _write_json(path.with_suffix(".meta.json"), {"seed": seed, "synth": settings.to_dict()["synth"], "events": len(ds)})
    log.info("wrote %d events to %s", len(ds), path)


def cmd_train(args, settings: Settings):
    ds = _load_data(args.data, settings)
    cfg = settings.run
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "config.json", {**settings.to_dict(), "data": str(args.data), "command": "train"})
    params, logs = pipeline.train(ds, cfg, progress=lambda r: log.info("epoch %d loss %.4f refresh %.3f", r.epoch, r.mean_loss, r.refresh_rate))
    neural.save_params(params, args.out / "params.npz", {"seed": cfg.seed, "config": settings.to_dict()})
    pipeline.write_train_log(logs, args.out / "train_log.csv")
    log.info("checkpoint written to %s", args.out / "params.npz")


def cmd_evaluate(args, settings: Settings):
    ds = _load_data(args.data, settings)
    params = _load_checkpoint(args.checkpoint, settings)
    cfg = settings.run
    res = pipeline.run_evaluation(ds, args.split, params, cfg)
    _emit([res.record(cfg.eval_k, cfg.seed)])


def _train_eval_rows(args, settings: Settings, variants):
    ds = _load_data(args.data, settings)
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for label, changes in variants:
        cfg = settings.run.replace(**changes)
        params, logs = pipeline.train(ds, cfg)
        res = pipeline.run_evaluation(ds, args.split, params, cfg)
        rows.append(res.record(cfg.eval_k, cfg.seed, variant=label, train_refresh_rate=logs[-1].refresh_rate if logs else None))
        log.info("%s: auc %.4f mrr %.4f", label, res.report.auc, res.report.mrr)
    return rows


def cmd_ablate(args, settings: Settings):
    _write_json(args.out / "config.json", {**settings.to_dict(), "data": str(args.data), "command": "ablate"})
    variants = [(s, {"strategy": s, "encoding": "aae"}) for s in ("adaptive", "always", "never")]
    _emit(_train_eval_rows(args, settings, variants), args.out / "ablation.jsonl")


def cmd_compare_encodings(args, settings: Settings):
    _write_json(args.out / "config.json", {**settings.to_dict(), "data": str(args.data), "command": "compare-encodings"})
    variants = [("aae", {"encoding": "aae"}), ("amplitude", {"encoding": "amplitude"}), ("angle", {"encoding": "angle"})]
    _emit(_train_eval_rows(args, settings, variants), args.out / "encodings.jsonl")


def cmd_noisy_infer(args, settings: Settings):
    ds = _load_data(args.data, settings)
    params = _load_checkpoint(args.checkpoint, settings)
    cfg = settings.run
    res = noisy_evaluate(ds, params, cfg, settings.noise, split=args.split, n_eval=settings.n_eval)
    _emit([res.record(cfg.eval_k, cfg.seed, **res.extra)])


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "compare-encodings": cmd_compare_encodings,
    "noisy-infer": cmd_noisy_infer,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"qtgn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        settings = _settings(args)
        COMMANDS[args.command](args, settings)
    except (ConfigError, ShapeMismatch) as exc:
        print(f"qtgn: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError) as exc:
        print(f"qtgn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
