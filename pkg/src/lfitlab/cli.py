"""Command line entry point: ``lfitlab <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from lfitlab import fixtures
from lfitlab.dataset import MODES, build_training_set, read_dataset, write_dataset
from lfitlab.evaluation import (
    holdout_mean,
    reports_to_csv,
    reports_to_json,
    reports_to_text,
    run_eval,
)
from lfitlab.formats import (
    emit_bnet,
    emit_program,
    emit_transitions,
    parse_bnet,
    parse_program,
    parse_transitions,
)
from lfitlab.logic import LogicError, LogicProgram, TransitionSet, full_transitions
from lfitlab.pipeline import SymbolicPredictor, predict_program
from lfitlab.scaleup import decompose_predict, min_body_bound

log = logging.getLogger("lfitlab")

DEFAULT_SEED = 0


def load_program(source: str) -> LogicProgram:
    """``fixture:NAME``, a ``.bnet`` file, or program text."""
    if source.startswith("fixture:"):
        return fixtures.load(source.split(":", 1)[1])
    text = Path(source).read_text()
    return parse_bnet(text) if source.endswith(".bnet") else parse_program(text)


def load_transitions(source: str) -> TransitionSet:
    """A transition table, or any program source (simulated over all states)."""
    if source.startswith("fixture:") or source.endswith((".bnet", ".lp")):
        return full_transitions(load_program(source))
    return parse_transitions(Path(source).read_text())


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _neural_predictor(args):
    from lfitlab.neural import NeuralPredictor, load_checkpoint

    if not args.model:
        raise LogicError("the neural engine needs --model <checkpoint>")
    model, _ = load_checkpoint(args.model)
    return NeuralPredictor(model, threshold=args.threshold)


def _predictor(args, width: int):
    if args.engine == "neural" or (args.engine == "decompose" and args.model):
        return _neural_predictor(args)
    if args.engine == "decompose":
        return SymbolicPredictor(args.n or min(3, width))
    return SymbolicPredictor()


def _learn(args, transitions: TransitionSet) -> LogicProgram:
    predictor = _predictor(args, transitions.n)
    if args.engine == "decompose" or (predictor.n is not None and predictor.n < transitions.n):
        return decompose_predict(transitions, transitions.base, predictor)
    return predict_program(predictor, transitions)


def cmd_simulate(args) -> None:
    program = load_program(args.program)
    transitions = full_transitions(program)
    if args.format == "json":
        names = program.base.names
        rows = [{"source": s, "target": transitions[s]} for s in sorted(transitions)]
        _write(json.dumps({"vars": list(names), "transitions": rows}) + "\n", args.out)
    else:
        _write(emit_transitions(transitions), args.out)


def cmd_learn(args) -> None:
    transitions = load_transitions(args.transitions)
    program = _learn(args, transitions)
    _write(emit_program(program, header=True), args.out)
    if args.engine == "decompose":
        width = _predictor(args, transitions.n).n
        for v, name in enumerate(transitions.base.names):
            bound = min_body_bound(transitions, v, width)
            if bound.exceeds:
                log.warning("%s: every size-%d subset containing it is inconsistent: %s", name, width, bound)


def cmd_predict(args) -> None:
    args.engine = "neural"
    cmd_learn(args)


def cmd_gen_data(args) -> None:
    rng = np.random.default_rng(args.seed)
    examples = build_training_set(args.mode, args.n, args.count, rng)
    manifest = write_dataset(args.out, examples, args.mode, args.seed)
    print(f"wrote {manifest.count} examples (n={manifest.n}, mode={manifest.mode}) to {args.out}")


def cmd_train(args) -> None:
    from lfitlab.neural import ModelConfig, TrainConfig, save_checkpoint, train

    manifest, examples = read_dataset(args.data)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        optimizer=args.optimizer,
        lr=args.lr,
        weight_decay=args.weight_decay,
        seed=args.seed,
        val_fraction=args.val_fraction,
        augment_partial=args.augment,
    )
    model_config = ModelConfig(n=manifest.n, d_model=args.d_model, ff_hidden=args.ff_hidden)
    t0 = time.perf_counter()
    result = train(examples, config, model_config)
    meta = {"train": config.to_dict(), "history": result.history, "dataset": str(args.data)}
    save_checkpoint(args.out, result.model, meta)
    last = result.history[-1] if result.history else {}
    print(f"trained {result.steps} steps in {time.perf_counter() - t0:.1f}s; last epoch {last}")


def cmd_eval(args) -> None:
    reports = []
    for source in args.original:
        original = load_program(source)
        t0 = time.perf_counter()
        if args.predicted:
            predicted = load_program(args.predicted)
            if predicted.base != original.base:
                predicted = parse_program(emit_program(predicted), original.base)
        else:
            predicted = _learn(args, full_transitions(original))
        name = Path(source).stem.replace("fixture:", "")
        reports.append(run_eval(original, predicted, name=name, wall_time=time.perf_counter() - t0))
    render = {"json": reports_to_json, "csv": reports_to_csv, "text": reports_to_text}[args.format]
    _write(render(reports), args.out)


def cmd_holdout(args) -> None:
    program = load_program(args.program)
    predictor = _neural_predictor(args) if args.engine == "neural" else SymbolicPredictor()
    mean = holdout_mean(program, args.given, args.trials, predictor, seed=args.seed)
    row = {"system": args.program, "given": args.given, "of": 1 << program.n, "trials": args.trials, "mse": mean}
    if args.format == "json":
        _write(json.dumps(row) + "\n", args.out)
    elif args.format == "csv":
        _write("system,given,of,trials,mse\n" + ",".join(str(row[k]) for k in row) + "\n", args.out)
    else:
        _write(f"{args.program}: {args.given}/{1 << program.n} given, mean mse {mean:.3f} over {args.trials} trials\n", args.out)


def cmd_convert(args) -> None:
    program = load_program(args.source)
    _write(emit_bnet(program) if args.to == "bnet" else emit_program(program, header=True), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lfitlab", description="Learn logic programs from Boolean state transitions.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=("text",)):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=fmt, default=fmt[0])
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    def engine_opts(sp, engines=("symbolic", "neural", "decompose")):
        sp.add_argument("--engine", choices=engines, default=engines[0])
        sp.add_argument("--model", help="model checkpoint for the neural engine")
        sp.add_argument("--threshold", type=float, default=0.5)
        sp.add_argument("--n", type=int, help="subset width for --engine decompose")

    sp = sub.add_parser("simulate", help="program -> full transition table")
    sp.add_argument("program")
    common(sp, ("text", "json"))
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("learn", help="transitions -> program")
    sp.add_argument("transitions")
    common(sp)
    engine_opts(sp)
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("predict", help="transitions -> program with a trained model")
    sp.add_argument("transitions")
    common(sp)
    engine_opts(sp, ("neural",))
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("gen-data", help="generate a training dataset")
    sp.add_argument("--mode", choices=MODES, default="exhaustive-complete")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--count", type=int, default=1000, help="systems to sample in sampled mode")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train", help="train a model on a dataset file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--epochs", type=int, default=600)
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--weight-decay", type=float, default=0.0)
    sp.add_argument("--val-fraction", type=float, default=0.0)
    sp.add_argument("--augment", type=float, default=0.5, help="probability of partial-input augmentation")
    sp.add_argument("--d-model", type=int, default=64)
    sp.add_argument("--ff-hidden", type=int, default=256)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="compare programs by successor-state MSE")
    sp.add_argument("original", nargs="+", help="program files, .bnet files or fixture:NAME")
    sp.add_argument("--predicted", help="predicted program; learned with --engine when omitted")
    common(sp, ("text", "json", "csv"))
    engine_opts(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("holdout", help="learn from k of 2^n transitions, score on all")
    sp.add_argument("program")
    sp.add_argument("--given", type=int, required=True)
    sp.add_argument("--trials", type=int, default=50)
    common(sp, ("text", "json", "csv"))
    engine_opts(sp, ("symbolic", "neural"))
    sp.set_defaults(func=cmd_holdout)

    sp = sub.add_parser("convert", help="convert between .bnet and program text")
    sp.add_argument("source")
    sp.add_argument("--to", choices=("program", "bnet"), default="program")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_convert)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (LogicError, OSError) as e:
        print(f"lfitlab: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
