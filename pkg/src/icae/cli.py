"""Command line entry point: ``icae {train,eval,adl,reproduce}``."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import kernels
from .adl import AdlConfig
from .autoencoder import evaluate_ser, train_end_to_end
from .channel import ChannelSpec
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import CheckpointError, ConfigurationError, NumericError
from .harness import build_config, read_config_file, reward_experiment, run_preset, write_ser_csv
from .rng import stream

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--symbols", type=int, help="Monte Carlo symbols per Eb/N0 point")
    p.add_argument("--jobs", type=int, help="worker threads for evaluation")
    p.add_argument("--steps", type=int, help="training steps")


def _parser():
    ap = _Parser(prog="icae", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train an autoencoder and save a checkpoint")
    _common(p)
    p.add_argument("--alpha-train", type=float, help="train with interference at this alpha (omit for blind)")

    p = sub.add_parser("eval", help="SER/BER sweep of a checkpoint")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--alpha-eval", type=float, action="append",
                   help="evaluation alpha; repeat for several; omit for plain AWGN")
    p.add_argument("--alpha-train", type=float, help="recorded in the CSV only")
    p.add_argument("--ebn0-grid", help="comma list or start:stop:step in dB")

    p = sub.add_parser("adl", help="estimate alpha from pilots and decode the payload")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--alpha-true", type=float, required=True)
    p.add_argument("--alpha-train", type=float, help="alpha the model was trained at (bank warm start)")
    p.add_argument("--adapt-steps", type=int)
    p.add_argument("--grid-max", type=float)

    p = sub.add_parser("reproduce", help="run a figure preset")
    _common(p)
    p.add_argument("--figure", type=int, required=True, choices=[2, 3, 4, 5, 6])
    p.add_argument("--adapt-steps", type=int)
    return ap


def _values(args, **extra):
    values = read_config_file(args.config) if args.config else {}
    for key in ("seed", "out", "symbols", "jobs", "steps"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    for key, v in extra.items():
        if v is not None:
            values[key] = v
    return values


def _cmd_train(args):
    cfg = build_config(_values(args, alpha_train=args.alpha_train))
    out = Path(args.out or "model.aemodel")
    model = train_end_to_end(cfg.ae, rng=stream(cfg.master_seed, "train/cli"))
    save_checkpoint(model, out)
    print(f"trained (loss {model.loss_history[0]:.4f} -> {model.loss_history[-1]:.4f}); wrote {out}")


def _cmd_eval(args):
    cfg = build_config(_values(args, ebn0_grid=args.ebn0_grid))
    model = load_checkpoint(args.model)
    model.train_alpha = args.alpha_train
    out = Path(args.out or "eval.csv")
    curves = [
        evaluate_ser(model, ChannelSpec(m=2, n=model.n, k=model.k), a, cfg.ebn0_grid_db,
                     cfg.symbols_per_point, seed=cfg.master_seed, jobs=cfg.jobs, experiment="eval")
        for a in (args.alpha_eval or [None])
    ]
    write_ser_csv(curves, out)
    for c in curves:
        for r in c:
            print(f"alpha_eval={r.alpha_eval} ebn0={r.ebn0_db:g} dB  SER={r.ser:.3e}  BER={r.ber:.3e}")


def _cmd_adl(args):
    values = _values(args, adapt_steps=args.adapt_steps, grid_max=args.grid_max)
    cfg = build_config(values)
    model = load_checkpoint(args.model)
    model.train_alpha = args.alpha_train
    adl_cfg = cfg.adl or AdlConfig()
    out = Path(args.out or "adl")
    out.mkdir(parents=True, exist_ok=True)
    _, _, result = reward_experiment(cfg, args.alpha_true, adl_cfg, model=model, label="adl")
    (out / "reward_table.csv").write_text(result.table.to_csv())
    print(f"alpha_hat={result.alpha_hat:.4g}  reward argmax={result.table.argmax:g}  "
          f"payload SER={result.payload_ser:.3e}  ({len(result.payload_messages)} symbols)")


def _cmd_reproduce(args):
    values = _values(args, adapt_steps=args.adapt_steps)
    values.setdefault("out", f"results/fig{args.figure}")
    cfg = replace(build_config(values), preset=f"fig{args.figure}")
    curves, tables = run_preset(cfg)
    for c in curves:
        for r in c:
            print(f"{r.experiment:22s} alpha_eval={_opt(r.alpha_eval):>5} ebn0={r.ebn0_db:5g}  SER={r.ser:.3e}")
    for label, table in tables:
        print(f"{label}: reward argmax {table.argmax:g}")
    print(f"wrote {cfg.out_path}/fig{args.figure}.csv")


def _opt(v):
    return "-" if v is None else f"{v:g}"


_COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "adl": _cmd_adl, "reproduce": _cmd_reproduce}


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"icae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    logging.getLogger(__name__).debug("kernel backend: %s", kernels.BACKEND)
    try:
        _COMMANDS[args.command](args)
    except NumericError as exc:
        print(f"icae: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, CheckpointError, OSError, ValueError) as exc:
        print(f"icae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
