"""Command-line entry point: ``dagrnn <command> [options]``.

Exit codes: 0 ok, 1 gradient check failed, 2 usage/configuration,
3 dataset problem, 4 checkpoint problem, 5 unpaired prediction/truth ids.
"""
import argparse
import os
import sys
from dataclasses import fields

import numpy as np

from . import conv as cv
from .config import SCHEDULES, RunConfig
from .data import (
    BEACON_PALETTE,
    Palette,
    gen_beacon_dataset,
    load_dataset,
    load_image,
    load_labelmap,
    save_labelmap,
    write_dataset,
)
from .errors import CheckpointError, ConfigurationError, DagRnnError
from .gradcheck import grad_check
from .metrics import evaluate, format_result
from .network import FullNetwork, backward_full, loss_full, predict
from .objective import ClassWeights, class_frequencies, class_weights, compute_eta, format_weight_table
from .trainer import SGDMomentum, check_shapes, load_checkpoint, save_checkpoint, train

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DATA, EXIT_CKPT, EXIT_PAIRING = 0, 1, 2, 3, 4, 5

_HELP = {
    "preset": "network preset: tiny or cnn65",
    "neighborhood": "grid neighbourhood, 4 or 8",
    "hidden_dim": "DAG-RNN hidden size (0 = preset default)",
    "num_classes": "class count when no dataset palette is available",
    "eta": "rare-class threshold: 'auto' (85/15 rule) or a fraction",
    "mass": "cumulative frequency covered by frequent classes",
    "k": "base of the rare-class weight",
    "epochs": "training epochs",
    "seed": "seed for initialisation and image order",
    "lr": "base learning rate",
    "lr_decay": "learning-rate decay factor",
    "decay_start": "last epoch at the base learning rate",
    "schedule": f"decay mode: {' or '.join(SCHEDULES)}",
    "momentum": "SGD momentum",
    "clip": "max gradient norm per update (0 = off)",
    "recurrent": "use recurrent weights (false = ENN baseline)",
    "freeze": "comma-separated stages kept fixed: conv, rnn, deconv",
    "data": "dataset root directory",
    "checkpoint": "checkpoint path",
    "log": "training log path",
    "out": "output directory for predictions",
}


class UsageError(Exception):
    pass


def _bool(text):
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _config_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file (flags override its values)")
    defaults = RunConfig()
    for f in fields(RunConfig):
        default = getattr(defaults, f.name)
        kind = _bool if isinstance(default, bool) else type(default)
        parent.add_argument(
            "--" + f.name.replace("_", "-"),
            dest=f.name,
            type=kind,
            default=argparse.SUPPRESS,
            help=f"{_HELP[f.name]} (default: {default!r})",
        )
    return parent


def build_parser():
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="dagrnn", description="DAG-RNN dense image labelling")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[parent], help="train on the dataset's train split")
    p = sub.add_parser("predict", parents=[parent], help="write label maps for images")
    p.add_argument("images", nargs="+")
    p = sub.add_parser("eval", parents=[parent], help="score predicted label maps against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("truth_dir")
    p = sub.add_parser("gradcheck", parents=[parent], help="finite-difference check of a fresh network")
    p.add_argument("--tol", type=float, default=1e-4, help="relative error tolerance (default: 1e-4)")
    p.add_argument("--size", type=int, default=0, help="check image extent (default: 3 x downsampling)")
    p.add_argument("--max-entries", type=int, default=64, help="entries sampled per tensor (default: 64)")
    sub.add_parser("inspect-weights", parents=[parent], help="print class frequencies and weights")
    p = sub.add_parser("gen-data", parents=[parent], help="write a synthetic beacon dataset to --data")
    p.add_argument("--n-train", type=int, default=200, help="training images (default: 200)")
    p.add_argument("--n-test", type=int, default=50, help="test images (default: 50)")
    p.add_argument("--size", type=int, default=32, help="image extent in pixels (default: 32)")
    return parser


def resolve_config(args):
    values = {}
    if args.config:
        try:
            values.update(RunConfig.load(args.config).to_dict())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
    explicit = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    values.update(explicit)
    return RunConfig.from_dict(values), set(explicit)


def _require_data(cfg):
    if not cfg.data:
        raise UsageError("--data is required")
    if not os.path.isdir(cfg.data) or not os.path.exists(os.path.join(cfg.data, "split.txt")):
        raise FileNotFoundError(f"dataset {cfg.data!r} not found (needs split.txt, palette.txt, images/, labels/)")


def _weights_for(cfg, samples, num_classes):
    stats = class_frequencies([s.labels for s in samples], num_classes)
    eta = compute_eta(stats, cfg.mass) if cfg.eta == "auto" else float(cfg.eta)
    if eta <= 0:
        return stats, ClassWeights(np.ones(num_classes), 0.0, cfg.k)
    return stats, class_weights(stats, eta, cfg.k)


def _net_config(cfg, num_classes):
    return cv.build_preset(cfg.preset, num_classes, cfg.hidden_dim or None)


def cmd_train(cfg, out=None):
    out = out or sys.stdout
    _require_data(cfg)
    samples, palette = load_dataset(cfg.data, "train")
    if not samples:
        raise FileNotFoundError(f"dataset {cfg.data!r} has no training samples")
    cfg.num_classes = len(palette)
    _, weights = _weights_for(cfg, samples, len(palette))
    rng = np.random.default_rng(cfg.seed)
    net = FullNetwork.create(
        _net_config(cfg, len(palette)), rng, weights, cfg.neighborhood, cfg.recurrent, cfg.frozen_stages
    )
    opt = SGDMomentum(cfg.momentum, cfg.clip)
    with open(cfg.log, "w") as log:
        def emit(entry):
            log.write(entry.line() + "\n")
            log.flush()

        logs, opt = train(net, samples, cfg.epochs, cfg.seed, opt, cfg.lr, cfg.lr_decay,
                          cfg.decay_start, cfg.schedule, on_epoch=emit)
    save_checkpoint(cfg.checkpoint, net, opt, cfg.epochs, cfg.to_dict())
    last = logs[-1]
    out.write(f"trained {cfg.epochs} epochs: loss {last.loss:.6f} global {100 * last.global_acc:.1f} "
              f"class {100 * last.class_acc:.1f}\n")
    return EXIT_OK


def _load_net(cfg, explicit):
    try:
        net, _, _, _ = load_checkpoint(cfg.checkpoint)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {cfg.checkpoint}: {exc}") from None
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{cfg.checkpoint}: malformed checkpoint ({exc})") from None
    if explicit & {"preset", "hidden_dim", "num_classes"}:
        ref = FullNetwork.create(_net_config(cfg, cfg.num_classes), np.random.default_rng(0))
        bad = check_shapes(net, ref)
        if bad:
            raise CheckpointError("checkpoint does not match the configuration: " + "; ".join(bad))
    return net


def _palette(cfg, num_classes):
    if cfg.data and os.path.exists(os.path.join(cfg.data, "palette.txt")):
        with open(os.path.join(cfg.data, "palette.txt")) as fh:
            return Palette.from_text(fh.read())
    if num_classes <= len(BEACON_PALETTE):
        return BEACON_PALETTE
    rng = np.random.default_rng(0)
    return Palette([f"class{j}" for j in range(num_classes)],
                   [tuple(int(v) for v in rng.integers(0, 256, 3)) for _ in range(num_classes)])


def cmd_predict(cfg, images, explicit=frozenset(), out=None):
    out = out or sys.stdout
    net = _load_net(cfg, explicit)
    palette = _palette(cfg, net.config.num_classes)
    os.makedirs(cfg.out, exist_ok=True)
    for path in images:
        labels = predict(net, load_image(path))
        stem = os.path.splitext(os.path.basename(path))[0]
        save_labelmap(os.path.join(cfg.out, stem + ".pgm"), labels, palette)
        out.write(f"{path} -> {os.path.join(cfg.out, stem + '.pgm')}\n")
    return EXIT_OK


def _label_ids(directory):
    return {
        os.path.splitext(n)[0]
        for n in os.listdir(directory)
        if n.endswith(".pgm") and not n.endswith("_color.pgm")
    }


def cmd_eval(cfg, pred_dir, truth_dir, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    for d in (pred_dir, truth_dir):
        if not os.path.isdir(d):
            raise FileNotFoundError(f"directory {d!r} not found")
    pred_ids, truth_ids = _label_ids(pred_dir), _label_ids(truth_dir)
    unpaired = sorted(pred_ids ^ truth_ids)
    if unpaired or not pred_ids:
        err.write("unpaired ids: " + (" ".join(unpaired) if unpaired else "(no label maps found)") + "\n")
        return EXIT_PAIRING
    palette = _palette(cfg, cfg.num_classes)
    C = len(palette) if cfg.data else cfg.num_classes
    ids = sorted(pred_ids)
    preds = [load_labelmap(os.path.join(pred_dir, i + ".pgm"), C) for i in ids]
    truths = [load_labelmap(os.path.join(truth_dir, i + ".pgm"), C) for i in ids]
    result = evaluate(preds, truths, C)
    out.write(format_result(result, palette.names if len(palette) == C else None))
    return EXIT_OK


def cmd_gradcheck(cfg, tol=1e-4, size=0, max_entries=64, out=None):
    out = out or sys.stdout
    rng = np.random.default_rng(cfg.seed)
    config = _net_config(cfg, cfg.num_classes)
    net = FullNetwork.create(config, rng, None, cfg.neighborhood, cfg.recurrent)
    for p in net.rnn.directions.values():
        p.b[:] = rng.uniform(0.0, 0.1, p.b.shape)
    n = size or 3 * config.downsample
    image = rng.uniform(size=(n, n, 3))
    labels = rng.integers(0, config.num_classes, (n, n))
    _, grads, _ = backward_full(net, image, labels)
    params = {k: v for k, v in net.parameters().items() if net.trainable(k)}
    report = grad_check(lambda: loss_full(net, image, labels), params, grads, tol=tol,
                        max_entries=max_entries, rng=rng)
    out.write(f"tensor\tmax_rel_err\tentries\tstatus (tol {tol:g})\n")
    out.write(report.format())
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_inspect_weights(cfg, out=None):
    out = out or sys.stdout
    _require_data(cfg)
    samples, palette = load_dataset(cfg.data, "train")
    if not samples:
        raise FileNotFoundError(f"dataset {cfg.data!r} has no training samples")
    stats, weights = _weights_for(cfg, samples, len(palette))
    out.write(format_weight_table(stats, weights, palette.names))
    return EXIT_OK


def cmd_gen_data(cfg, n_train=200, n_test=50, size=32, out=None):
    out = out or sys.stdout
    if not cfg.data:
        raise UsageError("--data is required")
    samples = gen_beacon_dataset(n_train + n_test, size, cfg.seed)
    split = {s.id: ("train" if k < n_train else "test") for k, s in enumerate(samples)}
    write_dataset(cfg.data, samples, BEACON_PALETTE, split)
    out.write(f"wrote {n_train} train / {n_test} test beacon images to {cfg.data}\n")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, explicit = resolve_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, args.images, explicit)
        if args.command == "eval":
            return cmd_eval(cfg, args.pred_dir, args.truth_dir)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg, args.tol, args.size, args.max_entries)
        if args.command == "inspect-weights":
            return cmd_inspect_weights(cfg)
        if args.command == "gen-data":
            return cmd_gen_data(cfg, args.n_train, args.n_test, args.size)
    except (UsageError, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"dagrnn: error: {exc}\n")
        return EXIT_USAGE
    except CheckpointError as exc:
        sys.stderr.write(f"dagrnn: checkpoint error: {exc}\n")
        return EXIT_CKPT
    except (FileNotFoundError, DagRnnError) as exc:
        sys.stderr.write(f"dagrnn: data error: {exc}\n")
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
