"""Command-line entry point.

Subcommands: gen-dataset, train, eval, baseline, classify, estimate,
bank-config. Exit codes: 0 success, 2 usage/invalid settings, 3 I/O,
4 numerical failure. GFXLAB_THREADS controls kernel worker count;
GFXLAB_KERNELS selects the compiled or numpy backend.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import CLIP_SAMPLES, SAMPLE_RATE, __version__
from . import features as feat
from .dataset import SUBSETS, build_subset, read_manifest, read_wav
from .effects import EFFECT_ORDER, EffectId, TONELESS, save_bank_config
from .errors import GfxError, IOFailure, NumericalError, UsageError
from .evaluation import baseline_comparison, cross_eval, evaluate_checkpoint, write_report_files
from .kernels import BACKEND
from .training import (
    TrainConfig, load_dataset, load_train_checkpoint, train,
)

ABSENT_THRESHOLD = -0.5  # tanh head output below this reports "no tone control"


def _write_snapshot(out_dir, command, resolved):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {"command": command, "version": __version__, "kernels": BACKEND}
    snapshot.update(resolved)
    with open(out_dir / "run_config.json", "w") as fh:
        json.dump(snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_gen_dataset(args):
    out = Path(args.out)
    _write_snapshot(out, "gen-dataset", {
        "subset": args.subset, "scale": args.scale, "seed": args.seed,
        "out": str(out)})
    manifest = build_subset(args.subset, out, seed=args.seed, scale=args.scale)
    _, records = read_manifest(manifest)
    counts = {}
    for rec in records:
        counts[rec.effect] = counts.get(rec.effect, 0) + 1
    print(f"wrote {len(records)} records to {manifest}")
    for effect in EFFECT_ORDER:
        print(f"  {effect}: {counts.get(str(effect), 0)}")
    return 0


def cmd_train(args):
    cfg = TrainConfig(variant=args.variant, epochs=args.epochs,
                      patience=args.patience, batch_size=args.batch_size,
                      lr=args.lr, seed=args.seed)
    out = Path(args.out)
    _write_snapshot(out, "train", {
        "manifest": str(args.manifest), "out": str(out), **cfg.as_dict()})
    print(f"training {cfg.variant}: epochs={cfg.epochs} patience={cfg.patience} "
          f"batch_size={cfg.batch_size} lr={cfg.lr} seed={cfg.seed}")
    data = load_dataset(args.manifest, cache_dir=args.cache_dir,
                        progress=lambda i, n: print(f"  featurized {i}/{n}"))
    result = train(cfg, data, out_dir=out, log_print=print)
    print(f"best epoch {result.best_epoch}: validation metric "
          f"{result.best_metric:.2f}%  -> {result.checkpoint_path}")
    return 0


def cmd_eval(args):
    out = Path(args.out)
    _write_snapshot(out, "eval", {
        "checkpoints": [str(c) for c in args.checkpoint],
        "manifests": [str(m) for m in args.manifest],
        "split": args.split, "out": str(out)})
    if len(args.checkpoint) > 1 or len(args.manifest) > 1:
        ckpts = {}
        for path in args.checkpoint:
            _, meta, _, _ = load_train_checkpoint(path)
            ckpts[meta.get("train_subset", Path(path).stem)] = path
        manifests = {}
        for path in args.manifest:
            header, _ = read_manifest(path)
            manifests[header["subset"]] = path
        matrix, reports = cross_eval(ckpts, manifests, out_dir=out,
                                     split=args.split, cache_dir=args.cache_dir)
        for (tr, te), value in sorted(matrix.items()):
            print(f"train {tr} -> test {te}: {value:.2f}%")
    else:
        net, meta, mean, std = load_train_checkpoint(args.checkpoint[0])
        data = load_dataset(args.manifest[0], cache_dir=args.cache_dir)
        report = evaluate_checkpoint(net, meta, mean, std, data, split=args.split)
        write_report_files(report, out, f"{meta.get('train_subset', 'model')}__{report.subset}")
        print(report.summary())
    return 0


def cmd_baseline(args):
    out = Path(args.out)
    _write_snapshot(out, "baseline", {
        "manifest": str(args.manifest), "epochs": args.epochs,
        "seed": args.seed, "out": str(out)})
    data = load_dataset(args.manifest, cache_dir=args.cache_dir)
    rows, _ = baseline_comparison(data, seed=args.seed, epochs=args.epochs,
                                  out_dir=out, log_print=print)
    print(f"{'paradigm':<18} {'joint':>8} {'class':>8} {'estim':>8}")
    for r in rows:
        cells = ["---" if r[k] is None else f"{r[k]:.2f}"
                 for k in ("joint", "classification", "estimation")]
        print(f"{r['paradigm']:<18} {cells[0]:>8} {cells[1]:>8} {cells[2]:>8}")
    return 0


def _load_clip(wav_path):
    audio, rate = read_wav(wav_path)
    if rate != SAMPLE_RATE:
        raise IOFailure(f"{wav_path}: sample rate {rate} Hz, expected {SAMPLE_RATE}")
    if len(audio) < CLIP_SAMPLES:
        raise IOFailure(f"{wav_path}: shorter than 2 s ({len(audio)} samples)")
    if len(audio) > CLIP_SAMPLES:
        start = (len(audio) - CLIP_SAMPLES) // 2
        audio = audio[start:start + CLIP_SAMPLES]
    return audio


def _prepare_features(wav_path, mean, std):
    x = feat.featurize(_load_clip(wav_path))
    x = (x - mean) / std
    return x[None, None, :, :]


def cmd_classify(args):
    net, meta, mean, std = load_train_checkpoint(args.checkpoint)
    if net.kind not in ("fxnet", "multinet"):
        raise UsageError(f"checkpoint is a {net.kind}; classify needs fxnet/multinet")
    x = _prepare_features(args.wav, mean, std)
    logits = net.forward(x, train=False)
    if isinstance(logits, tuple):
        logits = logits[0]
    z = logits[0] - logits[0].max()
    scores = np.exp(z) / np.exp(z).sum()
    order = np.argsort(-scores)
    for rank, idx in enumerate(order, 1):
        print(f"{rank:2d}. {EFFECT_ORDER[idx]}  {scores[idx]:.4f}")
    return 0


def cmd_estimate(args):
    net, meta, mean, std = load_train_checkpoint(args.checkpoint)
    if net.kind not in ("setnet", "setnetcond", "multinet"):
        raise UsageError(f"checkpoint is a {net.kind}; estimate needs a settings head")
    x = _prepare_features(args.wav, mean, std)
    if net.kind == "setnetcond":
        if args.effect is None:
            raise UsageError("--effect is required for a setnetcond checkpoint")
        cls = EFFECT_ORDER.index(EffectId(args.effect))
        out = net.forward(x, class_ids=np.array([cls]), train=False)
    else:
        out = net.forward(x, train=False)
        if isinstance(out, tuple):
            out = out[1]
    gain, tone = float(out[0, 0]), float(out[0, 1])
    print(f"gain: {np.clip(gain, 0.0, 1.0):.3f}")
    if tone < ABSENT_THRESHOLD:
        print("tone: absent")
    else:
        print(f"tone: {np.clip(tone, 0.0, 1.0):.3f}")
    return 0


def cmd_bank_config(args):
    save_bank_config(args.out)
    print(f"wrote effect bank configuration to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gfxlab",
                                description="guitar drive-pedal recognition lab")
    p.add_argument("--version", action="version", version=f"gfxlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="synthesize one labeled sub-dataset")
    g.add_argument("--subset", required=True, choices=SUBSETS)
    g.add_argument("--scale", default="desk", choices=("desk", "paper"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen_dataset)

    t = sub.add_parser("train", help="train one network variant")
    t.add_argument("--variant", required=True,
                   choices=("fxnet", "setnet", "multinet", "setnetcond"))
    t.add_argument("--manifest", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--patience", type=int, default=15)
    t.add_argument("--batch-size", type=int, default=100)
    t.add_argument("--lr", type=float, default=0.001)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--cache-dir", default=None)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate checkpoints on datasets")
    e.add_argument("--checkpoint", required=True, nargs="+")
    e.add_argument("--manifest", required=True, nargs="+")
    e.add_argument("--split", default="test", choices=("train", "valid", "test"))
    e.add_argument("--out", required=True)
    e.add_argument("--cache-dir", default=None)
    e.set_defaults(fn=cmd_eval)

    b = sub.add_parser("baseline", help="three-paradigm comparison at 50 epochs")
    b.add_argument("--manifest", required=True)
    b.add_argument("--epochs", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--cache-dir", default=None)
    b.set_defaults(fn=cmd_baseline)

    c = sub.add_parser("classify", help="rank effect classes for one wav")
    c.add_argument("wav")
    c.add_argument("--checkpoint", required=True)
    c.set_defaults(fn=cmd_classify)

    s = sub.add_parser("estimate", help="estimate gain/tone for one wav")
    s.add_argument("wav")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--effect", default=None,
                   choices=[str(e) for e in EFFECT_ORDER])
    s.set_defaults(fn=cmd_estimate)

    k = sub.add_parser("bank-config", help="write the effect bank parameters")
    k.add_argument("--out", required=True)
    k.set_defaults(fn=cmd_bank_config)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, GfxError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
