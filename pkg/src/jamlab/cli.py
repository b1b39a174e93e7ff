"""``jamlab`` command line: generate, train, eval, report-gates, check."""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, dataset, theory, training
from .config import ConfigError, RunConfig
from .dataset import DatasetError
from .synthesis import CLASSES, get_class, jsr_index

log = logging.getLogger("jamlab")


class UsageError(Exception):
    pass


def _parse_classes(text: str | None) -> list[int]:
    if not text:
        return [c.id for c in CLASSES]
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(get_class(int(tok) if tok.isdigit() else tok).id)
        except (KeyError, ValueError):
            raise UsageError(f"unknown class {tok!r}; known keys: {', '.join(c.key for c in CLASSES)}") from None
    return sorted(set(out))


def _jsr_values(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or hi < lo:
        raise UsageError("need jsr-min <= jsr-max and a positive jsr-step")
    vals = np.round(np.arange(lo, hi + step / 2, step), 6).tolist()
    for v in vals:
        try:
            jsr_index(v)
        except ValueError as e:
            raise UsageError(str(e)) from None
    return vals


def _load_config(path: str | None) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _jobs(flag: int | None, cfg: RunConfig | None = None) -> int:
    if flag is not None:
        return max(1, flag)
    env = dataset.default_jobs()
    return env if env > 1 or cfg is None else max(1, cfg.jobs)


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    d = cfg.data
    classes = _parse_classes(args.classes if args.classes is not None else (",".join(d.classes) if d.classes else None))
    jsr = _jsr_values(*(a if a is not None else b for a, b in
                        ((args.jsr_min, d.jsr_min), (args.jsr_max, d.jsr_max), (args.jsr_step, d.jsr_step))))
    per_class = args.per_class if args.per_class is not None else d.per_class
    n_test = args.test_per_class if args.test_per_class is not None else d.test_per_class
    val_fraction = args.val_fraction if args.val_fraction is not None else d.val_fraction
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise UsageError(f"{out} exists and is not empty; pass --force to overwrite")
        shutil.rmtree(out)
    if per_class < 1 or n_test < 0:
        raise UsageError("--per-class must be >= 1 and --test-per-class >= 0")
    records, pools = dataset.generate_records(classes, jsr, per_class, n_test, _jobs(args.jobs, cfg),
                                              sample_offset=args.seed_base)
    gen_cfg = {"classes": classes, "jsr": jsr, "per_class": per_class, "test_per_class": n_test,
               "seed_base": args.seed_base}
    manifest = dataset.write_dataset(records, out, pools, gen_cfg)
    splits = dataset.split(manifest, val_fraction, d.split_seed)
    dataset.assign_splits(manifest, splits, val_fraction, d.split_seed)
    manifest.dump(out / dataset.MANIFEST_NAME)
    for s in manifest.strata:
        print(f"{CLASSES[s.class_id].key:<20} {s.jsr_db:5.1f} dB  {s.count}")
    print(f"{len(manifest.strata)} strata, {len(records)} records "
          f"(train {len(splits.train)}, val {len(splits.val)}, test {len(splits.test)}) -> {out}")
    return 0


def _load_data(path: str, jobs: int):
    manifest = dataset.read_manifest(path)
    records = dataset.read_dataset(path, manifest)
    fs = training.extract_features(records, jobs)
    return manifest, fs


def _split_sets(manifest, fs, cfg: RunConfig):
    if any(s.splits is None for s in manifest.strata):
        splits = dataset.split(manifest, cfg.data.val_fraction, cfg.data.split_seed)
    else:
        sel = {name: [sd for s in manifest.strata for sd, sp in zip(s.seeds, s.splits) if sp == name]
               for name in dataset.SPLITS}
        splits = dataset.Splits(*(frozenset(sel[n]) for n in dataset.SPLITS))
    return {n: fs.select_seeds(getattr(splits, n)) for n in dataset.SPLITS}


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    for name in ("epochs", "batch_size", "seed"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg.train, name, v)
    manifest, fs = _load_data(args.data, _jobs(args.jobs, cfg))
    class_ids = sorted({s.class_id for s in manifest.strata})
    if cfg.data.classes is not None and _parse_classes(",".join(cfg.data.classes)) != class_ids:
        raise UsageError(f"config lists classes {cfg.data.classes} but the dataset holds "
                         f"{[CLASSES[c].key for c in class_ids]}")
    cfg.model.n_classes = len(class_ids)
    sets = _split_sets(manifest, fs, cfg)
    model = training.build_model(cfg.model, cfg.train.seed)
    result = training.train(model, sets["train"], class_ids, cfg.train, sets["val"])
    out = Path(args.out)
    ckpt = out / "checkpoint"
    checkpoint.save_checkpoint(ckpt, model, result.optimizer,
                               schedule={"epochs": cfg.train.epochs, "best_epoch": result.best_epoch,
                                         "steps": len(result.loss_history)},
                               extra={"class_ids": class_ids, "dataset_hash": manifest.config_hash,
                                      "run_config": cfg.to_dict()})
    training.write_history(result, out)
    print(f"trained {len(result.loss_history)} steps, best epoch {result.best_epoch}; "
          f"checkpoint {ckpt} (sha256 {checkpoint.checkpoint_hash(ckpt)[:16]})")
    return 0


def _load_ckpt(path: str):
    model, manifest = checkpoint.load_checkpoint(path)
    class_ids = manifest.get("extra", {}).get("class_ids", list(range(model.cfg.n_classes)))
    return model, class_ids


def _eval_set(args, class_ids):
    manifest, fs = _load_data(args.data, _jobs(args.jobs))
    unknown = sorted({s.class_id for s in manifest.strata} - set(class_ids))
    if unknown:
        raise UsageError(f"dataset classes {[CLASSES[c].key for c in unknown]} are not in the checkpoint")
    if args.split == "all":
        return fs
    sets = _split_sets(manifest, fs, RunConfig())
    if not len(sets[args.split]):
        raise UsageError(f"split {args.split!r} is empty in {args.data}")
    return sets[args.split]


def cmd_eval(args) -> int:
    model, class_ids = _load_ckpt(args.ckpt)
    fs = _eval_set(args, class_ids)
    gate = None if args.gate == "learned" else float(args.gate)
    report = training.evaluate(model, fs, class_ids, gate_override=gate)
    if args.bucket_by_jsr:
        print(report.summary())
    else:
        print(f"overall accuracy: {report.overall_accuracy:.4f}")
    if args.out:
        training.write_eval_report(report, args.out, [CLASSES[c].name for c in class_ids])
    return 0


def cmd_report_gates(args) -> int:
    model, class_ids = _load_ckpt(args.ckpt)
    fs = _eval_set(args, class_ids)
    gates = training.gate_report(model, fs, class_ids)
    for j, d in sorted(gates.items()):
        print(f"{j:5.1f} dB  n={d['n']:<5d} g={d['g']['mean']:.4f}+-{d['g']['std']:.4f}  "
              f"s={d['s']['mean']:.4f}+-{d['s']['std']:.4f}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        training.write_gate_csv(gates, args.out)
    return 0


def cmd_check(args) -> int:
    if args.which == "ambiguity":
        res = theory.ambiguity_demo(args.jsr if args.jsr is not None else 40.0, args.n)
        ok, msg = res.verdict()
        if args.out:
            Path(args.out).write_text(json.dumps({**res.__dict__, "verdict": ok, "message": msg}, indent=1) + "\n")
    else:
        if args.data:
            jsr = sorted({s.jsr_db for s in dataset.read_manifest(args.data).strata})
        else:
            jsr = _jsr_values(args.jsr_min, args.jsr_max, args.jsr_step)
        pair = tuple(_parse_classes(args.pair))
        if len(pair) != 2:
            raise UsageError("--pair needs exactly two distinct classes")
        rows = theory.reliability_curve(jsr, args.n, pair)
        for r in rows:
            print(f"{r.jsr_db:5.1f} dB  R_I={r.r_iq:.4g}  R_S={r.r_stft:.4g}  alpha*={r.alpha_star:.4f}")
        ok, msg = theory.reliability_verdict(rows)
        if args.out:
            theory.write_reliability_csv(rows, args.out)
    print(("PASS: " if ok else "FAIL: ") + msg)
    return 0 if ok or not args.strict else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jamlab", description="GNSS jamming classification lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a dataset")
    g.add_argument("--config")
    g.add_argument("--classes", help="comma-separated class keys or ids (default: all 21)")
    g.add_argument("--jsr-min", type=float)
    g.add_argument("--jsr-max", type=float)
    g.add_argument("--jsr-step", type=float)
    g.add_argument("--per-class", type=int, help="train-pool snapshots per (class, JSR)")
    g.add_argument("--test-per-class", type=int, help="held-out test snapshots per (class, JSR)")
    g.add_argument("--val-fraction", type=float)
    g.add_argument("--seed-base", type=int, default=0, help="first sample index of every stratum")
    g.add_argument("--out", required=True)
    g.add_argument("--force", action="store_true")
    g.add_argument("--jobs", type=int)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model on a generated dataset")
    t.add_argument("--config")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--jobs", type=int)
    t.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "evaluate a checkpoint"),
                                 ("report-gates", cmd_report_gates, "per-JSR gate statistics")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--ckpt", required=True)
        e.add_argument("--data", required=True)
        e.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
        e.add_argument("--out")
        e.add_argument("--jobs", type=int)
        if name == "eval":
            e.add_argument("--bucket-by-jsr", action="store_true")
            e.add_argument("--gate", choices=("learned", "0", "1"), default="learned")
        e.set_defaults(func=func)

    c = sub.add_parser("check", help="theory checks")
    c.add_argument("which", choices=("ambiguity", "reliability"))
    c.add_argument("--jsr", type=float, help="ambiguity: JSR in dB (default 40)")
    c.add_argument("--data", help="reliability: take the JSR grid from this dataset")
    c.add_argument("--jsr-min", type=float, default=10.0)
    c.add_argument("--jsr-max", type=float, default=50.0)
    c.add_argument("--jsr-step", type=float, default=10.0)
    c.add_argument("--pair", default=",".join(theory.DEFAULT_PAIR), help="reliability: two class keys or ids")
    c.add_argument("--n", type=int, default=100, help="snapshots per class")
    c.add_argument("--out")
    c.add_argument("--strict", action="store_true", help="exit 2 when the verdict fails")
    c.set_defaults(func=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, DatasetError, checkpoint.CheckpointError, FileNotFoundError) as e:
        print(f"jamlab {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
