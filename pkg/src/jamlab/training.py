"""Feature caching, the training loop, bucketed evaluation and gate reports."""

from __future__ import annotations

import copy
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .features import compute_stats, normalize_iq, spectrogram_image
from .metrics import confusion, f1_per_class, family_groups, overall_accuracy
from .model import GFNet, ModelConfig
from .nn import AdamState, adam_step, lr_at, softmax_xent
from .nn.optim import BASE_LR, WEIGHT_DECAY
from .prng import DOMAIN_TRAIN, substream
from .synthesis import SnapshotRecord

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class FeatureSet:
    """Model inputs for a list of snapshots; spectrograms are cached as float16."""

    iq: np.ndarray  # (N, 2, L) float32
    spec: np.ndarray  # (N, 224, 224) float16
    stats: np.ndarray  # (N, 6) float64, raw
    class_ids: np.ndarray  # (N,) global class ids
    jsr_db: np.ndarray  # (N,)
    seeds: np.ndarray  # (N,) uint64

    def __len__(self) -> int:
        return len(self.class_ids)

    def subset(self, idx) -> "FeatureSet":
        idx = np.asarray(idx)
        return FeatureSet(self.iq[idx], self.spec[idx], self.stats[idx], self.class_ids[idx],
                          self.jsr_db[idx], self.seeds[idx])

    def select_seeds(self, seeds) -> "FeatureSet":
        wanted = set(int(s) for s in seeds)
        return self.subset([i for i, s in enumerate(self.seeds.tolist()) if s in wanted])

    def labels(self, class_ids: Sequence[int]) -> np.ndarray:
        """Map global class ids to positions in ``class_ids`` (the model output order)."""
        lut = {c: i for i, c in enumerate(class_ids)}
        try:
            return np.array([lut[int(c)] for c in self.class_ids], dtype=np.int64)
        except KeyError as e:
            raise ValueError(f"class {e.args[0]} is not among the model's classes {list(class_ids)}") from None


def _features_one(x: np.ndarray):
    return normalize_iq(x), spectrogram_image(x).astype(np.float16), compute_stats(x)


def extract_features(records: Sequence[SnapshotRecord], jobs: int = 1) -> FeatureSet:
    signals = [r.signal for r in records]
    if jobs > 1 and len(signals) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            feats = list(ex.map(_features_one, signals, chunksize=32))
    else:
        feats = [_features_one(x) for x in signals]
    n = len(records)
    length = len(signals[0]) if n else 0
    iq = np.empty((n, 2, length), dtype=np.float32)
    spec = np.empty((n, 224, 224), dtype=np.float16)
    stats = np.empty((n, 6))
    for i, (a, b, c) in enumerate(feats):
        iq[i], spec[i], stats[i] = a, b, c
    return FeatureSet(iq, spec, stats,
                      np.array([r.class_id for r in records], dtype=np.int64),
                      np.array([r.jsr_db for r in records], dtype=float),
                      np.array([r.seed for r in records], dtype=np.uint64))


def stats_normalization(fs: FeatureSet) -> tuple[np.ndarray, np.ndarray]:
    return fs.stats.mean(axis=0), fs.stats.std(axis=0)


def _batch(fs: FeatureSet, idx) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    return (torch.from_numpy(fs.iq[idx]),
            torch.from_numpy(fs.spec[idx].astype(np.float32)),
            torch.from_numpy(fs.stats[idx].astype(np.float32)))


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    base_lr: float = BASE_LR
    weight_decay: float = WEIGHT_DECAY
    warmup_epochs: int = 3
    gate_override: float | None = None


@dataclass
class TrainResult:
    model: GFNet
    loss_history: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = -1
    optimizer: AdamState | None = None

    def epoch_table(self) -> list[dict]:
        return [{"epoch": i + 1, "val_accuracy": a} for i, a in enumerate(self.val_accuracy)]


def build_model(cfg: ModelConfig | None = None, seed: int = 0) -> GFNet:
    torch.manual_seed(seed)
    return GFNet(cfg)


def train(model: GFNet, train_set: FeatureSet, class_ids: Sequence[int], cfg: TrainConfig = TrainConfig(),
          val_set: FeatureSet | None = None, set_stats: bool = True) -> TrainResult:
    """Deterministic given ``cfg.seed``; the model is left holding the best-validation weights."""
    if len(class_ids) != model.cfg.n_classes:
        raise ValueError(f"{len(class_ids)} classes but the model has {model.cfg.n_classes} outputs")
    if set_stats:
        model.set_stats_normalization(*stats_normalization(train_set))
    labels = torch.from_numpy(train_set.labels(class_ids))
    n = len(train_set)
    steps_per_epoch = math.ceil(n / cfg.batch_size) if n else 0
    params = {k: p for k, p in model.named_parameters() if p.requires_grad}
    opt = AdamState(lr=cfg.base_lr, weight_decay=cfg.weight_decay)
    result = TrainResult(model, optimizer=opt)
    best_acc, best_state = -1.0, None
    rng = substream(cfg.seed, DOMAIN_TRAIN)
    torch.manual_seed(cfg.seed)
    step = 0
    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(n)
        for b in range(steps_per_epoch):
            idx = np.sort(order[b * cfg.batch_size:(b + 1) * cfg.batch_size])
            lr = lr_at(step, steps_per_epoch, cfg.epochs, min(cfg.warmup_epochs, cfg.epochs), cfg.base_lr)
            for p in params.values():
                p.grad = None
            out = model(*_batch(train_set, idx), gate_override=cfg.gate_override)
            loss = softmax_xent(out.logits, labels[idx])
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch + 1}, step {step}; batch seeds "
                                       f"{train_set.seeds[idx].tolist()}")
            loss.backward()
            adam_step(opt, params, lr)
            result.loss_history.append(loss.item())
            step += 1
        if val_set is not None and len(val_set):
            acc = evaluate(model, val_set, class_ids, gate_override=cfg.gate_override).overall_accuracy
            result.val_accuracy.append(acc)
            log.info("epoch %d  loss %.4f  val_acc %.4f", epoch + 1, result.loss_history[-1], acc)
            if acc > best_acc:
                best_acc, best_state, result.best_epoch = acc, copy.deepcopy(model.state_dict()), epoch + 1
        elif steps_per_epoch:
            log.info("epoch %d  loss %.4f", epoch + 1, result.loss_history[-1])
    if best_state is not None:
        model.load_state_dict(best_state)
    elif cfg.epochs:
        result.best_epoch = cfg.epochs
    model.eval()
    return result


@dataclass
class Predictions:
    labels: np.ndarray
    predicted: np.ndarray
    g: np.ndarray
    s: np.ndarray
    jsr_db: np.ndarray


@torch.no_grad()
def predict(model: GFNet, fs: FeatureSet, class_ids: Sequence[int], gate_override: float | None = None,
            batch_size: int = 256) -> Predictions:
    was_training = model.training
    model.eval()
    preds, gs, ss = [], [], []
    for start in range(0, len(fs), batch_size):
        idx = np.arange(start, min(start + batch_size, len(fs)))
        out = model(*_batch(fs, idx), gate_override=gate_override)
        preds.append(out.logits.argmax(dim=-1).numpy())
        gs.append(out.g.numpy())
        ss.append(out.s.numpy())
    model.train(was_training)
    cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)
    return Predictions(fs.labels(class_ids), cat(preds, np.int64), cat(gs, float), cat(ss, float), fs.jsr_db.copy())


@dataclass
class EvalReport:
    class_ids: list[int]
    overall_accuracy: float
    confusion: np.ndarray
    accuracy_by_jsr: dict[float, float]
    class_accuracy_by_jsr: dict[float, list[float | None]]
    macro_f1_by_family: dict[str, float]
    gates: dict[float, dict]

    def summary(self) -> str:
        lines = [f"overall accuracy: {self.overall_accuracy:.4f}", "accuracy by JSR:"]
        lines += [f"  {j:5.1f} dB  {a:.4f}" for j, a in self.accuracy_by_jsr.items()]
        lines.append("macro F1 by family:")
        lines += [f"  {k:<10} {v:.4f}" for k, v in self.macro_f1_by_family.items()]
        return "\n".join(lines)


def _dist(x: np.ndarray) -> dict:
    return {"mean": float(x.mean()), "std": float(x.std()),
            "deciles": np.quantile(x, np.linspace(0.1, 0.9, 9)).tolist()}


def gate_statistics(p: Predictions) -> dict[float, dict]:
    out = {}
    for j in np.unique(p.jsr_db):
        m = p.jsr_db == j
        out[float(j)] = {"n": int(m.sum()), "g": _dist(p.g[m]), "s": _dist(p.s[m])}
    return out


def evaluate(model: GFNet, fs: FeatureSet, class_ids: Sequence[int], gate_override: float | None = None,
             batch_size: int = 256) -> EvalReport:
    p = predict(model, fs, class_ids, gate_override, batch_size)
    return report_from_predictions(p, class_ids)


def report_from_predictions(p: Predictions, class_ids: Sequence[int]) -> EvalReport:
    c = len(class_ids)
    cm = confusion(p.labels, p.predicted, c)
    by_jsr, per_class = {}, {}
    for j in np.unique(p.jsr_db):
        m = p.jsr_db == j
        cmj = confusion(p.labels[m], p.predicted[m], c)
        by_jsr[float(j)] = overall_accuracy(cmj)
        support = cmj.sum(axis=1)
        per_class[float(j)] = [float(cmj[i, i] / support[i]) if support[i] else None for i in range(c)]
    f1 = f1_per_class(cm)
    fam = {k: float(np.mean(f1[v])) for k, v in family_groups(class_ids).items()}
    return EvalReport(list(class_ids), overall_accuracy(cm), cm, by_jsr, per_class, fam, gate_statistics(p))


def gate_report(model: GFNet, fs: FeatureSet, class_ids: Sequence[int]) -> dict[float, dict]:
    return gate_statistics(predict(model, fs, class_ids))


def write_gate_csv(gates: dict[float, dict], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        head = ["jsr_db", "n"]
        for name in ("g", "s"):
            head += [f"{name}_mean", f"{name}_std"] + [f"{name}_q{q}0" for q in range(1, 10)]
        w.writerow(head)
        for j, d in sorted(gates.items()):
            row = [j, d["n"]]
            for name in ("g", "s"):
                row += [d[name]["mean"], d[name]["std"], *d[name]["deciles"]]
            w.writerow(row)


def write_eval_report(report: EvalReport, out_dir: str | Path, class_names: Sequence[str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "accuracy_by_jsr.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["jsr_db", "accuracy", *class_names])
        for j, a in report.accuracy_by_jsr.items():
            w.writerow([j, a, *["" if v is None else v for v in report.class_accuracy_by_jsr[j]]])
    with open(out / "macro_f1_by_family.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["family", "macro_f1"])
        w.writerows(report.macro_f1_by_family.items())
    np.savetxt(out / "confusion.csv", report.confusion, fmt="%d", delimiter=",")
    write_gate_csv(report.gates, out / "gates.csv")
    (out / "summary.txt").write_text(report.summary() + "\n")


def write_history(result: TrainResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    with open(out / "loss.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "loss"])
        w.writerows(enumerate(result.loss_history))
    with open(out / "val.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "val_accuracy"])
        w.writerows((r["epoch"], r["val_accuracy"]) for r in result.epoch_table())


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
