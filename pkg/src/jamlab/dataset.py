"""Binary snapshot files, the JSON-lines manifest, and train/val/test splits.

On-disk layout, one file per (class, JSR) stratum, all little-endian::

    magic    5 bytes  b"CGI21"
    version  u16
    class    u8
    jsr      i16      centi-dB
    count    u32
    length   u32
    payload  count * length * (I f32, Q f32)

The manifest (``manifest.jsonl``) has one JSON object per line: a header line
followed by one line per stratum.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .prng import DOMAIN_SPLIT, substream
from .synthesis import (
    CLASSES,
    JSR_GRID_DB,
    SAMPLE_RATE_HZ,
    SNAPSHOT_LEN,
    LinkBudget,
    SnapshotRecord,
    compose_snapshot,
    get_class,
)

MAGIC = b"CGI21"
FORMAT_VERSION = 1
SCHEMA_VERSION = 1
HEADER = struct.Struct("<5sHBhII")
MANIFEST_NAME = "manifest.jsonl"
POOLS = ("train", "test")
SPLITS = ("train", "val", "test")


class DatasetError(Exception):
    pass


class BadMagic(DatasetError):
    pass


class UnsupportedVersion(DatasetError):
    pass


class TruncatedFile(DatasetError):
    pass


class CountMismatch(DatasetError):
    pass


def stratum_filename(class_id: int, jsr_db: float) -> str:
    return f"c{class_id:02d}_j{int(round(jsr_db * 100)):05d}.bin"


def write_stratum(path: str | Path, class_id: int, jsr_db: float, signals: Sequence[np.ndarray],
                  length: int = SNAPSHOT_LEN) -> int:
    """Write one stratum file; returns the number of bytes written."""
    centi = int(round(jsr_db * 100))
    payload = np.empty((len(signals), length, 2), dtype="<f4")
    for i, x in enumerate(signals):
        x = np.asarray(x)
        if x.shape != (length,):
            raise ValueError(f"record {i} has shape {x.shape}, expected ({length},)")
        payload[i, :, 0] = x.real
        payload[i, :, 1] = x.imag
    head = HEADER.pack(MAGIC, FORMAT_VERSION, class_id, centi, len(signals), length)
    with open(path, "wb") as f:
        f.write(head)
        f.write(payload.tobytes())
    return len(head) + payload.nbytes


def read_stratum(path: str | Path) -> tuple[int, float, np.ndarray]:
    """Return ``(class_id, jsr_db, signals)`` with signals as complex64 ``(count, length)``."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is shorter than the {HEADER.size}-byte header")
    magic, version, class_id, centi, count, length = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: format version {version} not supported (expected {FORMAT_VERSION})")
    expected = HEADER.size + count * length * 8
    if len(raw) < expected:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, header promises {expected} ({count} x {length} samples)")
    if len(raw) > expected:
        raise CountMismatch(f"{path}: {len(raw) - expected} trailing bytes beyond {count} x {length} samples")
    iq = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(count, length, 2)
    sig = np.empty((count, length), dtype=np.complex64)
    sig.real = iq[..., 0]
    sig.imag = iq[..., 1]
    return class_id, centi / 100.0, sig


@dataclass
class Stratum:
    class_id: int
    jsr_db: float
    file: str
    count: int
    sample_indices: list[int]
    seeds: list[int]
    pools: list[str]
    splits: list[str] | None = None


@dataclass
class DatasetManifest:
    classes: dict[int, str]
    jsr_grid: list[float]
    strata: list[Stratum] = field(default_factory=list)
    config_hash: str = ""
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    sample_rate_hz: float = SAMPLE_RATE_HZ
    length: int = SNAPSHOT_LEN
    val_fraction: float | None = None
    split_seed: int | None = None

    def counts(self) -> dict[tuple[int, float], int]:
        return {(s.class_id, s.jsr_db): s.count for s in self.strata}

    def dump(self, path: str | Path) -> None:
        head = {k: v for k, v in asdict(self).items() if k != "strata"}
        head["kind"] = "header"
        head["classes"] = {str(k): v for k, v in self.classes.items()}
        lines = [json.dumps(head, sort_keys=True)]
        for s in self.strata:
            lines.append(json.dumps({"kind": "stratum", **asdict(s)}, sort_keys=True))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        lines = [json.loads(l) for l in Path(path).read_text().splitlines() if l.strip()]
        if not lines or lines[0].get("kind") != "header":
            raise DatasetError(f"{path}: first line must be the manifest header")
        head = dict(lines[0])
        head.pop("kind")
        if head.get("schema_version") != SCHEMA_VERSION:
            raise UnsupportedVersion(f"{path}: manifest schema {head.get('schema_version')} not supported")
        head["classes"] = {int(k): v for k, v in head["classes"].items()}
        m = cls(**head)
        for l in lines[1:]:
            if l.pop("kind", None) != "stratum":
                raise DatasetError(f"{path}: unexpected manifest line {l}")
            m.strata.append(Stratum(**l))
        return m


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def _group(records: Iterable[SnapshotRecord]) -> dict[tuple[int, float], list[SnapshotRecord]]:
    groups: dict[tuple[int, float], list[SnapshotRecord]] = {}
    for r in records:
        groups.setdefault((r.class_id, float(r.jsr_db)), []).append(r)
    return dict(sorted(groups.items()))


def write_dataset(records: Sequence[SnapshotRecord], path: str | Path,
                  pools: dict[int, str] | None = None, config: dict | None = None) -> DatasetManifest:
    """Write one binary file per stratum plus the manifest.

    ``pools`` maps record seed to ``"train"`` or ``"test"`` (default: all train).
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    config = dict(config or {})
    manifest = DatasetManifest(
        classes={c.id: c.name for c in CLASSES},
        jsr_grid=list(JSR_GRID_DB),
        config=config,
        config_hash=config_hash(config),
    )
    for (cid, jsr), recs in _group(records).items():
        fname = stratum_filename(cid, jsr)
        write_stratum(path / fname, cid, jsr, [r.signal for r in recs])
        pool = [(pools or {}).get(r.seed, "train") for r in recs]
        if set(pool) - set(POOLS):
            raise ValueError(f"unknown pool in {set(pool)}")
        manifest.strata.append(Stratum(cid, jsr, fname, len(recs), [r.sample_idx for r in recs],
                                       [r.seed for r in recs], pool))
    manifest.dump(path / MANIFEST_NAME)
    return manifest


def read_manifest(path: str | Path) -> DatasetManifest:
    return DatasetManifest.load(Path(path) / MANIFEST_NAME)


def read_dataset(path: str | Path, manifest: DatasetManifest | None = None) -> list[SnapshotRecord]:
    path = Path(path)
    manifest = manifest or read_manifest(path)
    out = []
    for s in manifest.strata:
        cid, jsr, sig = read_stratum(path / s.file)
        if (cid, jsr) != (s.class_id, s.jsr_db):
            raise CountMismatch(f"{s.file}: header says class {cid} / {jsr} dB, manifest says "
                                f"class {s.class_id} / {s.jsr_db} dB")
        if len(sig) != s.count or sig.shape[1] != manifest.length:
            raise CountMismatch(f"{s.file}: file holds {sig.shape[0]} x {sig.shape[1]}, manifest says "
                                f"{s.count} x {manifest.length}")
        for x, k, seed in zip(sig, s.sample_indices, s.seeds):
            out.append(SnapshotRecord(x, cid, jsr, seed, k))
    return out


@dataclass(frozen=True)
class Splits:
    train: frozenset[int]
    val: frozenset[int]
    test: frozenset[int]

    def of(self, seed: int) -> str:
        for name in SPLITS:
            if seed in getattr(self, name):
                return name
        raise KeyError(seed)


def split(manifest: DatasetManifest, val_fraction: float = 0.2, seed: int = 0) -> Splits:
    """Stratified validation draw from each stratum's train pool; the test pool is untouched."""
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError(f"val_fraction must lie in [0, 1), got {val_fraction}")
    rng = substream(seed, DOMAIN_SPLIT)
    train, val, test = set(), set(), set()
    for s in sorted(manifest.strata, key=lambda s: (s.class_id, s.jsr_db)):
        pool = [sd for sd, p in zip(s.seeds, s.pools) if p == "train"]
        test.update(sd for sd, p in zip(s.seeds, s.pools) if p == "test")
        n_val = int(round(val_fraction * len(pool)))
        chosen = set(np.asarray(pool)[rng.permutation(len(pool))[:n_val]].tolist()) if n_val else set()
        val.update(chosen)
        train.update(sd for sd in pool if sd not in chosen)
    return Splits(frozenset(train), frozenset(val), frozenset(test))


def assign_splits(manifest: DatasetManifest, splits: Splits, val_fraction: float, seed: int) -> None:
    manifest.val_fraction = val_fraction
    manifest.split_seed = seed
    for s in manifest.strata:
        s.splits = [splits.of(sd) for sd in s.seeds]


def _compose(args):
    cid, jsr, k = args
    return compose_snapshot(get_class(cid), LinkBudget(jsr), k)


def generate_records(class_ids: Sequence[int], jsr_values: Sequence[float], n_train: int, n_test: int = 0,
                     jobs: int = 1, sample_offset: int = 0) -> tuple[list[SnapshotRecord], dict[int, str]]:
    """Synthesize every stratum.

    The train pool takes sample indices ``offset + [0, n_train)`` and the test
    pool the ``n_test`` indices after it, so the two never share a seed.
    """
    first = sample_offset
    tasks = [(c, float(j), k) for c in class_ids for j in jsr_values for k in range(first, first + n_train + n_test)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_compose, tasks, chunksize=64))
    else:
        records = [_compose(t) for t in tasks]
    pools = {r.seed: ("train" if r.sample_idx < first + n_train else "test") for r in records}
    return records, pools


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("JAMLAB_JOBS", "1")))
    except ValueError:
        return 1
