"""Manifest ingestion, dataset amalgamation, and stratified splitting.

Split assignment must be bit-reproducible across machines and languages, so
the shuffle uses an explicitly specified generator instead of a library RNG:

* splitmix64: ``state += 0x9E3779B97F4A7C15``; then
  ``z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)``
  with all arithmetic modulo 2**64.
* Per class label c, a stream is seeded with
  ``seed XOR ((c + 1) * 0x9E3779B97F4A7C15 mod 2**64)``.
* Record ids are sorted lexicographically, then shuffled by a Fisher-Yates
  pass (i from n-1 down to 1, j = next() mod (i + 1), swap). The first
  ``round_half_up(test_frac * n)`` ids go to test, the next
  ``round_half_up(val_frac * remainder)`` to val, the rest to train.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ManifestError, SplitError

LABELS = (0, 1, 2, 3, 4)
SPLITS = ("train", "val", "test")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    path: str
    label: int
    source: str
    split: str = ""  # empty until stratified_split assigns one


@dataclass
class Manifest:
    records: list[DatasetRecord]
    source_files: list[str] = field(default_factory=list)
    loaded_at: float = field(default_factory=time.time)  # in-memory only, never serialized

    def __len__(self):
        return len(self.records)

    def class_counts(self) -> dict[int, int]:
        counts = {label: 0 for label in LABELS}
        for record in self.records:
            counts[record.label] += 1
        return counts


class SplitMix64:
    """The 64-bit generator documented in the module header."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _shuffle(items: list, rng: SplitMix64) -> None:
    for i in range(len(items) - 1, 0, -1):
        j = rng.next() % (i + 1)
        items[i], items[j] = items[j], items[i]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def load_manifest(path, source: str, images_dir=None) -> Manifest:
    """Read a dataset label CSV with header columns ``id,label``.

    Extra columns are ignored except ``path``, which overrides the derived
    image location ``<images_dir>/<id>.png`` (images_dir defaults to the CSV's
    directory). Every record is tagged with ``source``.
    """
    path = Path(path)
    base = Path(images_dir) if images_dir is not None else path.parent
    records = []
    seen = set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise ManifestError(f"{path}: header must contain 'id' and 'label' columns")
        for lineno, row in enumerate(reader, start=2):
            rid = (row.get("id") or "").strip()
            raw_label = (row.get("label") or "").strip()
            if not rid or not raw_label:
                raise ManifestError(f"{path}: row {lineno}: missing id or label")
            try:
                label = int(raw_label)
            except ValueError:
                raise ManifestError(f"{path}: row {lineno}: label {raw_label!r} is not an integer")
            if label not in LABELS:
                raise ManifestError(f"{path}: row {lineno}: label {label} outside 0-4")
            if rid in seen:
                raise ManifestError(f"{path}: row {lineno}: duplicate id {rid!r}")
            seen.add(rid)
            img_path = row.get("path") or str(base / f"{rid}.png")
            records.append(DatasetRecord(id=rid, path=img_path, label=label, source=source))
    return Manifest(records, source_files=[str(path)])


def read_manifest(path) -> Manifest:
    """Read a full manifest written by write_manifest (id,path,label,source,split)."""
    path = Path(path)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "path", "label", "source"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ManifestError(f"{path}: header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                label = int(row["label"])
            except (ValueError, KeyError):
                raise ManifestError(f"{path}: row {lineno}: bad label")
            if label not in LABELS:
                raise ManifestError(f"{path}: row {lineno}: label {label} outside 0-4")
            records.append(
                DatasetRecord(
                    id=row["id"],
                    path=row["path"],
                    label=label,
                    source=row["source"],
                    split=row.get("split", "") or "",
                )
            )
    return Manifest(records, source_files=[str(path)])


def write_manifest(manifest: Manifest, path) -> None:
    """Write records as UTF-8 CSV with LF line endings (byte-reproducible)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "path", "label", "source", "split"])
        for r in manifest.records:
            writer.writerow([r.id, r.path, r.label, r.source, r.split])


def amalgamate(manifests: list[Manifest]) -> Manifest:
    """Concatenate several manifests into one, refusing duplicate (source, id)."""
    if not manifests:
        raise ManifestError("amalgamate needs at least one manifest")
    seen = set()
    records = []
    sources = []
    for manifest in manifests:
        sources.extend(manifest.source_files)
        for record in manifest.records:
            key = (record.source, record.id)
            if key in seen:
                raise ManifestError(f"duplicate record {record.id!r} from source {record.source!r}")
            seen.add(key)
            records.append(record)
    return Manifest(records, source_files=sources)


def split_sizes(n: int, test_frac: float, val_frac: float) -> tuple[int, int, int]:
    """(train, val, test) sizes: test rounded from n, val from the remainder."""
    n_test = _round_half_up(test_frac * n)
    rest = n - n_test
    n_val = _round_half_up(val_frac * rest)
    return rest - n_val, n_val, n_test


def stratified_split(
    manifest: Manifest, test_frac: float = 0.2, val_frac: float = 0.2, seed: int = 0
) -> Manifest:
    """Assign train/val/test per class with the documented deterministic shuffle.

    Raises SplitError when any class would leave one of the three splits empty.
    """
    by_label: dict[int, list[str]] = {}
    for record in manifest.records:
        by_label.setdefault(record.label, []).append(record.id)

    assignment: dict[tuple[int, str], str] = {}
    for label in sorted(by_label):
        ids = sorted(by_label[label])
        n_train, n_val, n_test = split_sizes(len(ids), test_frac, val_frac)
        if min(n_train, n_val, n_test) < 1:
            raise SplitError(
                f"class {label} has {len(ids)} records; split "
                f"{n_train}/{n_val}/{n_test} leaves an empty set"
            )
        rng = SplitMix64(seed ^ (((label + 1) * _GOLDEN) & _MASK64))
        _shuffle(ids, rng)
        for rid in ids[:n_test]:
            assignment[(label, rid)] = "test"
        for rid in ids[n_test : n_test + n_val]:
            assignment[(label, rid)] = "val"
        for rid in ids[n_test + n_val :]:
            assignment[(label, rid)] = "train"

    records = [replace(r, split=assignment[(r.label, r.id)]) for r in manifest.records]
    return Manifest(records, source_files=list(manifest.source_files))
