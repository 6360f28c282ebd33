"""Round-trip downscale/upscale evaluation and report aggregation.

For each manifest record and each resample spec: downscale by the factor,
upscale back with the 4-tap Lanczos kernel, crop to the original geometry
(ceil rounding can overshoot), then score PSNR and SSIM against the original.
Aggregates are per (class label, algorithm) means; rows with infinite PSNR
are counted but excluded from the PSNR mean.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .dataset import LABELS, Manifest
from .errors import FundusPrepError
from .image import Image, load_image
from .iqa import SsimParams, psnr, ssim
from .resample import (
    ResampleSpec,
    downscale,
    external_dims_note,
    match_external_files,
    upscale_lanczos4,
)


@dataclass(frozen=True)
class QualityRow:
    id: str
    label: int
    algorithm: str
    psnr: float | None
    ssim: float | None
    note: str = ""
    error: str = ""


@dataclass(frozen=True)
class Aggregate:
    label: int
    algorithm: str
    count: int
    psnr_mean: float | None  # mean over finite-PSNR rows; None if there are none
    psnr_inf_count: int
    ssim_mean: float | None


@dataclass
class RoundTripReport:
    rows: list[QualityRow]
    aggregates: list[Aggregate]
    config: dict

    def aggregate_map(self) -> dict:
        return {(a.label, a.algorithm): a for a in self.aggregates}


def roundtrip_one(
    image: Image,
    spec: ResampleSpec,
    scale: int = 8,
    ssim_params: SsimParams | None = None,
    downscaled: Image | None = None,
) -> tuple[float, float]:
    """(PSNR, SSIM) of one image after downscale + Lanczos-4 upscale.

    ``downscaled`` short-circuits the native downscale step; the external
    import path uses it to inject pre-downscaled images.
    """
    if image.width < scale or image.height < scale:
        raise ValueError(f"image {image.width}x{image.height} smaller than scale {scale}")
    if downscaled is None:
        downscaled = downscale(image, spec)
    restored = upscale_lanczos4(downscaled, scale)
    if restored.width > image.width or restored.height > image.height:
        restored = Image(restored.pixels[: image.height, : image.width].copy())
    return psnr(image, restored), ssim(image, restored, ssim_params)


def _evaluate_record(record, specs, scale, ssim_params, external_paths):
    rows = []
    try:
        image = load_image(record.path)
    except FundusPrepError as exc:
        for spec in specs:
            rows.append(QualityRow(record.id, record.label, spec.label, None, None, error=str(exc)))
        return rows
    for spec in specs:
        try:
            note = ""
            pre = None
            if spec.algorithm == "external":
                pre = load_image(external_paths[record.id])
                note = (
                    external_dims_note(image.width, image.height, pre.width, pre.height, scale)
                    or ""
                )
            p, s = roundtrip_one(image, spec, scale, ssim_params, downscaled=pre)
            rows.append(QualityRow(record.id, record.label, spec.label, p, s, note=note))
        except FundusPrepError as exc:
            rows.append(QualityRow(record.id, record.label, spec.label, None, None, error=str(exc)))
    return rows


def roundtrip_eval(
    manifest: Manifest,
    specs: list[ResampleSpec],
    scale: int = 8,
    ssim_params: SsimParams | None = None,
    workers: int = 1,
) -> RoundTripReport:
    """Score every (record, spec) pair; failures become error rows.

    Rows keep manifest order regardless of worker count, so reports are
    byte-identical between runs.
    """
    if not manifest.records:
        raise FundusPrepError("manifest is empty")
    if not specs:
        raise FundusPrepError("no resample specs given")
    ssim_params = ssim_params or SsimParams()

    external_paths: dict[str, object] = {}
    for spec in specs:
        if spec.algorithm == "external":
            external_paths = match_external_files(spec.external_dir, manifest)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_record = list(
                pool.map(
                    lambda r: _evaluate_record(r, specs, scale, ssim_params, external_paths),
                    manifest.records,
                )
            )
    else:
        per_record = [
            _evaluate_record(r, specs, scale, ssim_params, external_paths)
            for r in manifest.records
        ]

    rows = [row for group in per_record for row in group]
    if all(row.error for row in rows):
        raise FundusPrepError("no readable images in manifest")

    # worker count is scheduling, not semantics: identical reports regardless
    config = {
        "scale": scale,
        "ssim": ssim_params.config(),
        "specs": [spec.config() for spec in specs],
    }
    return RoundTripReport(rows, _aggregate(rows), config)


def _aggregate(rows) -> list[Aggregate]:
    groups: dict[tuple[int, str], list[QualityRow]] = {}
    for row in rows:
        if row.error:
            continue
        groups.setdefault((row.label, row.algorithm), []).append(row)
    aggregates = []
    for (label, algorithm) in sorted(groups):
        scored = groups[(label, algorithm)]
        finite = [r.psnr for r in scored if not math.isinf(r.psnr)]
        aggregates.append(
            Aggregate(
                label=label,
                algorithm=algorithm,
                count=len(scored),
                psnr_mean=sum(finite) / len(finite) if finite else None,
                psnr_inf_count=len(scored) - len(finite),
                ssim_mean=sum(r.ssim for r in scored) / len(scored),
            )
        )
    return aggregates


@dataclass(frozen=True)
class RankEntry:
    algorithm: str
    value: float
    tied: bool


def rank_algorithms(report: RoundTripReport) -> dict[int, dict[str, list[RankEntry]]]:
    """Per class, algorithms sorted by descending mean PSNR and mean SSIM.

    All-infinite-PSNR aggregates rank first (perfect reconstruction). Ties
    sort alphabetically and are flagged.
    """
    if not report.aggregates:
        raise FundusPrepError("cannot rank an empty report")

    def build(metric) -> dict[int, list[RankEntry]]:
        per_class: dict[int, list] = {}
        for agg in report.aggregates:
            value = metric(agg)
            if value is None:
                continue
            per_class.setdefault(agg.label, []).append((agg.algorithm, value))
        out = {}
        for label, pairs in per_class.items():
            pairs.sort(key=lambda av: (-av[1], av[0]))
            values = [v for _, v in pairs]
            out[label] = [
                RankEntry(a, v, tied=values.count(v) > 1) for a, v in pairs
            ]
        return out

    def psnr_value(agg):
        if agg.psnr_mean is None:
            return math.inf if agg.psnr_inf_count else None
        return agg.psnr_mean

    by_psnr = build(psnr_value)
    by_ssim = build(lambda a: a.ssim_mean)
    return {
        label: {"psnr": by_psnr.get(label, []), "ssim": by_ssim.get(label, [])}
        for label in sorted(set(by_psnr) | set(by_ssim))
    }


def _num(value):
    if value is None:
        return ""
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return repr(value)


def report_to_csv(report: RoundTripReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label", "algorithm", "psnr", "ssim", "note", "error"])
    for r in report.rows:
        writer.writerow([r.id, r.label, r.algorithm, _num(r.psnr), _num(r.ssim), r.note, r.error])
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def report_to_json(report: RoundTripReport) -> str:
    payload = {
        "config": report.config,
        "rows": [
            {
                "id": r.id,
                "label": r.label,
                "algorithm": r.algorithm,
                "psnr": _json_safe(r.psnr),
                "ssim": r.ssim,
                "note": r.note,
                "error": r.error,
            }
            for r in report.rows
        ],
        "aggregates": [
            {
                "label": a.label,
                "algorithm": a.algorithm,
                "count": a.count,
                "psnr_mean": a.psnr_mean,
                "psnr_inf_count": a.psnr_inf_count,
                "ssim_mean": a.ssim_mean,
            }
            for a in report.aggregates
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def format_report_tables(report: RoundTripReport) -> str:
    """Aligned per-class mean tables, one block per metric."""
    algorithms = sorted({a.algorithm for a in report.aggregates})
    amap = report.aggregate_map()
    labels = [l for l in LABELS if any(a.label == l for a in report.aggregates)]
    width = max(12, max((len(a) for a in algorithms), default=0) + 2)

    def block(title, getter):
        lines = [title, "class".ljust(8) + "".join(a.rjust(width) for a in algorithms)]
        for label in labels:
            cells = []
            for algorithm in algorithms:
                agg = amap.get((label, algorithm))
                if agg is None:
                    cells.append("-".rjust(width))
                    continue
                value = getter(agg)
                cells.append(("inf" if value is None else f"{value:.6f}").rjust(width))
            lines.append(str(label).ljust(8) + "".join(cells))
        return "\n".join(lines)

    psnr_block = block("Mean PSNR (dB)", lambda a: a.psnr_mean)
    ssim_block = block("Mean SSIM", lambda a: a.ssim_mean)
    return psnr_block + "\n\n" + ssim_block + "\n"
