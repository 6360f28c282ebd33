"""Command-line front end.

Subcommands: preprocess, roundtrip, split, tile, metrics, psnr, ssim.
Options can also come from a JSON config file (--config); explicit flags win.
Every command that writes outputs drops a resolved-config JSON next to them.
Exit codes: 0 success, 1 some records failed, 2 configuration or fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .clf_metrics import confusion, metrics, read_predictions
from .dataset import (
    Manifest,
    load_manifest,
    read_manifest,
    stratified_split,
    write_manifest,
)
from .errors import FundusPrepError, OversizeError
from .harness import (
    format_report_tables,
    report_to_csv,
    report_to_json,
    roundtrip_eval,
)
from .image import center_crop, crop_borders, load_image, pad_to, save_image, tile_quadrants
from .iqa import SsimParams, psnr as compute_psnr, ssim as compute_ssim
from .resample import ResampleSpec, downscale

log = logging.getLogger("fundus_prep")

WORKERS_ENV = "FUNDUS_PREP_WORKERS"
TILE_SUFFIXES = ("_tl", "_tr", "_bl", "_br")


@dataclass
class PipelineConfig:
    crop_threshold: float = 10.0
    algorithm: str = "bilinear"
    scale: int = 8
    lanczos_taps: int = 4
    rdip_lambda: float = 1.0
    rdip_epsilon: float = 1e-6
    antialias: bool = True
    pad_width: int = 600
    pad_height: int = 600
    fill: int = 0
    tile: bool = False
    center_crop_oversize: bool = False
    out_dir: str = "out"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise FundusPrepError("workers must be >= 1")
        if self.tile and (self.pad_width % 2 or self.pad_height % 2):
            raise FundusPrepError("tiling needs an even pad target")

    def spec(self) -> ResampleSpec:
        return ResampleSpec(
            algorithm=self.algorithm,
            scale=self.scale,
            lanczos_taps=self.lanczos_taps,
            rdip_lambda=self.rdip_lambda,
            rdip_epsilon=self.rdip_epsilon,
            antialias=self.antialias,
        )


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags (parser uses SUPPRESS)."""
    merged = dict(defaults)
    supplied = vars(args)
    config_path = supplied.pop("config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise FundusPrepError(f"{config_path}: unknown config keys {sorted(unknown)}")
        merged.update(loaded)
    merged.update({k: v for k, v in supplied.items() if k in defaults})
    return merged


def _write_run_config(out_dir: Path, payload: dict) -> None:
    payload = dict(payload, version=__version__)
    (out_dir / "run_config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_any_manifest(path: str, source: str | None, images_dir: str | None) -> Manifest:
    if source:
        return load_manifest(path, source, images_dir)
    return read_manifest(path)


# ---------------------------------------------------------------------------
# preprocess


def _preprocess_record(record, cfg: PipelineConfig, out_dir: Path):
    image = load_image(record.path)
    image, _ = crop_borders(image, cfg.crop_threshold)
    image = downscale(image, cfg.spec())
    if image.width > cfg.pad_width or image.height > cfg.pad_height:
        if not cfg.center_crop_oversize:
            raise OversizeError(image.width, image.height, cfg.pad_width, cfg.pad_height)
        image = center_crop(
            image, min(image.width, cfg.pad_width), min(image.height, cfg.pad_height)
        )
    padded = pad_to(image, cfg.pad_width, cfg.pad_height, cfg.fill).image
    out_path = out_dir / f"{record.id}.png"
    save_image(padded, out_path)
    if cfg.tile:
        for suffix, tile in zip(TILE_SUFFIXES, tile_quadrants(padded)):
            save_image(tile, out_dir / f"{record.id}{suffix}.png")
    return out_path


def cmd_preprocess(args) -> int:
    defaults = {
        "crop_threshold": 10.0,
        "algorithm": "bilinear",
        "scale": 8,
        "lanczos_taps": 4,
        "rdip_lambda": 1.0,
        "rdip_epsilon": 1e-6,
        "antialias": True,
        "pad_width": 600,
        "pad_height": 600,
        "fill": 0,
        "tile": False,
        "center_crop_oversize": False,
        "out_dir": "out",
        "workers": _default_workers(),
        "seed": 0,
    }
    manifest_path = args.manifest
    source, images_dir = args.source, args.images_dir
    merged = _merge_config(args, defaults)
    cfg = PipelineConfig(**merged)

    manifest = _load_any_manifest(manifest_path, source, images_dir)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(record):
        try:
            return record, _preprocess_record(record, cfg, out_dir), ""
        except FundusPrepError as exc:
            return record, None, str(exc)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, manifest.records))
    else:
        results = [run(r) for r in manifest.records]

    ok_records, failures = [], []
    for record, out_path, error in results:
        if error:
            failures.append((record.id, error))
            log.error("%s: %s", record.path, error)
        else:
            ok_records.append(
                type(record)(record.id, str(out_path), record.label, record.source, record.split)
            )

    write_manifest(Manifest(ok_records), out_dir / "manifest.csv")
    if failures:
        with open(out_dir / "failures.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("id,error\n")
            for rid, err in failures:
                fh.write(f"{rid},{json.dumps(err)}\n")
    _write_run_config(out_dir, dict(merged, command="preprocess", manifest=manifest_path))
    print(f"preprocessed {len(ok_records)}/{len(manifest.records)} records -> {out_dir}")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# roundtrip


def cmd_roundtrip(args) -> int:
    defaults = {
        "algos": "nearest,bilinear,bicubic,lanczos,rdip",
        "scale": 8,
        "lanczos_taps": 4,
        "rdip_lambda": 1.0,
        "rdip_epsilon": 1e-6,
        "antialias": True,
        "ssim_window": 8,
        "ssim_stride": 1,
        "ssim_range": 255.0,
        "out_dir": "report",
        "workers": _default_workers(),
    }
    manifest_path = args.manifest
    source, images_dir, external_dir = args.source, args.images_dir, args.external_dir
    merged = _merge_config(args, defaults)

    manifest = _load_any_manifest(manifest_path, source, images_dir)
    specs = []
    for name in [a.strip() for a in merged["algos"].split(",") if a.strip()]:
        specs.append(
            ResampleSpec(
                algorithm=name,
                scale=merged["scale"],
                lanczos_taps=merged["lanczos_taps"],
                rdip_lambda=merged["rdip_lambda"],
                rdip_epsilon=merged["rdip_epsilon"],
                antialias=merged["antialias"],
            )
        )
    if external_dir:
        specs.append(
            ResampleSpec(algorithm="external", scale=merged["scale"], external_dir=Path(external_dir))
        )
    ssim_params = SsimParams(
        window=merged["ssim_window"],
        stride=merged["ssim_stride"],
        dynamic_range=merged["ssim_range"],
    )
    report = roundtrip_eval(
        manifest, specs, scale=merged["scale"], ssim_params=ssim_params, workers=merged["workers"]
    )

    out_dir = Path(merged["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(report_to_csv(report), encoding="utf-8")
    (out_dir / "report.json").write_text(report_to_json(report), encoding="utf-8")
    table = format_report_tables(report)
    (out_dir / "report.txt").write_text(table, encoding="utf-8")
    _write_run_config(
        out_dir,
        dict(merged, command="roundtrip", manifest=manifest_path, external_dir=external_dir),
    )
    print(table, end="")
    errors = sum(1 for r in report.rows if r.error)
    print(f"\n{len(report.rows)} rows ({errors} errors) -> {out_dir}")
    return 1 if errors else 0


# ---------------------------------------------------------------------------
# split / tile / metrics / psnr / ssim


def cmd_split(args) -> int:
    manifest = _load_any_manifest(args.manifest, args.source, args.images_dir)
    result = stratified_split(manifest, args.test_frac, args.val_frac, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(result, out)
    config = {
        "command": "split",
        "manifest": args.manifest,
        "test_frac": args.test_frac,
        "val_frac": args.val_frac,
        "seed": args.seed,
        "version": __version__,
    }
    Path(str(out) + ".config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    counts = {split: 0 for split in ("train", "val", "test")}
    for record in result.records:
        counts[record.split] += 1
    print(f"split {len(result.records)} records: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return 0


def cmd_tile(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.image:
        paths = [(Path(args.image).stem, args.image)]
    elif args.manifest:
        manifest = _load_any_manifest(args.manifest, args.source, args.images_dir)
        paths = [(r.id, r.path) for r in manifest.records]
    else:
        raise FundusPrepError("tile needs --image or --manifest")
    failures = 0
    for stem, path in paths:
        try:
            image = load_image(path)
            for suffix, tile in zip(TILE_SUFFIXES, tile_quadrants(image)):
                save_image(tile, out_dir / f"{stem}{suffix}.png")
        except (FundusPrepError, ValueError) as exc:
            failures += 1
            log.error("%s: %s", path, exc)
    print(f"tiled {len(paths) - failures}/{len(paths)} images -> {out_dir}")
    return 1 if failures else 0


def cmd_metrics(args) -> int:
    _, actual, predicted = read_predictions(args.predictions)
    binary, multiclass = confusion(actual, predicted)
    result = metrics(binary)

    def pct(v):
        return "undefined" if v is None else f"{v * 100.0:.2f}%"

    print(
        f"accuracy {pct(result.accuracy)}  sensitivity {pct(result.sensitivity)}  "
        f"specificity {pct(result.specificity)}"
    )
    payload = {
        "counts": {"tp": binary.tp, "tn": binary.tn, "fp": binary.fp, "fn": binary.fn},
        "multiclass": multiclass.counts.tolist(),
        "accuracy": result.accuracy,
        "sensitivity": result.sensitivity,
        "specificity": result.specificity,
        **result.as_percentages(),
    }
    if args.conventional:
        payload["counts_conventional"] = binary.relabeled()
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_psnr(args) -> int:
    value = compute_psnr(load_image(args.image_a), load_image(args.image_b), peak=args.peak)
    print("inf" if value == float("inf") else f"{value:.6f}")
    return 0


def cmd_ssim(args) -> int:
    params = SsimParams(window=args.window, stride=args.stride, dynamic_range=args.range)
    value = compute_ssim(load_image(args.image_a), load_image(args.image_b), params)
    print(f"{value:.6f}")
    return 0


# ---------------------------------------------------------------------------


def _add_manifest_args(p):
    p.add_argument("--manifest", required=True, help="manifest CSV")
    p.add_argument(
        "--source",
        default=None,
        help="treat --manifest as a raw id,label CSV and tag records with this source",
    )
    p.add_argument("--images-dir", default=None, help="image directory for raw label CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundus-prep",
        description="Fundus image preprocessing and downscaling evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sup = argparse.SUPPRESS

    p = sub.add_parser("preprocess", help="crop, downscale, pad (and optionally tile) a manifest")
    _add_manifest_args(p)
    p.add_argument("--config", default=None, help="JSON config file; flags win")
    p.add_argument("--crop-threshold", dest="crop_threshold", type=float, default=sup)
    p.add_argument("--algo", dest="algorithm", default=sup,
                   choices=["nearest", "bilinear", "bicubic", "lanczos", "rdip"])
    p.add_argument("--scale", type=int, default=sup)
    p.add_argument("--lanczos-taps", dest="lanczos_taps", type=int, choices=[4, 6, 8], default=sup)
    p.add_argument("--rdip-lambda", dest="rdip_lambda", type=float, default=sup)
    p.add_argument("--rdip-epsilon", dest="rdip_epsilon", type=float, default=sup)
    p.add_argument("--no-antialias", dest="antialias", action="store_false", default=sup)
    p.add_argument("--pad-width", dest="pad_width", type=int, default=sup)
    p.add_argument("--pad-height", dest="pad_height", type=int, default=sup)
    p.add_argument("--fill", type=int, default=sup)
    p.add_argument("--tile", action="store_true", default=sup)
    p.add_argument("--center-crop-oversize", dest="center_crop_oversize",
                   action="store_true", default=sup)
    p.add_argument("--out-dir", dest="out_dir", default=sup)
    p.add_argument("--workers", type=int, default=sup)
    p.add_argument("--seed", type=int, default=sup)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("roundtrip", help="downscale/upscale round trip with PSNR/SSIM report")
    _add_manifest_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--algos", default=sup, help="comma-separated algorithm list")
    p.add_argument("--external-dir", dest="external_dir", default=None,
                   help="directory of externally downscaled <id>.png files")
    p.add_argument("--scale", type=int, default=sup)
    p.add_argument("--lanczos-taps", dest="lanczos_taps", type=int, choices=[4, 6, 8], default=sup)
    p.add_argument("--rdip-lambda", dest="rdip_lambda", type=float, default=sup)
    p.add_argument("--rdip-epsilon", dest="rdip_epsilon", type=float, default=sup)
    p.add_argument("--no-antialias", dest="antialias", action="store_false", default=sup)
    p.add_argument("--ssim-window", dest="ssim_window", type=int, default=sup)
    p.add_argument("--ssim-stride", dest="ssim_stride", type=int, default=sup)
    p.add_argument("--ssim-range", dest="ssim_range", type=float, default=sup,
                   help="SSIM dynamic range L")
    p.add_argument("--out-dir", dest="out_dir", default=sup)
    p.add_argument("--workers", type=int, default=sup)
    p.set_defaults(fn=cmd_roundtrip)

    p = sub.add_parser("split", help="deterministic class-wise stratified split")
    _add_manifest_args(p)
    p.add_argument("--test-frac", dest="test_frac", type=float, default=0.2)
    p.add_argument("--val-frac", dest="val_frac", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output manifest CSV")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("tile", help="cut images into four corner tiles")
    p.add_argument("--manifest", default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--images-dir", default=None)
    p.add_argument("--image", default=None, help="tile a single image instead of a manifest")
    p.add_argument("--out-dir", dest="out_dir", default="tiles")
    p.set_defaults(fn=cmd_tile)

    p = sub.add_parser("metrics", help="screening metrics from a predictions CSV")
    p.add_argument("--predictions", required=True, help="CSV with id,actual,predicted")
    p.add_argument("--out", default=None, help="write full-precision JSON here")
    p.add_argument("--conventional", action="store_true",
                   help="also emit conventionally-labeled fp/fn counts")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("psnr", help="PSNR between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--peak", type=float, default=255.0)
    p.set_defaults(fn=cmd_psnr)

    p = sub.add_parser("ssim", help="SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--range", type=float, default=255.0)
    p.set_defaults(fn=cmd_ssim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.fn(args)
    except FundusPrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
