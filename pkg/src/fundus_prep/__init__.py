"""Fundus image preprocessing and downscaling-evaluation toolkit."""

__version__ = "0.1.0"

from .clf_metrics import (
    ConfusionMatrix,
    MulticlassMatrix,
    ScreeningMetrics,
    binarize,
    confusion,
    metrics,
)
from .dataset import (
    DatasetRecord,
    Manifest,
    amalgamate,
    load_manifest,
    read_manifest,
    stratified_split,
    write_manifest,
)
from .errors import FundusPrepError
from .harness import (
    QualityRow,
    RoundTripReport,
    rank_algorithms,
    roundtrip_eval,
    roundtrip_one,
)
from .image import (
    CropBox,
    Image,
    PadResult,
    crop_borders,
    load_image,
    pad_to,
    save_image,
    stitch_quadrants,
    tile_quadrants,
)
from .iqa import SsimParams, mse, psnr, ssim
from .kernels import kernel_weight
from .resample import (
    ResampleSpec,
    downscale,
    import_external,
    rdip_downscale,
    upscale_lanczos4,
)

__all__ = [
    "ConfusionMatrix",
    "CropBox",
    "DatasetRecord",
    "FundusPrepError",
    "Image",
    "Manifest",
    "MulticlassMatrix",
    "PadResult",
    "QualityRow",
    "ResampleSpec",
    "RoundTripReport",
    "ScreeningMetrics",
    "SsimParams",
    "amalgamate",
    "binarize",
    "confusion",
    "crop_borders",
    "downscale",
    "import_external",
    "kernel_weight",
    "load_image",
    "load_manifest",
    "metrics",
    "mse",
    "pad_to",
    "psnr",
    "rank_algorithms",
    "rdip_downscale",
    "read_manifest",
    "roundtrip_eval",
    "roundtrip_one",
    "save_image",
    "ssim",
    "stitch_quadrants",
    "stratified_split",
    "tile_quadrants",
    "upscale_lanczos4",
    "write_manifest",
]
