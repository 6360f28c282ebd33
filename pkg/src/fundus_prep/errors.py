"""Exception types shared across the package."""


class FundusPrepError(Exception):
    """Base class for all errors raised by this package."""


class ImageIOError(FundusPrepError):
    """Decoding or encoding an image file failed; message carries the path."""


class SampleKindError(FundusPrepError):
    """An operation received an image of the wrong sample kind."""


class AllBackgroundError(FundusPrepError):
    """Border cropping found no row or column above the threshold."""


class OversizeError(FundusPrepError):
    """Source image does not fit the padding target."""

    def __init__(self, src_w, src_h, target_w, target_h):
        super().__init__(
            f"image {src_w}x{src_h} exceeds padding target {target_w}x{target_h}"
        )
        self.src_w, self.src_h = src_w, src_h
        self.target_w, self.target_h = target_w, target_h


class ManifestError(FundusPrepError):
    """Malformed manifest or predictions CSV; message carries the row number."""


class SplitError(FundusPrepError):
    """A class has too few records to populate train, val and test."""


class ExternalInputError(FundusPrepError):
    """Externally downscaled images do not match the manifest."""
