"""Exception hierarchy shared by all pipeline stages."""


class StereoLaneError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedFormat(StereoLaneError):
    """Raster file exists but is not an 8-bit gray/RGB PNG or P5 PGM."""


class InvalidParameter(StereoLaneError):
    """A filter or matcher parameter is outside its documented domain."""


class ImageTooSmall(StereoLaneError):
    """Operation needs a larger raster than was supplied."""


class DegenerateInput(StereoLaneError):
    """Fit cannot be determined (rank-deficient point set)."""


class NoHorizon(StereoLaneError):
    """Road profile has no physically meaningful root of f(v) = 0."""


class OutOfBounds(StereoLaneError):
    """Requested block or pixel leaves the image."""


class SizeMismatch(StereoLaneError):
    """Stereo pair images differ in size."""


class EmptyInput(StereoLaneError):
    """Vote matrix or point list is empty."""


class InvalidConfig(StereoLaneError):
    """Scene or pipeline configuration violates its invariants."""


class MissingFrame(StereoLaneError):
    """Sequence directory holds no usable frame pairs."""


class PairMismatch(StereoLaneError):
    """A left frame has no right partner (or sizes differ)."""


class TruthMismatch(StereoLaneError):
    """Ground-truth directory does not line up with the sequence."""
