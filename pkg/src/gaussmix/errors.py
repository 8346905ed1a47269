"""Exception types raised by the library."""


class GmmError(Exception):
    """Base class for library-specific failures."""


class ModelFormatError(GmmError):
    """A model file is not readable as a diagonal-GMM model."""


class DataError(GmmError):
    """A dataset file is missing, malformed or contains invalid values."""


class FitError(GmmError):
    """Training failed, e.g. the mixture density underflowed to zero for a
    sample or every component lost its responsibility mass."""
