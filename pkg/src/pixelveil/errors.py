class PixelveilError(Exception):
    pass


class InvalidParameter(PixelveilError, ValueError):
    """A numeric parameter is outside its allowed domain."""


class InvalidInput(PixelveilError, ValueError):
    """Inputs have incompatible shapes, ranges or schemas."""


class ImageIOError(PixelveilError, OSError):
    pass


class SolverError(PixelveilError, RuntimeError):
    pass
