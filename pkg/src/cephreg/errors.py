"""Exception types shared across the package."""


class CephregError(Exception):
    """Base class for all package errors."""


class DataError(CephregError):
    """Invalid or inconsistent input data (bad files, empty sets, unknown codes)."""


class MeshParseError(DataError):
    """Mesh file could not be parsed.

    Carries the byte offset of the first offending location so broken
    exports can be inspected with a hex editor.
    """

    def __init__(self, path, byte_offset, message):
        self.path = str(path)
        self.byte_offset = int(byte_offset)
        super().__init__(f"{self.path}: byte {self.byte_offset}: {message}")


class NumericalError(CephregError):
    """Degenerate geometry or a numerically unusable configuration."""
