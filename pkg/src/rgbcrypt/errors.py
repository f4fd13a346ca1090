"""Exception hierarchy shared by every layer of the library."""


class RgbCryptError(Exception):
    """Base class for all rgbcrypt errors."""


class CodecError(RgbCryptError, ValueError):
    """A symbol, axis triple or mangled record is out of range or corrupt."""


class InvalidKeyError(RgbCryptError, ValueError):
    """Invalid key material (non-unimodular matrix, broken homogeneity)."""


class KeyFileError(InvalidKeyError):
    """A key file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CipherError(RgbCryptError, ValueError):
    """Encryption or decryption failed for a specific symbol position."""

    def __init__(self, message, position=None, axis=None):
        super().__init__(message)
        self.position = position
        self.axis = axis


class FramingError(RgbCryptError, ValueError):
    """Malformed packet bytes.  ``offset`` points at the offending byte when known."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TransportError(RgbCryptError):
    """Channel or stream level failure."""


class PreambleError(TransportError):
    pass


class DesyncError(TransportError):
    """The receiver saw a counter or packet number it did not expect."""

    def __init__(self, field, expected, actual):
        super().__init__(f"desync: {field} expected {expected}, actual {actual}")
        self.field = field
        self.expected = expected
        self.actual = actual
