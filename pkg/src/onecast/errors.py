"""Exception types shared across the package."""


class OnecastError(Exception):
    """Base class for all package errors."""


class DimensionError(OnecastError):
    """Image or block dimensions violate a precondition."""


class CodecError(OnecastError):
    """Encoded payload is malformed; carries the byte offset of the fault."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class FramingError(OnecastError):
    """Length-prefixed stream is corrupt (oversized or impossible header)."""


class StripError(OnecastError):
    """Frame does not carry a readable timestamp strip."""


class EndOfStream(OnecastError):
    """A non-looping file source has no more frames."""


class StateError(OnecastError):
    """Operation not permitted in the current layout or session state."""


class ConfigError(OnecastError):
    """Invalid configuration value or unusable runtime environment."""


class ProtocolError(OnecastError):
    """Peer sent bytes that do not parse as the expected protocol."""


class StoreError(OnecastError):
    """Append-only store row rejected or replay failed."""
