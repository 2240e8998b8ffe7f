"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the model domain (e.g. on or outside the unit circle)."""


class PreconditionError(ValueError):
    """An operation was called outside the regime where its result is meaningful."""


class ResourceError(RuntimeError):
    """Enumeration exceeded a configured element or word-length cap."""

    def __init__(self, message, partial_count):
        super().__init__(f"{message} (partial count {partial_count})")
        self.partial_count = partial_count


class CacheIntegrityError(IOError):
    """A cache file failed its content-hash check."""


class ConfigError(ValueError):
    """A run configuration is malformed or violates its invariants."""
