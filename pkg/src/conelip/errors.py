"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad ordering, ...)."""


class DomainError(InputError):
    """Evaluation requested outside a map's declared domain."""


class ResourceError(RuntimeError):
    """An enumeration would exceed the configured size cap."""


class CertificationRefused(Exception):
    """A certificate precondition failed.

    Carries the offending point so the caller can inspect or report it.
    """

    def __init__(self, reason, witness=None, detail=None):
        super().__init__(reason)
        self.reason = reason
        self.witness = witness
        self.detail = dict(detail or {})
