"""Exception hierarchy shared across the package."""


class PufStackError(Exception):
    """Base class for all package errors."""


class ValidationError(PufStackError):
    """A parameter or input violates its documented range or shape."""


class ChallengeShapeError(ValidationError):
    """Challenge length does not match the device configuration."""


class ProtocolStateError(PufStackError):
    """A protocol operation was invoked out of order."""


class AuthenticationError(PufStackError):
    """MAC or signature verification failed."""


class ReplayError(AuthenticationError):
    """A previously seen nonce was presented again within the same epoch."""


class TamperError(PufStackError):
    """AEAD authentication failed: ciphertext, nonce, or tag was modified."""


class FormatError(PufStackError):
    """A decrypted or framed payload does not follow its documented schema."""
