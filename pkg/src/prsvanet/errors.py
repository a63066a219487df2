"""Exception hierarchy shared across the package."""


class PRSError(Exception):
    """Base class for every error raised by this package."""


class MalformedElement(PRSError, ValueError):
    pass


class AuthenticationFailure(PRSError):
    """AEAD open failed: tampered ciphertext, associated data or wrong key."""


class InvalidLevel1Signature(PRSError):
    pass


class BadPayloadLength(PRSError, ValueError):
    pass


class InvalidProof(PRSError):
    pass


class InconsistentCommitment(PRSError):
    pass


class DuplicateKey(PRSError):
    pass


class UnknownKey(PRSError, KeyError):
    pass


class UnknownRSU(PRSError, KeyError):
    pass


class ConfigError(PRSError, ValueError):
    pass


class UnknownAdversaryKind(ConfigError):
    pass


class UnsupportedProtocol(PRSError, ValueError):
    pass
