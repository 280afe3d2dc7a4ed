"""Exception hierarchy shared across the package."""


class FrontsealError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FrontsealError, ValueError):
    """An argument lies outside the operation's domain."""


class DecodeError(DomainError):
    """Bytes do not form a canonical encoding."""


class ThresholdError(FrontsealError):
    """Fewer shares than the threshold were supplied."""


class RefusalError(FrontsealError):
    """A trustee refused to act on an unverifiable ciphertext or deal."""


class AuthError(FrontsealError):
    """Authenticated decryption failed: wrong key or tampered envelope."""


class AbortError(FrontsealError):
    """A distributed protocol could not complete (too few honest parties)."""


class StaleKeyError(FrontsealError):
    """The epoch key used for encryption is no longer accepted.

    Retriable: the sender can re-encrypt under the current epoch key.
    """

    retriable = True


class StaleDealError(FrontsealError):
    """A precomputed deal no longer matches the trustee roster on chain."""


class DealReuseError(FrontsealError):
    """A precomputed deal was used for more than one transaction."""


class Rejection(FrontsealError):
    """The chain refused a submission; no state was changed."""


class OrderingError(FrontsealError):
    """An operation was attempted before the transaction reached the required state."""


class KeyRejectedError(FrontsealError):
    """A revealed key does not hash to the committed h_k."""
