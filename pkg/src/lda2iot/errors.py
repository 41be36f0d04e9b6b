"""Exception hierarchy shared by every layer of the package."""


class LDAError(Exception):
    """Base class for all errors raised by lda2iot."""


# --- crypto ---------------------------------------------------------------

class CryptoError(LDAError):
    pass


class InvalidPoint(CryptoError, ValueError):
    """A coordinate pair that is not on the curve was used as a point."""


class IntegrityFailure(CryptoError):
    """Authenticated decryption failed: tampered data or the wrong key."""


class MalformedCiphertext(CryptoError, ValueError):
    pass


class InvalidCurve(CryptoError, ValueError):
    pass


# --- protocol -------------------------------------------------------------

class ProtocolError(LDAError):
    """A protocol step rejected its input.

    The runtime turns every ProtocolError into an Abort{0} on the wire;
    the concrete subclass is kept only in local state.
    """


class StaleTimestamp(ProtocolError):
    pass


class ClockSkew(StaleTimestamp):
    """The message timestamp lies in the receiver's future."""


class VerificationFailure(ProtocolError):
    pass


class IdentityMismatch(VerificationFailure):
    pass


class UnknownUser(ProtocolError):
    pass


class UnknownSensor(ProtocolError):
    pass


class LevelOutOfRange(ProtocolError, ValueError):
    pass


class LevelNotFound(ProtocolError):
    pass


class AccessDenied(ProtocolError):
    """The LDA rule refused the user/sensor level pair."""


class BadCredentials(ProtocolError):
    pass


class EmptyPassword(ProtocolError, ValueError):
    pass


class SessionClosed(ProtocolError):
    """A session context received input after it aborted or completed."""


class PeerAborted(ProtocolError):
    """The peer sent the 0 signal."""


# --- runtime --------------------------------------------------------------

class WireError(LDAError, ValueError):
    pass


class MalformedWire(WireError):
    pass


class UnknownMessageTag(WireError):
    pass


class FieldWidthMismatch(WireError):
    pass


class NoSubscriber(LDAError):
    pass


class SessionTimeout(LDAError):
    pass


class StoreError(LDAError):
    pass


class CorruptStore(StoreError):
    pass


class WrongPassphrase(StoreError):
    pass


# --- harness / bench / cli -----------------------------------------------

class QueryOutOfOrder(LDAError):
    pass


class UnknownScenario(LDAError, KeyError):
    pass


class UnknownField(LDAError, KeyError):
    pass


class InvalidConfig(LDAError, ValueError):
    pass
