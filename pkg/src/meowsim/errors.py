"""Exception hierarchy shared across the simulator."""


class MeowError(Exception):
    """Base class for all package-specific errors."""


# --- topology -----------------------------------------------------------

class SegmentCountExceeded(MeowError):
    """A topology declared more EtherCAT segments than one controller supports."""


class EmptySegment(MeowError):
    """A segment spec with zero devices."""


class NegativeTiming(MeowError):
    """A timing parameter or phase below zero."""


class IndexOutOfRange(MeowError):
    """Segment or device index outside the topology."""


# --- codec --------------------------------------------------------------

class CodecError(MeowError):
    """Base class for wire-format errors."""


class OversizeFrame(CodecError):
    """Encoded frame would exceed the Ethernet payload budget."""


class TruncatedFrame(CodecError):
    """Byte buffer ends before the declared frame content does."""


class BadType(CodecError):
    """Frame header type nibble is not an EtherCAT PDU frame."""


class LengthMismatch(CodecError):
    """Declared lengths disagree with the bytes actually present."""


class UnknownCommand(CodecError):
    """Datagram command byte outside the EtherCAT command set."""


class UnsupportedCommand(CodecError):
    """Datagram command valid on the wire but not applicable here."""


# --- engine -------------------------------------------------------------

class SchedulingInPast(MeowError):
    """An event was scheduled before the current virtual clock."""


# --- device controller --------------------------------------------------

class UnknownTarget(MeowError):
    """Configure request names a segment/device not in the topology."""


class DuplicateRequestId(MeowError):
    """A request id was submitted twice."""


class TooManySegments(MeowError):
    """Configure request spans more segments than the controller drives."""


class UnknownRequest(MeowError):
    """No record of the given request id."""


class NotYetComplete(MeowError):
    """Completion report asked for before the request finished."""


# --- bench ----------------------------------------------------------------

class IoFailure(MeowError):
    """Export file could not be written or read."""


# --- network controller -------------------------------------------------

class NoCapacity(MeowError):
    """No free switch word satisfies the allocation."""


class WrongState(MeowError):
    """Path operation not legal in the path's current state."""


class UnknownPath(MeowError):
    """No path table entry with the given id."""
