"""Fixed-point number formats and bit-level primitives.

Three Q-formats are used across the decoder:

* probabilities: unsigned, 32-bit word, 30 fractional bits (values < 4,
  stored probabilities stay <= 1; the two integer bits absorb transient
  sums before rescaling),
* network logits: 8-bit two's complement with 2 fractional bits
  (range -32.00 .. +31.75),
* small constants (exp/log slopes and biases): unsigned with a
  per-constant fractional width.

All arithmetic truncates (shifts toward minus infinity) and saturates
instead of wrapping, matching a shift-based hardware datapath.
"""

from __future__ import annotations

from dataclasses import dataclass

PROB_WIDTH = 32
PROB_FRAC = 30
PROB_MAX_RAW = (1 << PROB_WIDTH) - 1
PROB_ONE = 1 << PROB_FRAC

LOGIT_WIDTH = 8
LOGIT_FRAC = 2
LOGIT_MIN_RAW = -(1 << (LOGIT_WIDTH - 1))
LOGIT_MAX_RAW = (1 << (LOGIT_WIDTH - 1)) - 1


@dataclass
class SatCounter:
    """Diagnostic counter for silent saturation events."""

    mul: int = 0
    add: int = 0
    shift: int = 0

    @property
    def total(self) -> int:
        return self.mul + self.add + self.shift


@dataclass(frozen=True)
class QProb:
    """Unsigned fixed-point probability: value = raw / 2**frac_bits."""

    raw: int
    frac_bits: int = PROB_FRAC

    def __post_init__(self):
        if not 0 <= self.raw <= PROB_MAX_RAW:
            raise ValueError(f"raw {self.raw} outside {PROB_WIDTH}-bit range")

    @property
    def value(self) -> float:
        return self.raw / (1 << self.frac_bits)

    @classmethod
    def from_float(cls, x: float, frac_bits: int = PROB_FRAC) -> "QProb":
        if x < 0:
            raise ValueError("probabilities are unsigned")
        raw = min(int(x * (1 << frac_bits)), PROB_MAX_RAW)
        return cls(raw, frac_bits)


@dataclass(frozen=True)
class QLogit:
    """8-bit two's-complement logit: value = raw / 2**frac_bits."""

    raw: int
    frac_bits: int = LOGIT_FRAC

    def __post_init__(self):
        if not LOGIT_MIN_RAW <= self.raw <= LOGIT_MAX_RAW:
            raise ValueError(f"raw {self.raw} outside {LOGIT_WIDTH}-bit range")

    @property
    def value(self) -> float:
        return self.raw / (1 << self.frac_bits)

    @classmethod
    def from_float(cls, x: float) -> "QLogit":
        raw = round(x * (1 << LOGIT_FRAC))
        return cls(max(LOGIT_MIN_RAW, min(LOGIT_MAX_RAW, raw)))


@dataclass(frozen=True)
class QConst:
    """Unsigned fixed-point constant with a configurable fractional width.

    Used for the exp/log slope pair (4 fractional bits) and the two
    exponential bias values (10-11 fractional bits, set by the binary
    string they are defined with).
    """

    raw: int
    frac_bits: int

    def __post_init__(self):
        if self.raw < 0:
            raise ValueError("constants are unsigned")
        if self.frac_bits < 0:
            raise ValueError("frac_bits must be non-negative")

    @property
    def value(self) -> float:
        return self.raw / (1 << self.frac_bits)

    @classmethod
    def from_binary(cls, text: str) -> "QConst":
        """Parse a binary fraction such as ``0.1011110111`` exactly.

        The fractional width is taken from the number of digits after
        the point.
        """
        if "." in text:
            int_part, frac_part = text.split(".", 1)
        else:
            int_part, frac_part = text, ""
        digits = (int_part + frac_part) or "0"
        if set(digits) - {"0", "1"}:
            raise ValueError(f"not a binary fraction: {text!r}")
        return cls(int(digits, 2), len(frac_part))

    @classmethod
    def from_float(cls, x: float, frac_bits: int) -> "QConst":
        """Quantize a value that must be exactly representable."""
        raw = x * (1 << frac_bits)
        if raw != int(raw):
            raise ValueError(
                f"{x} is not representable with {frac_bits} fractional bits"
            )
        return cls(int(raw), frac_bits)

    def rescaled_raw(self, frac_bits: int) -> int:
        """Raw value re-expressed at another fractional width (truncating)."""
        if frac_bits >= self.frac_bits:
            return self.raw << (frac_bits - self.frac_bits)
        return self.raw >> (self.frac_bits - frac_bits)


def mul_raw(a: int, b: int, frac_bits: int = PROB_FRAC,
            counter: SatCounter | None = None) -> int:
    """Truncating fixed-point product of two unsigned raws, saturating."""
    r = (a * b) >> frac_bits
    if r > PROB_MAX_RAW:
        if counter is not None:
            counter.mul += 1
        return PROB_MAX_RAW
    return r


def add_raw(a: int, b: int, counter: SatCounter | None = None) -> int:
    """Saturating unsigned add of two probability raws."""
    r = a + b
    if r > PROB_MAX_RAW:
        if counter is not None:
            counter.add += 1
        return PROB_MAX_RAW
    return r


def shift_raw(x: int, s: int, counter: SatCounter | None = None) -> int:
    """Shift a probability raw left (saturating) or right (truncating)."""
    if s == 0:
        return x
    if s > 0:
        r = x << s
        if r > PROB_MAX_RAW:
            if counter is not None:
                counter.shift += 1
            return PROB_MAX_RAW
        return r
    return x >> -s


def qmul(a: QProb, b: QProb, counter: SatCounter | None = None) -> QProb:
    """Fixed-point probability product, truncated toward zero."""
    if a.frac_bits != b.frac_bits:
        raise ValueError("operands must share the same fractional width")
    return QProb(mul_raw(a.raw, b.raw, a.frac_bits, counter), a.frac_bits)


def qadd(a: QProb, b: QProb, counter: SatCounter | None = None) -> QProb:
    """Saturating probability sum."""
    if a.frac_bits != b.frac_bits:
        raise ValueError("operands must share the same fractional width")
    return QProb(add_raw(a.raw, b.raw, counter), a.frac_bits)


def leading_one_position(raw: int, frac_bits: int) -> int:
    """Position p of the top set bit, with 2**p <= value < 2**(p+1).

    Measured after fixed-point scaling, so raw=1 at 30 fractional bits
    gives -30 and value 1.0 gives 0.
    """
    if raw <= 0:
        raise ValueError("leading_one_position requires a positive input")
    return raw.bit_length() - 1 - frac_bits


def shift_value(x: QProb, s: int, counter: SatCounter | None = None) -> QProb:
    """Scale a probability by 2**s (left saturating, right truncating)."""
    return QProb(shift_raw(x.raw, s, counter), x.frac_bits)
