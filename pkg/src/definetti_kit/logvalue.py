"""Signed numbers stored as (sign, log|x|).

Bounds such as ``8 k^{3/2} exp(-k delta^2)`` underflow doubles long before
they become uninteresting, so every bound evaluator returns a ``LogValue``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable

_NEG_INF = float("-inf")


@total_ordering
@dataclass(frozen=True)
class LogValue:
    sign: int
    log_magnitude: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if math.isnan(self.log_magnitude):
            raise ValueError("log_magnitude is NaN")
        if (self.sign == 0) != (self.log_magnitude == _NEG_INF):
            raise ValueError("sign is 0 exactly when log_magnitude is -inf")

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> LogValue:
        return cls(0, _NEG_INF)

    @classmethod
    def one(cls) -> LogValue:
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> LogValue:
        if x == 0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_magnitude: float, sign: int = 1) -> LogValue:
        if log_magnitude == _NEG_INF or sign == 0:
            return cls.zero()
        return cls(sign, float(log_magnitude))

    @classmethod
    def sum(cls, values: Iterable[LogValue]) -> LogValue:
        """Sum many values with a single log-sum-exp per sign."""
        pos, neg = [], []
        for v in values:
            if v.sign > 0:
                pos.append(v.log_magnitude)
            elif v.sign < 0:
                neg.append(v.log_magnitude)
        return _lse(pos) - _lse(neg)

    # conversion -------------------------------------------------------
    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf

    def log(self) -> float:
        if self.sign < 0:
            raise ValueError("log of a negative LogValue")
        return self.log_magnitude

    @property
    def display(self) -> str:
        """Human-readable scientific notation that survives underflow."""
        if self.sign == 0:
            return "0"
        log10 = self.log_magnitude / math.log(10)
        exponent = math.floor(log10)
        mantissa = 10 ** (log10 - exponent)
        if mantissa >= 9.9999995:
            mantissa, exponent = 1.0, exponent + 1
        s = "-" if self.sign < 0 else ""
        return f"{s}{mantissa:.6f}e{exponent:+d}"

    def is_zero(self) -> bool:
        return self.sign == 0

    def is_vacuous(self) -> bool:
        """True when the value, read as a probability bound, is at least 1."""
        return self.sign > 0 and self.log_magnitude >= 0.0

    def to_dict(self) -> dict:
        return {"sign": self.sign, "log_magnitude": self.log_magnitude, "display": self.display}

    @classmethod
    def from_dict(cls, d: dict) -> LogValue:
        return cls.from_log(float(d["log_magnitude"]), int(d["sign"]))

    # arithmetic -------------------------------------------------------
    def __neg__(self) -> LogValue:
        return LogValue(-self.sign, self.log_magnitude)

    def __mul__(self, other) -> LogValue:
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    __rmul__ = __mul__

    def __truediv__(self, other) -> LogValue:
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_magnitude - other.log_magnitude)

    def __rtruediv__(self, other) -> LogValue:
        return _coerce(other) / self

    def __pow__(self, p: float) -> LogValue:
        if self.sign < 0:
            raise ValueError("power of a negative LogValue")
        if self.sign == 0:
            if p > 0:
                return LogValue.zero()
            raise ZeroDivisionError("0 ** non-positive power")
        return LogValue(1, self.log_magnitude * p)

    def __add__(self, other) -> LogValue:
        other = _coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        ratio = math.exp(lo.log_magnitude - hi.log_magnitude)
        if hi.sign == lo.sign:
            return LogValue(hi.sign, hi.log_magnitude + math.log1p(ratio))
        if ratio == 1.0:
            return LogValue.zero()
        return LogValue(hi.sign, hi.log_magnitude + math.log1p(-ratio))

    __radd__ = __add__

    def __sub__(self, other) -> LogValue:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> LogValue:
        return _coerce(other) - self

    # ordering ---------------------------------------------------------
    def _key(self):
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log_magnitude)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = LogValue.from_float(other)
        if not isinstance(other, LogValue):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = LogValue.from_float(other)
        if not isinstance(other, LogValue):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"LogValue({self.display}, log={self.log_magnitude:.12g})"


def _coerce(x) -> LogValue:
    if isinstance(x, LogValue):
        return x
    if isinstance(x, (int, float)):
        return LogValue.from_float(float(x))
    raise TypeError(f"cannot combine LogValue with {type(x).__name__}")


def _lse(logs) -> LogValue:
    if not logs:
        return LogValue.zero()
    m = max(logs)
    if m == _NEG_INF:
        return LogValue.zero()
    return LogValue(1, m + math.log(math.fsum(math.exp(v - m) for v in logs)))
