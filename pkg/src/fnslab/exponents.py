"""Closed-form exponents of the fractional regularity hierarchy.

Every function returns either a number or an :class:`Undefined` marker
carrying the reason; NaN is never produced. Arguments given as ``int`` or
:class:`fractions.Fraction` are evaluated in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

__all__ = ["Undefined", "LadderExponents", "exponents", "is_defined"]


@dataclass(frozen=True)
class Undefined:
    """Marker for an exponent evaluated outside its range of validity."""

    reason: str

    def __bool__(self) -> bool:
        return False

    def __float__(self) -> float:
        raise ValueError(f"exponent undefined: {self.reason}")


def is_defined(x) -> bool:
    return not isinstance(x, Undefined)


def _num(x):
    """Keep exact rationals exact, turn everything else into float."""
    if isinstance(x, Rational):
        return Fraction(x)
    return float(x)


def _div(a, b, reason: str):
    if b == 0:
        return Undefined(reason)
    return a / b


@dataclass(frozen=True)
class LadderExponents:
    """Exponents attached to the dissipation exponent ``s``.

    ``zeta_s`` requires s > 1/3; ``delta`` and ``gamma`` require s >= 5/6
    (at s = 5/6 both vanish identically).
    ``alpha`` and ``alpha_s`` are defined wherever their denominators are
    positive.
    """

    s: float | Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", _num(self.s))

    @property
    def zeta_s(self):
        s = self.s
        if not s > Fraction(1, 3):
            return Undefined("zeta_s needs s > 1/3")
        return 2 * s / (3 * s - 1)

    @property
    def p(self):
        return (1 - self.s) / 2

    def beta(self, n):
        n = _num(n)
        if not n > self.s:
            return Undefined("beta needs n > s")
        return Fraction(3) / (2 * (n - self.s)) if isinstance(n - self.s, Fraction) \
            else 3.0 / (2.0 * (n - self.s))

    def rho1(self, n):
        b, z = self.beta(n), self.zeta_s
        if not is_defined(b):
            return b
        if not is_defined(z):
            return z
        return 1 + b * z / 2

    def rho2(self, n):
        b, z = self.beta(n), self.zeta_s
        if not is_defined(b):
            return b
        if not is_defined(z):
            return z
        return z * (1 - b) / 2

    def _five_sixths(self, name: str):
        if not self.s >= Fraction(5, 6):
            return Undefined(f"{name} needs s >= 5/6")
        return None

    def delta(self, n):
        bad = self._five_sixths("delta")
        if bad is not None:
            return bad
        n, s = _num(n), self.s
        return _div(6 * s - 5, 2 * n + 4 * s - 5, "delta denominator vanishes")

    def gamma(self, m):
        bad = self._five_sixths("gamma")
        if bad is not None:
            return bad
        m, s = _num(m), self.s
        return _div(6 * s - 5, 2 * (m + 2) * s - 5, "gamma denominator vanishes")

    @staticmethod
    def alpha(n, m):
        n, m = _num(n), _num(m)
        den = 2 * m * (n + 1) - 3
        if not den > 0:
            return Undefined("alpha needs 2m(n+1) > 3")
        return 2 * m / den

    def alpha_s(self, n, m):
        n, m = _num(n), _num(m)
        den = 2 * m * (n + 2 * self.s - 1) - 3
        if not den > 0:
            return Undefined("alpha_s needs 2m(n+2s-1) > 3")
        return 2 * m / den

    def ps_exponent(self):
        """Exponent of the Prodi-Serrin type monitor, equal to zeta_s."""
        return self.zeta_s

    def in_monitor_range(self) -> bool:
        return Fraction(1, 3) < self.s < 1


def exponents(s) -> LadderExponents:
    return LadderExponents(s)
