"""Certified rational enclosures of the natural logarithm.

The revenue bounds contain irrational ln terms, and the verdicts must stay
sound under exact arithmetic.  Every ln is therefore replaced by a directed
rational bound: ``ln_lower(x) <= ln(x) <= ln_upper(x)`` with enclosure width
below 1e-6.  Computed from the atanh series ln(y) = 2*sum t^(2k+1)/(2k+1)
with t = (y-1)/(y+1) after range reduction to y in [1, 2), whose truncation
error has the closed-form tail bound used here.
"""

from __future__ import annotations

from fractions import Fraction

DEFAULT_ERR = Fraction(1, 10**6)
_ROUND_DEN = 10**12


def _round_down(q: Fraction, den=_ROUND_DEN) -> Fraction:
    return Fraction(q.numerator * den // q.denominator, den)


def _round_up(q: Fraction, den=_ROUND_DEN) -> Fraction:
    return Fraction(-((-q.numerator) * den // q.denominator), den)


def _atanh_twice(t: Fraction, err: Fraction):
    """Enclosure of 2*atanh(t) for 0 <= t < 1; fast for t <= 1/3."""
    if t == 0:
        return Fraction(0), Fraction(0)
    total = Fraction(0)
    power = t
    t2 = t * t
    j = 1
    while True:
        total += 2 * power / j
        # tail: 2 * sum_{i>j odd} t^i / i  <  2 t^(j+2) / ((j+2)(1-t^2))
        tail = 2 * power * t2 / ((j + 2) * (1 - t2))
        if tail < err:
            return total, total + tail
        power *= t2
        j += 2


def _ln2_enclosure():
    # ln 2 = 2*atanh(1/3); cached far tighter than callers need so that
    # multiplying by the range-reduction exponent stays within budget.
    return _atanh_twice(Fraction(1, 3), Fraction(1, 10**15))


_LN2_LO, _LN2_HI = _ln2_enclosure()


def ln_bounds(x, err: Fraction = DEFAULT_ERR):
    """Return rationals (lo, hi) with lo <= ln(x) <= hi and hi - lo < err."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("ln requires a positive argument")
    if x == 1:
        return Fraction(0), Fraction(0)
    if x < 1:
        lo, hi = ln_bounds(1 / x, err)
        return -hi, -lo
    k = 0
    y = x
    while y >= 2:
        y /= 2
        k += 1
    serr = err / 2
    ylo, yhi = _atanh_twice((y - 1) / (y + 1), serr)
    lo = k * _LN2_LO + ylo
    hi = k * _LN2_HI + yhi
    assert hi - lo < err
    return _round_down(lo), _round_up(hi)


def ln_lower(x) -> Fraction:
    return ln_bounds(x)[0]


def ln_upper(x) -> Fraction:
    return ln_bounds(x)[1]


def harmonic(n: int) -> Fraction:
    """Exact n-th harmonic number 1 + 1/2 + ... + 1/n."""
    if n < 0:
        raise ValueError("harmonic requires n >= 0")
    return sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0))
