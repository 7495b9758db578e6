"""Exact continued-fraction data for irrational rotation numbers in (0, 1).

A rotation number theta = [a_1, a_2, ...] is carried around as its coefficient
prefix together with the convergents p_n/q_n computed by the standard
recursion

    p_0 = 0, p_1 = 1,   p_n = a_n p_{n-1} + p_{n-2}
    q_0 = 1, q_1 = a_1, q_n = a_n q_{n-1} + q_{n-2}

so that |theta - p_n/q_n| < 1/(q_n q_{n+1}) for every tail-consistent value.
theta itself is never stored as a float; rational and eventually periodic
inputs keep enough structure to extend the prefix on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import InternalConsistencyError, ResourceLimitError

__all__ = [
    "RotationNumber",
    "convergents",
    "coefficients_from_rational",
    "from_rational",
    "from_periodic",
    "is_bounded_density",
]


@dataclass(frozen=True)
class RotationNumber:
    """Continued-fraction prefix of a rotation number, with convergents.

    coefficients holds a_1..a_N; numerators and denominators hold p_0..p_N
    and q_0..q_N.  density_stat is the running maximum of the partial
    averages (1/n) sum_{i<=n} a_i, kept exact.  growth_bound is the least
    B observed with q_n <= B**n over the stored range.

    tail_period, when set, lists coefficients that repeat forever after the
    first preperiod_length entries; exact_value, when set, means theta is
    exactly that rational and the stored coefficients are its full expansion.
    A plain prefix (both unset) pins theta only to the interval of
    tail-consistent values between its last two convergents.
    """

    coefficients: tuple[int, ...]
    numerators: tuple[int, ...]
    denominators: tuple[int, ...]
    density_stat: Fraction
    growth_bound: float
    tail_period: tuple[int, ...] | None = None
    preperiod_length: int = 0
    exact_value: Fraction | None = None

    @property
    def depth(self) -> int:
        return len(self.coefficients)

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.numerators[n], self.denominators[n])

    def extended(self, depth: int) -> "RotationNumber":
        """Same rotation number with the prefix unrolled to `depth` terms.

        Needs a tail rule: rational numbers have a finite expansion and a
        bare prefix carries no information past its end.
        """
        if depth <= self.depth:
            return self
        if self.tail_period is None:
            raise ResourceLimitError(
                f"prefix of length {self.depth} has no tail rule; "
                f"cannot extend to depth {depth}"
            )
        coeffs = list(self.coefficients)
        per = self.tail_period
        i = (self.depth - self.preperiod_length) % len(per)
        while len(coeffs) < depth:
            coeffs.append(per[i % len(per)])
            i += 1
        out = convergents(coeffs, depth)
        return RotationNumber(
            coefficients=out.coefficients,
            numerators=out.numerators,
            denominators=out.denominators,
            density_stat=out.density_stat,
            growth_bound=out.growth_bound,
            tail_period=self.tail_period,
            preperiod_length=self.preperiod_length,
        )


def _validate_coefficients(coefficients) -> tuple[int, ...]:
    coeffs = tuple(int(a) for a in coefficients)
    for i, a in enumerate(coeffs):
        if a < 1:
            raise ValueError(f"coefficient a_{i + 1} = {a}; all must be >= 1")
    return coeffs


def convergents(coefficients, depth: int | None = None) -> RotationNumber:
    """Build a RotationNumber from a coefficient sequence.

    depth defaults to the full sequence and must not exceed it.
    """
    coeffs = _validate_coefficients(coefficients)
    if depth is None:
        depth = len(coeffs)
    if depth < 1 or depth > len(coeffs):
        raise ValueError(f"depth {depth} out of range 1..{len(coeffs)}")
    coeffs = coeffs[:depth]

    p = [0, 1]
    q = [1, coeffs[0]]
    for n in range(2, depth + 1):
        a = coeffs[n - 1]
        p.append(a * p[n - 1] + p[n - 2])
        q.append(a * q[n - 1] + q[n - 2])

    total = 0
    best = Fraction(0)
    for n, a in enumerate(coeffs, start=1):
        total += a
        avg = Fraction(total, n)
        if avg > best:
            best = avg

    growth = max(q[n] ** (1.0 / n) for n in range(1, depth + 1))

    # q_{n+4} >= 2(q_{n+1} + q_n) + q_{n-1}, a consequence of a_i >= 1 used
    # downstream to budget window lengths; checked on every construction.
    for n in range(4, depth - 3):
        if q[n + 4] < 2 * (q[n + 1] + q[n]) + q[n - 1]:
            raise InternalConsistencyError(
                f"denominator growth failed at n={n}: q={q[n - 1:n + 5]}"
            )

    return RotationNumber(
        coefficients=coeffs,
        numerators=tuple(p),
        denominators=tuple(q),
        density_stat=best,
        growth_bound=growth,
    )


def coefficients_from_rational(p: int, q: int) -> tuple[int, ...]:
    """Continued-fraction expansion of p/q in (0, 1), canonical form.

    Canonical means the final coefficient is >= 2, which makes the
    expansion unique.
    """
    p, q = int(p), int(q)
    if q <= 0 or not 0 < p < q:
        raise ValueError(f"need 0 < p < q, got {p}/{q}")
    g = gcd(p, q)
    p, q = p // g, q // g
    coeffs: list[int] = []
    num, den = q, p  # expanding 1/(p/q)
    while den:
        a, rem = divmod(num, den)
        coeffs.append(a)
        num, den = den, rem
    if len(coeffs) > 1 and coeffs[-1] == 1:
        coeffs.pop()
        coeffs[-1] += 1
    return tuple(coeffs)


def from_rational(p: int, q: int) -> RotationNumber:
    """RotationNumber for an exactly rational theta = p/q."""
    coeffs = coefficients_from_rational(p, q)
    r = convergents(coeffs)
    if r.convergent(r.depth) != Fraction(p, q):
        raise InternalConsistencyError("expansion does not reproduce p/q")
    return RotationNumber(
        coefficients=r.coefficients,
        numerators=r.numerators,
        denominators=r.denominators,
        density_stat=r.density_stat,
        growth_bound=r.growth_bound,
        exact_value=Fraction(p, q),
    )


def from_periodic(preperiod, period, depth: int) -> RotationNumber:
    """RotationNumber for an eventually periodic expansion, unrolled to depth."""
    pre = _validate_coefficients(preperiod) if preperiod else ()
    per = _validate_coefficients(period)
    if not per:
        raise ValueError("period must be non-empty")
    if depth < max(1, len(pre)):
        raise ValueError(f"depth {depth} shorter than preperiod")
    coeffs = list(pre)
    i = 0
    while len(coeffs) < depth:
        coeffs.append(per[i % len(per)])
        i += 1
    r = convergents(coeffs, depth)
    return RotationNumber(
        coefficients=r.coefficients,
        numerators=r.numerators,
        denominators=r.denominators,
        density_stat=r.density_stat,
        growth_bound=r.growth_bound,
        tail_period=per,
        preperiod_length=len(pre),
    )


def is_bounded_density(r: RotationNumber, threshold: float | Fraction) -> tuple[bool, Fraction]:
    """Check the running-average statistic against a threshold.

    Returns (within, statistic).  Only the stored prefix is inspected; for a
    bare prefix this is a proxy for the limsup condition, which no finite
    amount of data can decide.
    """
    stat = r.density_stat
    return (stat <= threshold, stat)
