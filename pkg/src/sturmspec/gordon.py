"""Square repetitions in Sturmian potentials and the mass reproduction bound.

The level-n and level-(n+1) partitions of the potential near the origin
decide, by the labels of the first few blocks right of site 0, a window
1..l of start sites j at which the potential repeats a word of length k
twice: v(j .. j+2k-1) = ww.  Five label patterns occur and each pins
(l, k) to denominators of the rotation number, with w conjugate to a fixed
class word (a canonical word or a product of two).  find_square locates the
pattern and then checks every claimed square literally.

For a solution U of the difference equation the doubled period gives

    U(j + 2k) - tr[M(v(j .. j+k-1))] U(j + k) + U(j) = 0,

so with |trace| <= C at most one of U(j+k), U(j+2k) can be small:
max(|U(j+k)|, |U(j+2k)|) >= |U(j)| / (2C) once C >= 1.  Summing over
j <= l yields |U|_{l+2k} >= sqrt(1 + (2C)^{-2}) |U|_l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cf import RotationNumber
from .errors import InternalConsistencyError
from .transfer import evolve, word_matrix
from .words import Word, _canonical_chain, _potential_bytes, n_partition

__all__ = [
    "SquareWitness",
    "find_square",
    "d_lambda",
    "half_word_trace",
    "reproduction_residual",
    "GrowthReport",
    "local_growth_report",
]


@dataclass(frozen=True)
class SquareWitness:
    """A verified family of squares: v(j..j+2k-1) = ww for every j in 1..ell.

    Each half-word v(j..j+k-1) is conjugate to word_class, so its transfer
    matrix trace does not depend on j.
    """

    level: int
    case: str
    ell: int
    k: int
    word_class: Word

    @property
    def reach(self) -> int:
        return self.ell + 2 * self.k


def d_lambda(c: float) -> float:
    """Norm growth factor sqrt(1 + 1/(2c)^2) for a trace bound c >= 1."""
    if c < 1:
        raise ValueError("trace bound must be >= 1")
    return math.sqrt(1.0 + 1.0 / (2.0 * c) ** 2)


def _complete_labels(part, count: int) -> list[int]:
    """Labels of blocks j = 0..count-1; all must be complete."""
    labels = []
    for j in range(count):
        pos = part.origin_pos + j
        if pos >= len(part.blocks):
            raise InternalConsistencyError(f"partition window too short at j={j}")
        b = part.blocks[pos]
        if b.fragment:
            raise InternalConsistencyError(f"block j={j} is a window fragment")
        labels.append(b.label)
    return labels


def find_square(r: RotationNumber, beta, n: int) -> SquareWitness:
    """Locate and literally verify the level-n square family.

    Needs n >= 4 and n + 2 stored coefficients.  Every j in 1..ell is
    checked: the two halves are compared byte for byte and the half-word is
    matched inside the doubled class word.
    """
    if n < 4:
        raise ValueError("square location needs level >= 4")
    if r.depth < n + 2:
        raise ValueError(f"need {n + 2} coefficients, have {r.depth}")
    q = r.denominators
    chain = _canonical_chain(r.coefficients, n + 1)
    s = lambda m: chain[m + 1]  # noqa: E731

    part_n = n_partition(r, beta, n, (-q[n] - 2, 3 * q[n] + 2))
    z0, z1 = _complete_labels(part_n, 2)

    if z0 == n - 1:
        case, ell, k = "1", q[n - 4], q[n - 1]
        cls = s(n - 1)
    elif z0 == n and z1 == n:
        case, ell, k = "2", q[n - 3], q[n]
        cls = s(n)
    elif z0 == n and z1 == n - 1:
        part_up = n_partition(r, beta, n + 1, (-q[n + 1] - 2, 5 * q[n + 1] + 2))
        zp = _complete_labels(part_up, 4)
        if zp[0] != n + 1:
            raise InternalConsistencyError(
                f"origin block at level {n + 1} is s_{zp[0]}, expected s_{n + 1}"
            )
        if zp[1] == n + 1:
            case, ell, k = "3.1", q[n - 2], q[n + 1]
            cls = s(n + 1)
        elif zp[1] == n:
            if zp[2] != n + 1:
                raise InternalConsistencyError(
                    f"block j=2 at level {n + 1} is s_{zp[2]}, expected s_{n + 1}"
                )
            if zp[3] == n:
                if r.coefficients[n + 1] != 1:
                    raise InternalConsistencyError(
                        "double s_n blocks after the origin need a_{n+2} = 1"
                    )
                case, ell, k = "3.2.1", q[n - 1], q[n] + q[n + 1]
            elif zp[3] == n + 1:
                case, ell, k = "3.2.2", q[n - 3], q[n] + q[n + 1]
            else:
                raise InternalConsistencyError(f"unexpected label s_{zp[3]} at j=3")
            cls = s(n) + s(n + 1)
        else:
            raise InternalConsistencyError(f"unexpected label s_{zp[1]} at j=1")
    else:
        raise InternalConsistencyError(f"unexpected origin labels ({z0}, {z1})")

    if ell + 2 * k > 2 * (q[n + 1] + q[n]) + q[n - 1]:
        raise InternalConsistencyError("square family reach exceeds its bound")
    if len(cls) != k:
        raise InternalConsistencyError("class word length differs from k")

    v = _potential_bytes(r, beta, 1, ell + 2 * k)
    doubled = cls + cls
    for j in range(1, ell + 1):
        off = j - 1
        half = v[off: off + k]
        if v[off + k: off + 2 * k] != half:
            raise InternalConsistencyError(f"no square at start j={j}")
        if doubled.find(half) < 0:
            raise InternalConsistencyError(
                f"half word at j={j} not conjugate to the class word"
            )
    return SquareWitness(level=n, case=case, ell=ell, k=k, word_class=Word(cls))


def half_word_trace(witness: SquareWitness, lam: float, energy: float) -> float:
    """tr M(v(j..j+k-1)); the same for every j by conjugacy."""
    m = word_matrix(witness.word_class, lam, energy)
    return float(m[0, 0] + m[1, 1])


def reproduction_residual(
    r: RotationNumber,
    beta,
    witness: SquareWitness,
    lam: float,
    energy: float,
    phi: float,
    j: int,
) -> float:
    """Relative size of U(j+2k) - trace * U(j+k) + U(j); zero in exact arithmetic."""
    if not 1 <= j <= witness.ell:
        raise ValueError(f"start {j} outside 1..{witness.ell}")
    k = witness.k
    w = Word(_potential_bytes(r, beta, 1, j + 2 * k))
    traj = evolve(w, lam, energy, phi)
    t = half_word_trace(witness, lam, energy)
    res = traj.U(j + 2 * k) - t * traj.U(j + k) + traj.U(j)
    scale = max(
        1.0,
        float(np.linalg.norm(traj.U(j))),
        float(np.linalg.norm(traj.U(j + k))),
        float(np.linalg.norm(traj.U(j + 2 * k))),
    )
    return float(np.linalg.norm(res)) / scale


@dataclass(frozen=True)
class GrowthReport:
    """Outcome of the local growth test over all square starts."""

    ok: bool
    min_ratio: float
    required: float
    worst_j: int
    trace_abs: float
    trace_bounded: bool


def local_growth_report(
    r: RotationNumber,
    beta,
    witness: SquareWitness,
    lam: float,
    energy: float,
    phi: float,
    c_bound: float,
) -> GrowthReport:
    """Check max(|U(j+k)|, |U(j+2k)|) >= |U(j)| / (2 c_bound) for all j <= ell."""
    if c_bound < 1:
        raise ValueError("trace bound must be >= 1")
    k, ell = witness.k, witness.ell
    w = Word(_potential_bytes(r, beta, 1, ell + 2 * k))
    traj = evolve(w, lam, energy, phi)
    sq = traj.u * traj.u
    norm2 = sq[1:] + sq[:-1]  # |U(m)|^2 at index m-1
    js = np.arange(1, ell + 1)
    base = norm2[js - 1]
    grown = np.maximum(norm2[js + k - 1], norm2[js + 2 * k - 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.sqrt(grown / base)
    worst = int(np.argmin(ratios))
    t = abs(half_word_trace(witness, lam, energy))
    required = 1.0 / (2.0 * c_bound)
    return GrowthReport(
        ok=bool(ratios[worst] >= required),
        min_ratio=float(ratios[worst]),
        required=required,
        worst_j=int(js[worst]),
        trace_abs=t,
        trace_bounded=bool(t <= c_bound),
    )
