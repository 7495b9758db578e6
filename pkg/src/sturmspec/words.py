"""Sturmian words, potentials, and their two-block hierarchical partitions.

Symbols live in bytes of ASCII '0'/'1'.  The canonical words obey

    s_{-1} = 1,  s_0 = 0,  s_1 = s_0^{a_1 - 1} s_{-1},
    s_n = s_{n-1}^{a_n} s_{n-2}   (n >= 2),

so |s_n| = q_n.  The potential of a rotation number theta and phase beta is

    v(n) = 1  iff  (n * theta + beta) mod 1  lies in [1 - theta, 1),

evaluated exactly: rational theta uses integer arithmetic over a common
denominator, irrational theta uses fixed-point arithmetic whose precision is
raised until every site in the window is provably separated from the
interval endpoints (one retry, then a precision error naming the site).
Phases that sit on the orbit, beta = (1 - k theta) mod 1, are accepted
symbolically so their endpoint hits stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cf import RotationNumber
from .errors import InternalConsistencyError, PrecisionError, ResourceLimitError

__all__ = [
    "Word",
    "OrbitPhase",
    "Block",
    "NPartition",
    "PartitionReport",
    "canonical_word",
    "verify_concat_identity",
    "reverse",
    "is_conjugate",
    "potential_window",
    "n_partition",
    "validate_partition",
]

WORD_BUDGET = 10_000_000


@dataclass(frozen=True)
class Word:
    """An immutable finite 0/1 word."""

    symbols: bytes

    def __post_init__(self):
        if self.symbols.translate(None, b"01"):
            raise ValueError("word symbols must be ASCII '0'/'1'")

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return self.symbols.decode("ascii")

    def __getitem__(self, i):
        got = self.symbols[i]
        return Word(got) if isinstance(i, slice) else got - 48

    def bits(self) -> np.ndarray:
        """Word as a uint8 array of 0/1 values."""
        return (np.frombuffer(self.symbols, dtype=np.uint8) - ord("0")).astype(np.uint8)


@dataclass(frozen=True)
class OrbitPhase:
    """Phase beta = (1 - k*theta) mod 1, kept symbolic for exactness.

    k = 0 is the zero phase.
    """

    k: int


def _canonical_chain(coeffs: tuple[int, ...], n: int) -> list[bytes]:
    """[s_{-1}, s_0, ..., s_n] as bytes; n >= -1."""
    chain = [b"1", b"0"]
    for k in range(1, n + 1):
        a = coeffs[k - 1]
        if k == 1:
            chain.append(b"0" * (a - 1) + b"1")
        else:
            chain.append(chain[-1] * a + chain[-2])
    return chain[: n + 2]


def _require_depth(r: RotationNumber, depth: int, what: str) -> None:
    if r.depth < depth:
        raise ValueError(f"{what} needs {depth} coefficients, have {r.depth}")


def canonical_word(r: RotationNumber, n: int, max_len: int = WORD_BUDGET) -> Word:
    """The canonical word s_n; |s_n| = q_n for n >= 0."""
    if n < -1:
        raise ValueError(f"level {n} out of range (>= -1)")
    if n >= 1:
        _require_depth(r, n, f"s_{n}")
        if r.denominators[n] > max_len:
            raise ResourceLimitError(
                f"|s_{n}| = {r.denominators[n]} exceeds budget {max_len}"
            )
    return Word(_canonical_chain(r.coefficients, n)[n + 1])


def verify_concat_identity(r: RotationNumber, n: int, max_len: int = WORD_BUDGET) -> bool:
    """Check s_n s_{n+1} == s_{n+1} s_{n-1}^{a_n - 1} s_{n-2} s_{n-1} literally.

    Holds for every n >= 2; the check is an exact byte comparison.
    """
    if n < 2:
        raise ValueError("identity needs n >= 2")
    _require_depth(r, n + 1, f"identity at level {n}")
    if r.denominators[n + 1] + r.denominators[n] > 2 * max_len:
        raise ResourceLimitError(f"words at level {n + 1} exceed budget {max_len}")
    chain = _canonical_chain(r.coefficients, n + 1)
    s = lambda k: chain[k + 1]  # noqa: E731
    a_n = r.coefficients[n - 1]
    lhs = s(n) + s(n + 1)
    rhs = s(n + 1) + s(n - 1) * (a_n - 1) + s(n - 2) + s(n - 1)
    return lhs == rhs


def reverse(w: Word) -> Word:
    return Word(w.symbols[::-1])


def is_conjugate(w: Word, v: Word) -> tuple[bool, int | None]:
    """Whether w is a cyclic rotation of v.

    Returns (flag, i) with i the 1-based offset such that
    w = v_i .. v_m v_1 .. v_{i-1}, or (False, None).
    """
    if len(w) != len(v):
        return (False, None)
    if len(w) == 0:
        return (True, 1)
    pos = (v.symbols + v.symbols).find(w.symbols)
    if pos < 0:
        return (False, None)
    return (True, pos + 1)


# ---------------------------------------------------------------------------
# potential evaluation


class _Unresolved(Exception):
    def __init__(self, site: int):
        self.site = site


def _norm_beta(beta) -> Fraction | OrbitPhase:
    if isinstance(beta, OrbitPhase):
        return beta
    b = Fraction(beta)
    b -= math.floor(b)
    if b == 0:
        # the zero phase lies on the orbit; route it through the symbolic
        # path so the endpoint hit at site -1 stays exact
        return OrbitPhase(0)
    return b


def _bytes_rational(theta: Fraction, beta, lo: int, hi: int) -> bytes:
    p, q = theta.numerator, theta.denominator
    if isinstance(beta, OrbitPhase):
        beta = (1 - beta.k * theta) % 1
    bp, bq = beta.numerator, beta.denominator
    mod = q * bq
    step = (p * bq) % mod
    thr = (q - p) * bq  # (1 - theta) scaled by mod
    x = (lo * step + bp * q) % mod
    out = bytearray()
    for _ in range(lo, hi + 1):
        out.append(49 if x >= thr else 48)
        x += step
        if x >= mod:
            x -= mod
    return bytes(out)


def _theta_fixed(r: RotationNumber, prec: int) -> tuple[int, int, RotationNumber]:
    """floor(theta * 2^prec) plus a slack bound in units.

    The slack covers both the floor rounding and the spread of
    tail-consistent values when only a prefix is known.
    """
    unit = 1 << prec
    if r.exact_value is not None:
        v = r.exact_value
        return (v.numerator * unit) // v.denominator, 1, r
    rr = r
    if rr.tail_period is not None:
        while rr.denominators[-1] * (rr.denominators[-1] + rr.denominators[-2]) < unit:
            rr = rr.extended(rr.depth + 8)
    q_n, q_p = rr.denominators[-1], rr.denominators[-2]
    width = unit // (q_n * (q_n + q_p)) + 1  # tail-consistency interval, in units
    fix = (rr.numerators[-1] * unit) // q_n
    return fix, width + 2, rr


def _bits_fixed_point(
    r: RotationNumber,
    beta: Fraction,
    lo: int,
    hi: int,
    special: dict[int, int],
    prec: int,
) -> bytes:
    unit = 1 << prec
    fix, slack, _ = _theta_fixed(r, prec)
    thr = unit - fix
    bfix = (beta.numerator * unit) // beta.denominator
    guard = 1 << (prec // 2)
    x = (lo * fix + bfix) % unit
    out = bytearray()
    for n in range(lo, hi + 1):
        sp = special.get(n)
        if sp is not None:
            out.append(48 + sp)
        else:
            margin = (abs(n) + 1) * slack + 2
            if margin < guard:
                margin = guard
            d0 = x if x <= unit - x else unit - x
            dt = x - thr if x >= thr else thr - x
            if unit - dt < dt:
                dt = unit - dt
            if d0 <= margin or dt <= margin:
                raise _Unresolved(n)
            out.append(49 if x >= thr else 48)
        x += fix
        if x >= unit:
            x -= unit
    return bytes(out)


def _bits_irrational(r: RotationNumber, beta, lo: int, hi: int) -> bytes:
    if isinstance(beta, OrbitPhase):
        # v(n) = chi((n - k) theta mod 1): shift the site range and decide
        # the two on-orbit sites exactly
        k = beta.k
        lo2, hi2 = lo - k, hi - k
        special = {-1: 1, 0: 0}
        b = Fraction(0)
    else:
        lo2, hi2, special, b = lo, hi, {}, beta
    span = max(abs(lo2), abs(hi2)) + 2
    prec = max(64, 2 * r.denominators[-1].bit_length() + 32, 2 * span.bit_length() + 64)
    try:
        return _bits_fixed_point(r, b, lo2, hi2, special, prec)
    except _Unresolved:
        pass
    try:
        return _bits_fixed_point(r, b, lo2, hi2, special, 2 * prec)
    except _Unresolved as u:
        site = u.site + (beta.k if isinstance(beta, OrbitPhase) else 0)
        raise PrecisionError(
            site,
            f"orbit point at site {site} not separable from the interval "
            f"endpoints at {2 * prec} bits; a deeper coefficient prefix is needed",
        ) from None


def _potential_bytes(r, beta, lo, hi, max_len=WORD_BUDGET) -> bytes:
    if hi < lo:
        raise ValueError(f"empty window [{lo}, {hi}]")
    if hi - lo + 1 > max_len:
        raise ResourceLimitError(f"window of {hi - lo + 1} sites exceeds budget {max_len}")
    beta = _norm_beta(beta)
    if r.exact_value is not None:
        return _bytes_rational(r.exact_value, beta, lo, hi)
    return _bits_irrational(r, beta, lo, hi)


def potential_window(r: RotationNumber, beta, lo: int, hi: int, max_len: int = WORD_BUDGET) -> Word:
    """The potential word v(lo), ..., v(hi), evaluated exactly."""
    return Word(_potential_bytes(r, beta, lo, hi, max_len))


# ---------------------------------------------------------------------------
# hierarchical partitions


@dataclass(frozen=True)
class Block:
    """One block of a partition; sites start..stop-1, label is a word level.

    Fragment blocks are partial pieces cut off by a window edge; their label
    is kept when known and None otherwise.
    """

    start: int
    stop: int
    label: int | None
    fragment: bool

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class NPartition:
    """Decomposition of a potential window into blocks s_n / s_{n-1}.

    blocks are contiguous and ordered; origin_pos indexes the block holding
    site 1 and index j of a block is its position relative to that one.
    """

    level: int
    window: tuple[int, int]
    blocks: tuple[Block, ...]
    origin_pos: int
    potential: Word

    def j_index(self, pos: int) -> int:
        return pos - self.origin_pos

    def block_at_j(self, j: int) -> Block:
        return self.blocks[self.origin_pos + j]

    @property
    def origin_block(self) -> Block:
        return self.blocks[self.origin_pos]


def _level0_items(bits: bytes, lo: int) -> list[tuple[int, int, int | None, bool]]:
    return [
        (lo + i, lo + i + 1, 0 if ch == 48 else -1, False)
        for i, ch in enumerate(bits)
    ]


def _regroup(items, e: int, k: int):
    """Group level-k blocks into level-(k+1) blocks.

    A closer (label k-1) ends a group of e preceding units (label k); a run
    of e+1 units sheds its first unit as a free-standing level-(k+1) block
    labelled k.  Edge runs that cannot be resolved become fragments.
    """
    unit, closer = k, k - 1
    lead = trail = None
    core = items
    if core and core[0][3]:
        lead = core[0]
        core = core[1:]
    if core and core[-1][3]:
        trail = core[-1]
        core = core[:-1]

    out: list[tuple[int, int, int | None, bool]] = []
    runlen = 0
    seen_closer = False

    def emit_group(seg):
        out.append((seg[0][0], seg[-1][1], k + 1, False))

    def emit_standalone(it):
        out.append((it[0], it[1], k, False))

    def emit_frag(a: int, b: int):
        if out and out[-1][3]:
            prev = out.pop()
            a = prev[0]
        out.append((a, b, None, True))

    for idx in range(len(core)):
        s0, s1, lab, _ = core[idx]
        if lab == unit:
            runlen += 1
            continue
        if lab != closer:
            raise InternalConsistencyError(f"unexpected label {lab} at level {k}")
        seg = core[idx - runlen: idx + 1]
        if not seen_closer:
            if lead is not None:
                if runlen == e + 1:
                    emit_frag(lead[0], lead[1])
                    emit_standalone(seg[0])
                    emit_group(seg[1:])
                else:
                    # cannot tell whether the fragment hides more units
                    emit_frag(lead[0], seg[-1][1])
            elif runlen == e + 1:
                emit_standalone(seg[0])
                emit_group(seg[1:])
            elif runlen == e:
                emit_group(seg)
            elif runlen < e:
                emit_frag(seg[0][0], seg[-1][1])
            else:
                raise InternalConsistencyError(
                    f"run of {runlen} > {e + 1} unit blocks at level {k}"
                )
            seen_closer = True
        else:
            if runlen == e:
                emit_group(seg)
            elif runlen == e + 1:
                emit_standalone(seg[0])
                emit_group(seg[1:])
            else:
                raise InternalConsistencyError(
                    f"interior run of {runlen} unit blocks at level {k}; "
                    f"expected {e} or {e + 1}"
                )
        runlen = 0

    tail_units = core[len(core) - runlen:] if runlen else []
    if not seen_closer:
        pieces = ([lead] if lead else []) + tail_units + ([trail] if trail else [])
        if pieces:
            emit_frag(pieces[0][0], pieces[-1][1])
        return out
    if runlen > e + 1:
        raise InternalConsistencyError(f"trailing run of {runlen} unit blocks at level {k}")
    if runlen == e + 1:
        emit_standalone(tail_units[0])
        tail_units = tail_units[1:]
    if tail_units or trail is not None:
        a = tail_units[0][0] if tail_units else trail[0]
        b = trail[1] if trail is not None else tail_units[-1][1]
        emit_frag(a, b)
    return out


def n_partition(
    r: RotationNumber,
    beta,
    n: int,
    window: tuple[int, int],
    max_len: int = WORD_BUDGET,
) -> NPartition:
    """The level-n partition of the potential over a window containing 1.

    The construction is bottom-up: level 0 is the symbol sequence itself and
    each pass regroups level k into level k+1 using the recursion for
    s_{k+1}.  The window is padded internally so edge effects never reach
    the requested range; blocks cut by the requested window come back as
    fragments with their labels intact.
    """
    if n < 1:
        raise ValueError("partition level must be >= 1")
    _require_depth(r, n + 1, f"level-{n} partition")
    lo, hi = window
    if not lo <= 1 <= hi:
        raise ValueError(f"window [{lo}, {hi}] must contain site 1")
    q = r.denominators
    if hi - lo + 1 < q[n]:
        raise ResourceLimitError(
            f"window of {hi - lo + 1} sites is shorter than one level-{n} "
            f"block (q_{n} = {q[n]})"
        )
    pad = 4 * (q[n + 1] + q[n])
    plo, phi_ = lo - pad, hi + pad
    padded = _potential_bytes(r, beta, plo, phi_, max_len)

    items = _level0_items(padded, plo)
    for k in range(0, n):
        e = r.coefficients[0] - 1 if k == 0 else r.coefficients[k]
        items = _regroup(items, e, k)

    # crop the padded partition back to the requested window
    blocks: list[Block] = []
    for s0, s1, lab, fr in items:
        if s1 <= lo or s0 > hi:
            continue
        if lab is None:
            raise InternalConsistencyError(
                "edge erosion reached the requested window; padding too small"
            )
        cs0, cs1 = max(s0, lo), min(s1, hi + 1)
        blocks.append(Block(cs0, cs1, lab, fr or cs1 - cs0 != s1 - s0))
    if not blocks:
        raise InternalConsistencyError("empty partition")

    # complete blocks must spell their canonical words exactly
    chain = _canonical_chain(r.coefficients, n)
    for b in blocks:
        if b.fragment:
            continue
        if padded[b.start - plo: b.stop - plo] != chain[b.label + 1]:
            raise InternalConsistencyError(
                f"block at [{b.start}, {b.stop}) does not spell s_{b.label}"
            )

    origin_pos = next(i for i, b in enumerate(blocks) if b.start <= 1 < b.stop)
    return NPartition(
        level=n,
        window=(lo, hi),
        blocks=tuple(blocks),
        origin_pos=origin_pos,
        potential=Word(padded[lo - plo: hi + 1 - plo]),
    )


@dataclass(frozen=True)
class PartitionReport:
    """Outcome of validate_partition: hard failures and edge-inconclusive notes."""

    passed: bool
    failures: tuple[str, ...]
    inconclusive: tuple[str, ...]


def validate_partition(p: NPartition, r: RotationNumber) -> PartitionReport:
    """Re-check a partition against the defining properties.

    Checks, on complete blocks only: every block spells its canonical word;
    every s_{n-1} block is flanked by s_n blocks; every maximal run of s_n
    blocks bounded by s_{n-1} blocks has length a_{n+1} or a_{n+1} + 1.
    Checks that cannot be decided because a window edge intervenes are
    reported as inconclusive, not as failures.
    """
    n = p.level
    _require_depth(r, n + 1, "partition validation")
    a_next = r.coefficients[n]
    chain = _canonical_chain(r.coefficients, n)
    failures: list[str] = []
    notes: list[str] = []

    lo = p.window[0]
    sym = p.potential.symbols
    for pos, b in enumerate(p.blocks):
        j = p.j_index(pos)
        if b.fragment:
            continue
        if b.label not in (n, n - 1):
            failures.append(f"block j={j}: label s_{b.label} not in {{s_{n}, s_{n - 1}}}")
            continue
        if sym[b.start - lo: b.stop - lo] != chain[b.label + 1]:
            failures.append(f"block j={j}: does not spell s_{b.label}")

    # coverage: blocks must tile the window contiguously
    expect = lo
    for b in p.blocks:
        if b.start != expect:
            failures.append(f"gap at site {expect}")
            break
        expect = b.stop
    if expect != p.window[1] + 1 and not any(f.startswith("gap") for f in failures):
        failures.append(f"window not covered past site {expect - 1}")

    blocks = p.blocks
    for pos, b in enumerate(blocks):
        if b.fragment or b.label != n - 1:
            continue
        j = p.j_index(pos)
        for npos in (pos - 1, pos + 1):
            if 0 <= npos < len(blocks):
                nb = blocks[npos]
                if nb.fragment:
                    notes.append(f"isolation of j={j}: neighbour is an edge fragment")
                elif nb.label != n:
                    failures.append(f"s_{n - 1} blocks j={j}, j={p.j_index(npos)} adjacent")
            else:
                notes.append(f"isolation of j={j}: window edge")

    run = 0
    run_bounded_left = False
    for pos, b in enumerate(blocks):
        if not b.fragment and b.label == n:
            run += 1
            continue
        closed = not b.fragment and b.label == n - 1
        if run:
            if run_bounded_left and closed:
                if run not in (a_next, a_next + 1):
                    failures.append(
                        f"run of {run} s_{n} blocks ending at j="
                        f"{p.j_index(pos) - 1}; expected {a_next} or {a_next + 1}"
                    )
            else:
                notes.append("run-length check inconclusive at a window edge")
        run = 0
        run_bounded_left = closed
    if run:
        notes.append("run-length check inconclusive at a window edge")

    return PartitionReport(
        passed=not failures,
        failures=tuple(failures),
        inconclusive=tuple(notes),
    )
