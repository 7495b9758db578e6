"""Trace orbits of the canonical-word transfer matrices and band spectra.

With M_n = M(s_n) the traces x_n = tr M_{n-1}, y_n = tr M_n and
z_n = tr(M_{n-1} M_n) evolve under the word recursion while preserving the
Fricke-Vogt quantity x^2 + y^2 + z^2 - x y z - lam^2 - 4.  The level-n band
approximation of the spectrum is sigma_n = {E : |y_n(E)| <= 2}, a union of
closed intervals located here by adaptive grid refinement plus bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cf import RotationNumber
from .errors import RefinementError
from .transfer import OVERFLOW_LIMIT

__all__ = [
    "TraceOrbit",
    "trace_orbit",
    "fricke_vogt_residual",
    "approximate_spectrum",
    "band_measure",
    "CLambdaEstimate",
    "estimate_C_lambda",
]


@dataclass(frozen=True)
class TraceOrbit:
    """Trace triples (x_n, y_n, z_n) for n = 0..depth.

    escaped_at is the first level whose matrices overflowed (entries beyond
    1e150); the arrays stop just before it.
    """

    lam: float
    energy: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    escaped_at: int | None

    @property
    def depth(self) -> int:
        return len(self.x) - 1


def _pair_step(m_prev: np.ndarray, m_cur: np.ndarray, a: int):
    """(M_{n-1}, M_n) -> (M_n, M_{n-2} M_{n-1}^a) batched over leading axes."""
    p = m_cur
    out = None
    e = a
    while e:
        if e & 1:
            out = p if out is None else p @ out
        e >>= 1
        if e:
            p = p @ p
    return m_cur, m_prev @ out


def _cheb_coeffs(t: float, a: int) -> tuple[float, float, float]:
    """(p_{a+1}, p_a, p_{a-1}) for p_0 = 0, p_1 = 1, p_{k+1} = t p_k - p_{k-1}.

    tr(M^k N) = p_k(tr M) tr(MN) - p_{k-1}(tr M) tr(N) for M, N in SL(2).
    """
    m = np.linalg.matrix_power(np.array([[t, -1.0], [1.0, 0.0]]), a)
    return m[0, 0], m[1, 0], -m[1, 1]


def trace_orbit(r: RotationNumber, lam: float, energy: float, depth: int) -> TraceOrbit:
    """Trace triples along the word recursion, stopping early on overflow.

    The triples evolve by the polynomial recursion induced on traces by
    M_{n+1} = M_{n-1} M_n^{a_{n+1}}, not by multiplying the matrices out:
    entry roundoff scales with the matrix norms, which dwarf the traces on
    long words, while the trace recursion keeps errors at the scale of the
    traces themselves.
    """
    if not 0 <= depth <= r.depth:
        raise ValueError(f"depth {depth} outside [0, {r.depth}]")
    x = energy - lam  # tr M(s_{-1})
    y = energy  # tr M(s_0)
    z = energy * (energy - lam) - 2.0  # tr(M(s_{-1}) M(s_0))
    xs, ys, zs = [], [], []
    escaped = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(depth + 1):
            if not (abs(x) < OVERFLOW_LIMIT and abs(y) < OVERFLOW_LIMIT and abs(z) < OVERFLOW_LIMIT):
                escaped = n
                break
            xs.append(x)
            ys.append(y)
            zs.append(z)
            if n == depth:
                break
            a = r.coefficients[n]
            if n == 0:
                a -= 1
            if a == 0:  # s_1 = s_{-1} when a_1 = 1
                x, y = y, x
            else:
                p_up, p_mid, p_dn = _cheb_coeffs(y, a)
                x, y, z = y, p_mid * z - p_dn * x, p_up * z - p_mid * x
    return TraceOrbit(
        lam=lam,
        energy=energy,
        x=np.array(xs),
        y=np.array(ys),
        z=np.array(zs),
        escaped_at=escaped,
    )


def fricke_vogt_residual(orbit: TraceOrbit) -> np.ndarray:
    """x^2 + y^2 + z^2 - x y z - lam^2 - 4 at each stored level.

    Levels whose cubic term overflows come back as inf/nan rather than
    warning; callers weigh the residual against the trace magnitude anyway.
    """
    x, y, z = orbit.x, orbit.y, orbit.z
    with np.errstate(over="ignore", invalid="ignore"):
        return x * x + y * y + z * z - x * y * z - orbit.lam**2 - 4.0


def _level_trace(r: RotationNumber, lam: float, n: int, energies: np.ndarray) -> np.ndarray:
    """y_n = tr M_n on a vector of energies; overflow becomes nan/inf."""
    g = len(energies)
    m_prev = np.zeros((g, 2, 2))
    m_prev[:, 0, 0] = energies - lam
    m_prev[:, 0, 1] = -1.0
    m_prev[:, 1, 0] = 1.0
    m_cur = m_prev.copy()
    m_cur[:, 0, 0] = energies
    with np.errstate(all="ignore"):
        for k in range(n):
            a = r.coefficients[k] - 1 if k == 0 else r.coefficients[k]
            if a == 0:
                m_prev, m_cur = m_cur, m_prev
            else:
                m_prev, m_cur = _pair_step(m_prev, m_cur, a)
        return m_cur[:, 0, 0] + m_cur[:, 1, 1]


_INSIDE_TOL = 1.0 + 1e-13  # tangent band edges jitter at float resolution


def _inside(r, lam, n, energies) -> np.ndarray:
    y = _level_trace(r, lam, n, np.asarray(energies, dtype=float))
    return np.isfinite(y) & (np.abs(y) <= 2.0 * _INSIDE_TOL)


def approximate_spectrum(
    r: RotationNumber,
    lam: float,
    n: int,
    grid_factor: int = 16,
    edge_tol: float = 1e-10,
    max_points: int = 1 << 22,
) -> tuple[tuple[float, float], ...]:
    """The bands of sigma_n = {E : |tr M_n(E)| <= 2} as closed intervals.

    The sampling grid starts at grid_factor * q_n points and doubles until
    the band count is unchanged twice in a row; a count that drops, or a
    grid beyond max_points, raises RefinementError.  Edges are then
    bisected to edge_tol.
    """
    if n < 1 or n > r.depth:
        raise ValueError(f"level {n} outside [1, {r.depth}]")
    lo, hi = -2.0 - abs(lam) - 0.5, 2.0 + abs(lam) + 0.5
    pts = max(grid_factor * r.denominators[n], 64)
    counts: list[int] = []
    while True:
        if pts > max_points:
            raise RefinementError(
                f"band count at level {n} not stable within {max_points} grid points"
            )
        grid = np.linspace(lo, hi, pts)
        mask = _inside(r, lam, n, grid)
        padded = np.concatenate([[False], mask, [False]])
        starts = np.flatnonzero(padded[1:] & ~padded[:-1])
        ends = np.flatnonzero(~padded[1:] & padded[:-1])
        count = len(starts)
        if counts and count < counts[-1]:
            raise RefinementError(
                f"band count dropped from {counts[-1]} to {count} at level {n}"
            )
        counts.append(count)
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3] and count > 0:
            break
        pts *= 2

    # vectorized bisection of all edges at once; grid[i-1] is outside,
    # grid[i] inside at a left edge (and mirrored on the right)
    left_out = grid[np.maximum(starts - 1, 0)]
    left_in = grid[starts]
    right_in = grid[ends - 1]
    right_out = grid[np.minimum(ends, pts - 1)]
    while np.max(left_in - left_out) > edge_tol or np.max(right_out - right_in) > edge_tol:
        mid_l = 0.5 * (left_out + left_in)
        in_l = _inside(r, lam, n, mid_l)
        left_in = np.where(in_l, mid_l, left_in)
        left_out = np.where(in_l, left_out, mid_l)
        mid_r = 0.5 * (right_in + right_out)
        in_r = _inside(r, lam, n, mid_r)
        right_in = np.where(in_r, mid_r, right_in)
        right_out = np.where(in_r, right_out, mid_r)
    bands = tuple(
        (float(0.5 * (lo_o + lo_i)), float(0.5 * (hi_i + hi_o)))
        for lo_o, lo_i, hi_i, hi_o in zip(left_out, left_in, right_in, right_out)
    )
    for a, b in bands:
        if not _inside(r, lam, n, np.array([0.5 * (a + b)]))[0]:
            raise RefinementError(f"band [{a}, {b}] fails its midpoint test")
    return bands


def band_measure(bands) -> float:
    return float(sum(b - a for a, b in bands))


@dataclass(frozen=True)
class CLambdaEstimate:
    """Empirical bound on |traces| over approximate bands, with its arg-max."""

    value: float
    spectrum_level: int
    trace_level: int
    energy: float
    which: str


def estimate_C_lambda(
    r: RotationNumber,
    lam: float,
    depth: int,
    samples_per_band: int = 24,
    grid_factor: int = 16,
) -> CLambdaEstimate:
    """max |x_k|, |y_k|, |z_k| for k <= n over sampled level-n bands, n <= depth."""
    best = CLambdaEstimate(0.0, 0, 0, 0.0, "")
    for n in range(1, depth + 1):
        bands = approximate_spectrum(r, lam, n, grid_factor=grid_factor)
        samples = np.concatenate(
            [np.linspace(a, b, samples_per_band) for a, b in bands]
        )
        g = len(samples)
        m_prev = np.zeros((g, 2, 2))
        m_prev[:, 0, 0] = samples - lam
        m_prev[:, 0, 1] = -1.0
        m_prev[:, 1, 0] = 1.0
        m_cur = m_prev.copy()
        m_cur[:, 0, 0] = samples
        for k in range(n + 1):
            tr_prev = m_prev[:, 0, 0] + m_prev[:, 1, 1]
            tr_cur = m_cur[:, 0, 0] + m_cur[:, 1, 1]
            prod = m_prev @ m_cur
            tr_z = prod[:, 0, 0] + prod[:, 1, 1]
            for name, vals in (("x", tr_prev), ("y", tr_cur), ("z", tr_z)):
                i = int(np.argmax(np.abs(vals)))
                v = float(abs(vals[i]))
                if v > best.value:
                    best = CLambdaEstimate(v, n, k, float(samples[i]), name)
            if k == n:
                break
            a = r.coefficients[k] - 1 if k == 0 else r.coefficients[k]
            if a == 0:
                m_prev, m_cur = m_cur, m_prev
            else:
                m_prev, m_cur = _pair_step(m_prev, m_cur, a)
    return best
