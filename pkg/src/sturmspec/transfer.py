"""Transfer matrices and solution norms for the difference equation

    u(n+1) + u(n-1) + lam * v(n) u(n) = E u(n).

A word w of potential values over sites 1..N carries the one-step matrices
T(b) = [[E - lam*b, -1], [1, 0]]; the vector U(n) = (u(n), u(n-1)) obeys
U(n+1) = T(v(n)) U(n), so M(w) = T(w_N) ... T(w_1) and concatenation
composes as M(uv) = M(v) M(u).

Norms over a continuous length L:

    |u|_L^2 = sum_{n=0}^{floor L} u(n)^2 + (L - floor L) u(floor L + 1)^2
    |U|_L^2 = sum_{n=1}^{floor L} |U(n)|^2 + (L - floor L) |U(floor L + 1)|^2

Large-scale norm evaluation goes through prefix_marks, which folds the word
into, per requested prefix length F, the product matrix M_F and the Gram
matrices sum_{m=0}^{F-1} P_m^T S P_m (P_m the m-step prefix product,
S = I and diag(1, 0)).  Both norms above are then quadratic forms in U(1),
so one pass over the word serves every initial angle at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericRangeError
from .words import Word

__all__ = [
    "step_matrix",
    "word_matrix",
    "evolve",
    "SolutionTrajectory",
    "norm_u",
    "norm_U",
    "MarkState",
    "prefix_marks",
    "norms_at_mark",
]

OVERFLOW_LIMIT = 1e150
_CHECK_EVERY = 64


def step_matrix(b: int, lam: float, energy: float) -> np.ndarray:
    """One-step transfer matrix T(b); determinant 1."""
    return np.array([[energy - lam * b, -1.0], [1.0, 0.0]])


def word_matrix(w: Word, lam: float, energy: float) -> np.ndarray:
    """M(w) = T(w_N) ... T(w_1), with an overflow abort.

    Raises NumericRangeError naming the number of factors applied once any
    entry magnitude passes 1e150.
    """
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    t0 = energy
    t1 = energy - lam
    for i, ch in enumerate(w.symbols):
        t = t1 if ch == 49 else t0
        m00, m01, m10, m11 = t * m00 - m10, t * m01 - m11, m00, m01
        if i % _CHECK_EVERY == _CHECK_EVERY - 1:
            if not (abs(m00) + abs(m01) + abs(m10) + abs(m11) < OVERFLOW_LIMIT):
                raise NumericRangeError(i + 1)
    if not (abs(m00) + abs(m01) + abs(m10) + abs(m11) < OVERFLOW_LIMIT):
        raise NumericRangeError(len(w))
    return np.array([[m00, m01], [m10, m11]])


@dataclass(frozen=True)
class SolutionTrajectory:
    """Solution values u(0) .. u(N+1) over a potential word for sites 1..N."""

    u: np.ndarray
    word: Word
    lam: float
    energy: float
    phi: float

    def U(self, n: int) -> np.ndarray:
        """(u(n), u(n-1)); defined for 1 <= n <= N + 1."""
        return np.array([self.u[n], self.u[n - 1]])


def evolve(w: Word, lam: float, energy: float, phi: float) -> SolutionTrajectory:
    """Propagate the solution with u(0) = cos(phi), u(1) = sin(phi)."""
    n_sites = len(w)
    u = np.empty(n_sites + 2)
    u[0] = math.cos(phi)
    u[1] = math.sin(phi)
    for n in range(1, n_sites + 1):
        u[n + 1] = (energy - lam * (w.symbols[n - 1] - 48)) * u[n] - u[n - 1]
        if n % _CHECK_EVERY == 0 and not (abs(u[n + 1]) < OVERFLOW_LIMIT):
            raise NumericRangeError(n)
    return SolutionTrajectory(u=u, word=w, lam=lam, energy=energy, phi=phi)


def _split_length(traj_len: int, L: float) -> tuple[int, float]:
    if not 0 <= L <= traj_len:
        raise ValueError(f"length {L} outside [0, {traj_len}]")
    f = int(math.floor(L))
    if f == L and f == traj_len:
        # frac = 0; the (unused) continuation index would fall off the array
        return f, 0.0
    return f, L - f


def norm_u(traj: SolutionTrajectory, L: float) -> float:
    """Scalar solution norm |u|_L."""
    f, frac = _split_length(len(traj.word), L)
    total = float(np.dot(traj.u[: f + 1], traj.u[: f + 1]))
    if frac:
        total += frac * traj.u[f + 1] ** 2
    return math.sqrt(total)


def norm_U(traj: SolutionTrajectory, L: float) -> float:
    """Vector solution norm |U|_L; |U|_L^2 <= 2 |u|_L^2 <= 2 |U|_L^2."""
    f, frac = _split_length(len(traj.word), L)
    sq = traj.u * traj.u
    total = float(np.sum(sq[1: f + 1]) + np.sum(sq[0: f]))
    if frac:
        total += frac * (sq[f + 1] + sq[f])
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# vectorized prefix folding


@dataclass(frozen=True)
class MarkState:
    """Cocycle data after consuming `position` letters, per energy.

    matrix is M_F, gram_U and gram_u are sum_{m=0}^{F-1} P_m^T S P_m with
    S = I and S = diag(1, 0); shapes (E, 2, 2).
    """

    position: int
    matrix: np.ndarray
    gram_U: np.ndarray
    gram_u: np.ndarray


def _combine(
    m_a: np.ndarray, gU_a: np.ndarray, gu_a: np.ndarray,
    m_b: np.ndarray, gU_b: np.ndarray, gu_b: np.ndarray,
):
    """Cocycle data of segment a followed by segment b."""
    at = np.swapaxes(m_a, -1, -2)
    return (
        m_b @ m_a,
        gU_a + at @ gU_b @ m_a,
        gu_a + at @ gu_b @ m_a,
    )


def _reduce_segment(bits: np.ndarray, steps: np.ndarray):
    """Fold a run of letters by pairwise tree reduction.

    bits: (S,) uint8; steps: (2, E, 2, 2) one-step matrices for letters 0/1.
    Returns (M, gram_U, gram_u) each (E, 2, 2).
    """
    n_e = steps.shape[1]
    m = steps[bits.astype(np.intp)]  # (S, E, 2, 2)
    eye = np.broadcast_to(np.eye(2), (len(bits), n_e, 2, 2)).copy()
    e11 = np.zeros((len(bits), n_e, 2, 2))
    e11[..., 0, 0] = 1.0
    g_u, g_s = eye, e11
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            # pad with the neutral segment (identity matrix, zero grams)
            m = np.concatenate([m, np.broadcast_to(np.eye(2), (1, n_e, 2, 2))])
            g_u = np.concatenate([g_u, np.zeros((1, n_e, 2, 2))])
            g_s = np.concatenate([g_s, np.zeros((1, n_e, 2, 2))])
        m_a, m_b = m[0::2], m[1::2]
        at = np.swapaxes(m_a, -1, -2)
        g_u = g_u[0::2] + at @ g_u[1::2] @ m_a
        g_s = g_s[0::2] + at @ g_s[1::2] @ m_a
        m = m_b @ m_a
    return m[0], g_u[0], g_s[0]


def prefix_marks(
    bits: np.ndarray,
    lam: float,
    energies: np.ndarray,
    marks,
    chunk: int = 8192,
) -> list[MarkState]:
    """Cocycle states at the requested prefix lengths, one word pass.

    bits is the potential over sites 1..N as a 0/1 array; marks are prefix
    lengths in [0, N], returned in the given order.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    n_e = len(energies)
    marks = list(marks)
    if any(not 0 <= f <= len(bits) for f in marks):
        raise ValueError("mark outside the word")
    order = sorted(set(marks))

    steps = np.zeros((2, n_e, 2, 2))
    steps[0, :, 0, 0] = energies
    steps[1, :, 0, 0] = energies - lam
    steps[:, :, 0, 1] = -1.0
    steps[:, :, 1, 0] = 1.0

    m_acc = np.broadcast_to(np.eye(2), (n_e, 2, 2)).copy()
    gu_acc = np.zeros((n_e, 2, 2))
    gs_acc = np.zeros((n_e, 2, 2))
    got: dict[int, MarkState] = {}
    pos = 0
    # entries may pass through inf/nan inside a chunk; the bound check below
    # turns that into a NumericRangeError instead of a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for f in order:
            while pos < f:
                step = min(chunk, f - pos)
                seg = _reduce_segment(bits[pos: pos + step], steps)
                m_acc, gu_acc, gs_acc = _combine(m_acc, gu_acc, gs_acc, *seg)
                pos += step
                if not np.all(np.abs(m_acc) < OVERFLOW_LIMIT):
                    raise NumericRangeError(pos)
            got[f] = MarkState(f, m_acc.copy(), gu_acc.copy(), gs_acc.copy())
    return [got[f] for f in marks]


def norms_at_mark(ms: MarkState, frac: float, phis: np.ndarray):
    """(|u|_L^2, |U|_L^2) for L = ms.position + frac, per energy and angle.

    phis gives the initial angles, U(1) = (sin phi, cos phi); the returned
    arrays have shape (E, len(phis)).
    """
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    u1 = np.stack([np.sin(phis), np.cos(phis)])  # (2, P)
    head = ms.matrix @ u1  # (E, 2, P)
    q_u = np.einsum("jp,ejk,kp->ep", u1, ms.gram_u, u1)
    q_vec = np.einsum("jp,ejk,kp->ep", u1, ms.gram_U, u1)
    sq_u = q_u + np.cos(phis)[None, :] ** 2
    sq_vec = q_vec
    if frac:
        sq_u = sq_u + frac * head[:, 0, :] ** 2
        sq_vec = sq_vec + frac * np.sum(head**2, axis=1)
    return sq_u, sq_vec
