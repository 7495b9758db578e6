"""Weyl m-functions, power-law solution exponents, and the Holder bound.

The half-line m-function m+(z) = <delta_1, (H+ - z)^{-1} delta_1> obeys the
downward recursion m_n = 1 / (V(n) - z - m_{n+1}) (a Schur complement in
the tridiagonal resolvent), so it is computed by seeding the free-operator
value far out and iterating to the boundary; the seed's influence decays
geometrically in Im z.  The left half line (sites 0, -1, ...) mirrors this.
Both maps preserve Im m > 0 exactly in floating point: the denominator has
strictly negative imaginary part whenever Im z > 0 and Im m > 0.

Whole-line data: with m+ and m- as above,

    M(z) = 1/(1 - m+ m-) [[m-, -m+ m-], [-m+ m-, m+]],
    m(z) = tr M(z) = (m+ + m-) / (1 - m+ m-),

and the spectral measure obeys mu([E - eps, E + eps]) <= 2 eps Im m(E + i eps).

Power-law exponents: gamma2 and gamma1 are least-squares slopes of
log |u|_L against log L for the fastest- and slowest-growing initial
angles, giving the scaling exponent alpha = 2 gamma1 / (gamma1 + gamma2).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .cf import RotationNumber
from .errors import DegeneracyError, ExponentFitError, InternalConsistencyError
from .transfer import norms_at_mark, prefix_marks
from .words import _potential_bytes

__all__ = [
    "free_m",
    "MValue",
    "m_half_line",
    "m_whole_line",
    "weyl_point",
    "mobius_sup",
    "ExponentFit",
    "fit_exponents",
    "HolderReport",
    "holder_check",
]

SITE_CAP = 2_500_000


def free_m(z: complex) -> complex:
    """m+ of the zero-potential half line: root of m^2 + z m + 1 = 0, Im > 0."""
    w = cmath.sqrt(z * z - 4.0)
    m = (-z + w) / 2.0
    if m.imag <= 0:
        m = (-z - w) / 2.0
    return m


def _decay_rate(z: complex) -> float:
    """-2 log |zeta(z)| for the contracting root zeta of z^2 - z zeta + 1."""
    w = cmath.sqrt(z * z - 4.0)
    zeta = (z - w) / 2.0
    if abs(zeta) > 1.0:
        zeta = (z + w) / 2.0
    return -2.0 * math.log(abs(zeta))


@dataclass(frozen=True)
class MValue:
    """A truncated m-function value with its truncation bookkeeping.

    capped means the site budget cut the requested depth; delta is the
    observed change between the primary and the doubled-depth pass.
    """

    value: complex | np.ndarray
    sites: int
    bound: float
    capped: bool
    delta: float


def _riccati_scalar(diag: np.ndarray, z: complex, seed: complex) -> complex:
    m = seed
    for vn in diag:
        m = 1.0 / (vn - z - m)
    return m


def _riccati_vector(diag: np.ndarray, z: np.ndarray, seed: np.ndarray) -> np.ndarray:
    m = seed.copy()
    tmp = np.empty_like(m)
    for vn in diag:
        np.subtract(vn - z, m, out=tmp)
        np.divide(1.0, tmp, out=m)
    return m


def _half_line_once(r, beta, lam, z_arr, side: str, n_sites: int):
    """One truncated pass; diag is consumed from the far end inward."""
    if side == "right":
        # consume v(N) .. v(1): deep end first, boundary site last
        bits = _potential_bytes(r, beta, 1, n_sites)[::-1]
    elif side == "left":
        # v(1-N) .. v(0) is already deep-end first
        bits = _potential_bytes(r, beta, 1 - n_sites, 0)
    else:
        raise ValueError("side must be 'right' or 'left'")
    diag = lam * (np.frombuffer(bits, dtype=np.uint8) - ord("0")).astype(float)
    if z_arr.ndim == 0:
        return _riccati_scalar(diag, complex(z_arr), free_m(complex(z_arr)))
    seed = np.array([free_m(complex(zz)) for zz in z_arr])
    return _riccati_vector(diag, z_arr, seed)


def m_half_line(
    r: RotationNumber,
    beta,
    lam: float,
    z,
    side: str = "right",
    tol: float = 1e-8,
    site_cap: int = SITE_CAP,
) -> MValue:
    """Half-line m-function at one or more spectral parameters Im z > 0.

    The truncation depth is chosen so the free-decay estimate
    2 exp(-c N) / Im z falls below tol, then the value is recomputed at
    twice the depth; a gap beyond the estimate is an internal error.
    """
    z_arr = np.asarray(z, dtype=complex)
    if not np.all(z_arr.imag > 0):
        raise ValueError("need Im z > 0")
    eps_min = float(np.min(z_arr.imag))
    c_min = min(_decay_rate(complex(zz)) for zz in np.atleast_1d(z_arr))
    n_sites = int(math.ceil(math.log(2.0 / (eps_min * tol)) / c_min)) + 8
    capped = n_sites > site_cap
    if capped:
        n_sites = site_cap
    bound = 2.0 * math.exp(-c_min * n_sites) / eps_min
    m1 = _half_line_once(r, beta, lam, z_arr, side, n_sites)
    m2 = _half_line_once(r, beta, lam, z_arr, side, 2 * n_sites)
    delta = float(np.max(np.abs(np.asarray(m2) - np.asarray(m1))))
    if not capped and delta > 4.0 * bound + 1e-12:
        raise InternalConsistencyError(
            f"doubling the truncation moved m by {delta}, bound {bound}"
        )
    if not np.all(np.asarray(m2).imag > 0):
        raise InternalConsistencyError("half-line m lost its positive imaginary part")
    return MValue(
        value=m2 if z_arr.ndim else complex(m2),
        sites=2 * n_sites,
        bound=bound,
        capped=capped,
        delta=delta,
    )


def m_whole_line(m_plus, m_minus):
    """The 2x2 whole-line matrix M(z); inputs broadcast, output (..., 2, 2)."""
    mp = np.asarray(m_plus, dtype=complex)
    mm = np.asarray(m_minus, dtype=complex)
    den = 1.0 - mp * mm
    if np.any(np.abs(den) < 1e-14):
        raise DegeneracyError("1 - m+ m- vanishes; whole-line matrix undefined")
    out = np.empty(np.broadcast(mp, mm).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = mm / den
    out[..., 1, 1] = mp / den
    out[..., 0, 1] = out[..., 1, 0] = -mp * mm / den
    if not (np.all(out[..., 0, 0].imag > 0) and np.all(out[..., 1, 1].imag > 0)):
        raise InternalConsistencyError("whole-line matrix lost the Herglotz property")
    return out


def weyl_point(m_plus, m_minus):
    """tr M(z) = (m+ + m-) / (1 - m+ m-), the scalar whole-line m."""
    m = m_whole_line(m_plus, m_minus)
    return m[..., 0, 0] + m[..., 1, 1]


def mobius_sup(m_plus):
    """sup over Herglotz images: (1 + |mu|) / (1 - |mu|), mu = (m+ - i)/(m+ + i).

    Dominates |tr M| over every admissible left partner, so it caps the
    whole-line m by right-half-line data alone.
    """
    mp = np.asarray(m_plus, dtype=complex)
    mu = np.abs((mp - 1j) / (mp + 1j))
    if np.any(mu >= 1.0):
        raise ValueError("need Im m+ > 0")
    out = (1.0 + mu) / (1.0 - mu)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ExponentFit:
    """Power-law exponents of |u|_L over initial angles."""

    gamma1: float
    gamma2: float
    alpha: float
    lengths: np.ndarray
    min_norms: np.ndarray
    max_norms: np.ndarray
    residual1: float
    residual2: float


def fit_exponents(
    r: RotationNumber,
    beta,
    lam: float,
    energy: float,
    lengths=None,
    n_angles: int = 32,
) -> ExponentFit:
    """Fit gamma1 (slowest angle) and gamma2 (fastest) from |u|_L ~ L^gamma.

    lengths defaults to 40 points spanning L = 1e2 .. 1e5.  A nonpositive
    gamma1 has no subordinacy reading and raises ExponentFitError.
    """
    if lengths is None:
        lengths = np.geomspace(1e2, 1e5, 40)
    lengths = np.asarray(lengths, dtype=float)
    if np.max(lengths) / np.min(lengths) < 1e3 or len(lengths) < 8:
        raise ValueError("length grid must span three decades with enough points")
    n_max = int(math.floor(np.max(lengths))) + 1
    bits8 = _potential_bytes(r, beta, 1, n_max)
    bits = (np.frombuffer(bits8, dtype=np.uint8) - ord("0")).astype(np.uint8)
    floors = [int(math.floor(L)) for L in lengths]
    marks = prefix_marks(bits, lam, np.array([energy]), floors)
    phis = np.linspace(0.0, math.pi, n_angles, endpoint=False)
    mins, maxs = [], []
    for L, f, ms in zip(lengths, floors, marks):
        squ, _ = norms_at_mark(ms, L - f, phis)
        mins.append(math.sqrt(float(np.min(squ[0]))))
        maxs.append(math.sqrt(float(np.max(squ[0]))))
    mins = np.array(mins)
    maxs = np.array(maxs)
    logl = np.log(lengths)
    g1, b1 = np.polyfit(logl, np.log(mins), 1)
    g2, b2 = np.polyfit(logl, np.log(maxs), 1)
    res1 = float(np.sqrt(np.mean((np.log(mins) - (g1 * logl + b1)) ** 2)))
    res2 = float(np.sqrt(np.mean((np.log(maxs) - (g2 * logl + b2)) ** 2)))
    if g1 > g2:  # enforce the envelope ordering against fit noise
        g1, g2 = g2, g1
        res1, res2 = res2, res1
    if g1 <= 0:
        raise ExponentFitError(
            "slowest-angle norm does not grow; no power-law exponent",
            diagnostics={
                "gamma1": float(g1),
                "gamma2": float(g2),
                "residual1": res1,
                "residual2": res2,
                "lengths": lengths.tolist(),
            },
        )
    alpha = 2.0 * g1 / (g1 + g2)
    return ExponentFit(
        gamma1=float(g1),
        gamma2=float(g2),
        alpha=float(alpha),
        lengths=lengths,
        min_norms=mins,
        max_norms=maxs,
        residual1=res1,
        residual2=res2,
    )


@dataclass(frozen=True)
class HolderReport:
    """Spectral-measure Holder test data at one energy."""

    energy: float
    alpha: float
    c3: float
    eps: np.ndarray
    m_abs: np.ndarray
    measure: np.ndarray
    bound: np.ndarray
    violations: tuple[str, ...]
    oracle_gap: float


def _truncated_spectral_data(r, beta, lam: float, n_sites: int):
    """Eigenvalues and delta_0/delta_1 weights of the whole line cut to
    sites -n_sites .. n_sites + 1."""
    lo, hi = -n_sites, n_sites + 1
    bits = _potential_bytes(r, beta, lo, hi)
    diag = lam * (np.frombuffer(bits, dtype=np.uint8) - ord("0")).astype(float)
    off = np.ones(len(diag) - 1)
    vals, vecs = eigh_tridiagonal(diag, off)
    i0, i1 = -lo, -lo + 1
    weights = vecs[i0] ** 2 + vecs[i1] ** 2
    return vals, weights


def _count_below(diag: np.ndarray, x: float) -> int:
    """Eigenvalues below x for the tridiagonal with unit off-diagonals.

    Negative-pivot count of the LDL^T factorization of T - x (Sturm
    sequence); exact up to floating pivots, O(dim)."""
    neg = 0
    d = math.inf  # no off-diagonal correction on the first pivot
    for v in diag.tolist():
        d = v - x - 1.0 / d
        if d < 0:
            neg += 1
        elif d == 0.0:  # nudge off the singular pivot
            d = 1e-300
    return neg


def _window_spectral_data(r, beta, lam: float, n_sites: int, energy: float, k: int):
    """The k eigenpairs nearest energy for the same truncated whole line,
    as (eigenvalues, delta_0/delta_1 weights, certified radius).

    Shift-invert Lanczos touches only the window, so n_sites can be far
    beyond what a full decomposition allows.  A Sturm count over the
    covered radius certifies that no eigenvalue inside it was missed;
    windows beyond the radius must fall back to the full decomposition.
    """
    lo, hi = -n_sites, n_sites + 1
    bits = _potential_bytes(r, beta, lo, hi)
    diag = lam * (np.frombuffer(bits, dtype=np.uint8) - ord("0")).astype(float)
    dim = len(diag)
    off = np.ones(dim - 1)
    mat = sparse.diags_array([off, diag, off], offsets=[-1, 0, 1], format="csc")
    v0 = np.full(dim, dim**-0.5)  # fixed start keeps runs reproducible
    k = min(k, dim - 2)
    vals, vecs = eigsh(mat, k=k, sigma=energy, which="LM", v0=v0)
    i0, i1 = -lo, -lo + 1
    weights = vecs[i0] ** 2 + vecs[i1] ** 2
    dist = np.abs(vals - energy)
    cover = float(np.max(dist)) * (1.0 - 1e-9)  # shave boundary ties
    inside = int(np.sum(dist <= cover))
    expected = _count_below(diag, energy + cover) - _count_below(diag, energy - cover)
    if expected > inside:
        raise InternalConsistencyError(
            f"window eigensolve missed {expected - inside} eigenvalues within {cover:.3e} of {energy}"
        )
    return vals, weights, cover


def holder_check(
    r: RotationNumber,
    beta,
    lam: float,
    energy: float,
    alpha: float,
    eps_grid=None,
    n_sites: int = 2000,
    n_refine: int = 60_000,
    tol: float = 1e-8,
) -> HolderReport:
    """Check mu([E - eps, E + eps]) <= 2 C3 eps^alpha on an eps ladder.

    C3 is the envelope max over the ladder of |m(E + i eps)| eps^(1-alpha)
    with m the whole-line trace from both half-line recursions.  The
    measure is evaluated on a truncated whole-line eigendecomposition;
    each window is checked against its own decomposition's Poisson sum,
    which bounds it exactly, so any violation indicts the Riccati m or
    the exponent, not the oracle.

    Windows narrower than the base box's local eigenvalue spacing would
    quantize to whole eigenvalue weights and overshoot, so they are
    re-measured on the n_refine box from its nearest eigenpairs (pass
    n_refine <= n_sites to disable).
    """
    if eps_grid is None:
        eps_grid = np.geomspace(1e-4, 1e-1, 16)
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps < 1e-4):
        raise ValueError("eps below the 1e-4 resolution floor")
    z = energy + 1j * eps
    mp = m_half_line(r, beta, lam, z, side="right", tol=tol)
    mm = m_half_line(r, beta, lam, z, side="left", tol=tol)
    m_tr = weyl_point(mp.value, mm.value)
    m_abs = np.abs(m_tr)
    c3 = float(np.max(m_abs * eps ** (1.0 - alpha)))

    vals, weights = _truncated_spectral_data(r, beta, lam, n_sites)
    measure = np.array([float(weights[np.abs(vals - energy) <= e].sum()) for e in eps])
    m_oracle = np.array([complex(np.sum(weights / (vals - energy - 1j * e))) for e in eps])
    poisson = 2.0 * eps * m_oracle.imag
    if n_refine > n_sites:
        # 128 pairs cover a radius ~1e-3 at the default n_refine
        vals_w, w_w, cover = _window_spectral_data(r, beta, lam, n_refine, energy, k=128)
        near = np.abs(vals_w - energy)
        for j in np.nonzero(eps < cover)[0]:
            e = eps[j]
            measure[j] = float(w_w[near <= e].sum())
            poisson[j] = float(2.0 * e * np.sum(w_w * e / (near**2 + e**2)))
    if np.any(measure > poisson * (1.0 + 1e-12) + 1e-300):
        raise InternalConsistencyError("truncated measure exceeds its own Poisson bound")

    bound = 2.0 * c3 * eps**alpha
    violations = tuple(
        f"eps={e:.3e}: measure {mv:.6e} > bound {bv:.6e}"
        for e, mv, bv in zip(eps, measure, bound)
        if mv > bv * (1.0 + 1e-9)
    )
    oracle_gap = float(np.max(np.abs(m_oracle - m_tr)))
    return HolderReport(
        energy=energy,
        alpha=alpha,
        c3=c3,
        eps=eps,
        m_abs=m_abs,
        measure=measure,
        bound=bound,
        violations=violations,
        oracle_gap=oracle_gap,
    )
