"""Non-separable two-mode squeezed states and their coupled portraits.

A beam splitter inserted between two one-mode squeezers couples the modes:
the position wavefunction is still a bivariate complex Gaussian, but with a
cross term whose coefficient ell vanishes only when the two squeezing labels
coincide or the mixing angle is a multiple of pi/2.  Everything downstream is
Gaussian algebra over the quadratic coefficients (Delta1, Delta2, ell): the
normalisation, the overlap of two such states, the position portrait kernel,
and the quantisation of position fields in a truncated Fock basis.

Two independent numerical routes back the closed forms.  Fock coefficients of
the states follow from a pair of exact ladder recurrences seeded by the
vacuum amplitude (no quadrature, no matrix exponentials), which powers the
identity-resolution and field-quantisation checks.  The unitary G itself is
assembled column by column from exact per-mode recurrences for the squeeze
and displacement factors plus a per-sector beam splitter, which powers the
mode-mixing (Bogoliubov) residual check; matrix exponentials of truncated
generators are avoided throughout because their columns are contaminated at
any truncation reachable in practice.

Sign conventions for the overlap exponent and the mixed-term coefficients
were fixed against exact Gaussian-integral oracles, not taken on faith; see
``table1_coefficient_rows`` and ``nonsep_overlap_report`` for the rival
closed forms kept around for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .errors import (
    ConfigError,
    GrowthViolation,
    NonConvergent,
    QuadratureNotConverged,
    SqzqError,
    TruncationTooSmall,
)
from .numerics import (
    TruncatedOperator,
    gauss_hermite_rule,
    integrate_gaussian_quadratic,
    legendre_box_rule,
)
from .sepstates import PhasePoint, TwoModeParams, as_field

__all__ = [
    "NonSepParams",
    "NonSepCoefficients",
    "OverlapReport",
    "nonsep_coefficients",
    "nonsep_wavefunction",
    "fock_coefficients",
    "bogoliubov_check",
    "nonsep_overlap_sq",
    "nonsep_overlap_closed",
    "nonsep_overlap_report",
    "nonsep_portrait_hq",
    "verify_identity_resolution",
    "table1_operators",
    "table1_coefficient_rows",
]

_NSIGMA = 8.5


@dataclass(frozen=True)
class NonSepParams:
    """Two per-mode squeezing labels plus the beam-splitter mixing angle."""

    modes: TwoModeParams
    phi: float

    def __post_init__(self):
        if not np.isfinite(self.phi):
            raise ConfigError("mixing angle must be finite")
        if not (0.0 <= self.phi < 2.0 * np.pi):
            raise ConfigError("mixing angle must lie in [0, 2 pi)")

    @classmethod
    def from_tau(
        cls,
        tau1: complex,
        tau2: complex,
        phi: float,
        lam1: float = 1.0,
        lam2: float = 1.0,
        hbar: float = 1.0,
    ) -> "NonSepParams":
        return cls(TwoModeParams.from_tau(tau1, tau2, lam1, lam2, hbar), float(phi))

    @property
    def tau1(self) -> complex:
        return self.modes.mode1.tau

    @property
    def tau2(self) -> complex:
        return self.modes.mode2.tau

    @property
    def lam1(self) -> float:
        return self.modes.mode1.lam

    @property
    def lam2(self) -> float:
        return self.modes.mode2.lam

    @property
    def hbar(self) -> float:
        return self.modes.hbar


@dataclass(frozen=True)
class NonSepCoefficients:
    """Coefficient groups of one non-separable state at one phase point.

    ``Delta1``, ``Delta2``, ``ell`` are the quadratic-form coefficients of
    the wavefunction; ``ell1``, ``ell2`` the linear ones (point dependent).
    ``Delta`` through ``L22`` parametrise the overlap exponent, and the C
    group the position-portrait kernel; those depend on the parameters only.
    """

    Delta1: complex
    Delta2: complex
    ell: complex
    ell1: complex
    ell2: complex
    Delta: float
    theta1: float
    theta2: float
    theta12: float
    Xi1: float
    Xi2: float
    Xi12: float
    L11: float
    L12: float
    L21: float
    L22: float
    C1: float
    C2: float
    C12: float


@dataclass(frozen=True)
class OverlapReport:
    """Overlap-squared by exact Gaussian integration vs the closed form."""

    oracle: float
    closed_form: float

    @property
    def deviation(self) -> float:
        return abs(self.oracle - self.closed_form)


# ---------------------------------------------------------------------------
# coefficient algebra


def _mix_coefficients(tau1: complex, tau2: complex, phi: float):
    """Ladder-mixing coefficient quadruples (A, B) of the two modes.

    Written in tau so that tau = 0 (no squeezing) needs no special casing.
    """
    s1 = abs(tau1) ** 2 / (1.0 - abs(tau1) ** 2)
    s2 = abs(tau2) ** 2 / (1.0 - abs(tau2) ** 2)
    sc1 = tau1 / (1.0 - abs(tau1) ** 2)
    sc2 = tau2 / (1.0 - abs(tau2) ** 2)
    c, s = np.cos(phi), np.sin(phi)
    A = np.array(
        [1.0 + s1 * c**2 + s2 * s**2, sc2 * s**2 + sc1 * c**2,
         (s2 - s1) * s * c, (sc2 - sc1) * c * s],
        dtype=complex,
    )
    B = np.array(
        [A[2], A[3], 1.0 + s2 * c**2 + s1 * s**2, sc2 * c**2 + sc1 * s**2],
        dtype=complex,
    )
    return A, B


def _quad_coefficients(tau1: complex, tau2: complex, phi: float):
    """Quadratic-form coefficients (Delta1, Delta2, ell) of the wavefunction."""
    d = 2.0 * (1.0 - tau1) * (1.0 - tau2)
    d1 = (1.0 - tau1 * tau2 - np.cos(2.0 * phi) * (tau2 - tau1)) / d
    d2 = (1.0 - tau1 * tau2 + np.cos(2.0 * phi) * (tau2 - tau1)) / d
    ell = np.sin(2.0 * phi) * (tau2 - tau1) / ((1.0 - tau1) * (1.0 - tau2))
    return complex(d1), complex(d2), complex(ell)


def _pair_matrix(tau1: complex, tau2: complex, phi: float) -> np.ndarray:
    """Pair-correlation matrix of the mixed squeezed vacuum."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array(
        [[tau1 * c**2 + tau2 * s**2, (tau2 - tau1) * c * s],
         [(tau2 - tau1) * c * s, tau1 * s**2 + tau2 * c**2]],
        dtype=complex,
    )


def _k_matrix(tau1: complex, tau2: complex, phi: float) -> np.ndarray:
    """Quadratic form of log |overlap|^2 in (dq1/l1, l1 dp1/h, dq2/l2, l2 dp2/h).

    Built from the momentum-block Schur algebra of the exact Gaussian overlap
    integral; negative definite for |tau_j| < 1.
    """
    d1, d2, ell = _quad_coefficients(tau1, tau2, phi)
    mh = np.array([[2.0 * d1.real, ell.real], [ell.real, 2.0 * d2.real]])
    nh = np.array([[2.0 * d1.imag, ell.imag], [ell.imag, 2.0 * d2.imag]])
    mi = np.linalg.inv(mh)
    kqq = -0.5 * (mh + nh @ mi @ nh)
    kqp = -0.5 * (nh @ mi)
    kpp = -0.5 * mi
    k = np.zeros((4, 4))
    iq, ip = (0, 2), (1, 3)
    for a in range(2):
        for b in range(2):
            k[iq[a], iq[b]] = kqq[a, b]
            k[iq[a], ip[b]] = kqp[a, b]
            k[ip[b], iq[a]] = kqp[a, b]
            k[ip[a], ip[b]] = kpp[a, b]
    return k


def _alpha_pair(params: NonSepParams, point: PhasePoint):
    """Coherent labels of the displacement factors (mode-diagonal map)."""
    l1, l2, hbar = params.lam1, params.lam2, params.hbar
    a1 = point.q1 / (l1 * np.sqrt(2.0)) + 1j * l1 * point.p1 / (hbar * np.sqrt(2.0))
    a2 = point.q2 / (l2 * np.sqrt(2.0)) + 1j * l2 * point.p2 / (hbar * np.sqrt(2.0))
    return a1, a2


def _scaled_q(params: NonSepParams) -> np.ndarray:
    return np.array([[1.0 / params.lam1**2, 0.0], [0.0, 1.0 / params.lam2**2]])


def _wavefunction_parts(params: NonSepParams, point: PhasePoint):
    """Quadratic matrix Q, linear vector v, real prefactor and global phase.

    The wavefunction is phase * nreal * exp(-x^T Q x / 2 + v^T x).  The phase
    is pinned by matching the vacuum Fock amplitude of the state against the
    same amplitude computed from the real-positive Gaussian ansatz.
    """
    tau1, tau2, phi = params.tau1, params.tau2, params.phi
    l1, l2, hbar = params.lam1, params.lam2, params.hbar
    d1, d2, ell = _quad_coefficients(tau1, tau2, phi)
    q = np.array([[2.0 * d1 / l1**2, ell / (l1 * l2)],
                  [ell / (l1 * l2), 2.0 * d2 / l2**2]])
    qvec = np.array([point.q1, point.q2])
    pvec = np.array([point.p1, point.p2])
    v = q @ qvec + 1j * pvec / hbar
    m = q.real
    nreal = (np.linalg.det(m) / np.pi**2) ** 0.25 * np.exp(-0.5 * qvec @ m @ qvec)

    a1, a2 = _alpha_pair(params, point)
    t = _pair_matrix(tau1, tau2, phi)
    ac = np.conj(np.array([a1, a2]))
    v0 = ((1.0 - abs(tau1) ** 2) * (1.0 - abs(tau2) ** 2)) ** 0.25 * np.exp(
        -0.5 * (abs(a1) ** 2 + abs(a2) ** 2) - 0.5 * ac @ t @ ac
    )
    # vacuum amplitude of the ansatz: Gaussian integral of psi against the
    # two-mode ground state, done in closed form
    amat = (q + _scaled_q(params)) / 2.0
    c00 = (
        nreal
        / np.sqrt(np.pi * l1 * l2)
        * np.pi
        / np.sqrt(np.linalg.det(amat))
        * np.exp(0.25 * v @ np.linalg.solve(amat, v))
    )
    ratio = v0 / c00
    return q, v, nreal, ratio / abs(ratio)


def nonsep_coefficients(params: NonSepParams, point: PhasePoint) -> NonSepCoefficients:
    """All coefficient groups of the state labelled by ``point``.

    The linear coefficients come from the phase-space form v = Q q + i p/hbar
    and are cross-checked against the ladder eigenvalue relations through the
    coherent labels; disagreement beyond 1e-12 would mean the two coefficient
    routes have diverged and is raised, never papered over.
    """
    tau1, tau2, phi = params.tau1, params.tau2, params.phi
    d1, d2, ell = _quad_coefficients(tau1, tau2, phi)
    q, v, _, _ = _wavefunction_parts(params, point)
    ell1 = params.lam1 * v[0]
    ell2 = params.lam2 * v[1]

    # ladder route: the state is a joint eigenvector of two mixed ladder
    # combinations; matching constant terms gives a 2x2 system for (l1 v1,
    # l2 v2) that must reproduce the phase-space form
    a, b = _mix_coefficients(tau1, tau2, phi)
    a1, a2 = _alpha_pair(params, point)
    z1 = a[0] * a1 + a[1] * np.conj(a1) + a[2] * a2 + a[3] * np.conj(a2)
    z2 = b[0] * a1 + b[1] * np.conj(a1) + b[2] * a2 + b[3] * np.conj(a2)
    mat = np.array([[a[0] - a[1], a[2] - a[3]], [b[0] - b[1], b[2] - b[3]]])
    lv = np.linalg.solve(mat, np.sqrt(2.0) * np.array([z1, z2]))
    scale = max(1.0, abs(ell1), abs(ell2))
    if max(abs(lv[0] - ell1), abs(lv[1] - ell2)) > 1e-12 * scale:
        raise SqzqError(
            "linear-coefficient routes disagree; coefficient algebra is broken"
        )

    delta = 16.0 * d1.real * d2.real - 4.0 * ell.real**2
    k = _k_matrix(tau1, tau2, phi)
    mt = delta * k
    return NonSepCoefficients(
        Delta1=d1,
        Delta2=d2,
        ell=ell,
        ell1=ell1,
        ell2=ell2,
        Delta=delta,
        theta1=mt[0, 0],
        theta2=mt[2, 2],
        theta12=2.0 * mt[0, 2],
        Xi1=mt[1, 1],
        Xi2=mt[3, 3],
        Xi12=2.0 * mt[1, 3],
        L11=2.0 * mt[0, 1],
        L12=2.0 * mt[0, 3],
        L21=2.0 * mt[1, 2],
        L22=2.0 * mt[2, 3],
        C1=-delta * d1.real,
        C2=-delta * d2.real,
        C12=-delta * ell.real,
    )


def nonsep_wavefunction(params: NonSepParams, point: PhasePoint, x) -> np.ndarray:
    """Position wavefunction psi(x1, x2); ``x`` has shape (..., 2).

    Normalised bivariate Gaussian including the global phase of the
    displacement-mixing-squeezing construction; at phi = 0 it factorises into
    the two one-mode wavefunctions.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("x must have a trailing axis of length 2")
    q, v, nreal, phase = _wavefunction_parts(params, point)
    quad = (
        q[0, 0] * x[..., 0] ** 2
        + 2.0 * q[0, 1] * x[..., 0] * x[..., 1]
        + q[1, 1] * x[..., 1] ** 2
    )
    lin = v[0] * x[..., 0] + v[1] * x[..., 1]
    return phase * nreal * np.exp(-0.5 * quad + lin)


# ---------------------------------------------------------------------------
# Fock coefficients and the quantisation engine


def _fock_batch(params: NonSepParams, pts: np.ndarray, nmax: int) -> np.ndarray:
    """Fock coefficients <n m|state(q, p)> for a batch of phase points.

    Shell-marching solve of the two ladder recurrences seeded by the vacuum
    amplitude; exact up to rounding, no quadrature involved.  ``pts`` has
    shape (P, 4) ordered (q1, q2, p1, p2); returns (P, nmax+1, nmax+1).
    """
    tau1, tau2, phi = params.tau1, params.tau2, params.phi
    l1, l2, hbar = params.lam1, params.lam2, params.hbar
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    npts = pts.shape[0]
    a, b = _mix_coefficients(tau1, tau2, phi)
    a1 = pts[:, 0] / (l1 * np.sqrt(2.0)) + 1j * l1 * pts[:, 2] / (hbar * np.sqrt(2.0))
    a2 = pts[:, 1] / (l2 * np.sqrt(2.0)) + 1j * l2 * pts[:, 3] / (hbar * np.sqrt(2.0))
    z1 = a[0] * a1 + a[1] * np.conj(a1) + a[2] * a2 + a[3] * np.conj(a2)
    z2 = b[0] * a1 + b[1] * np.conj(a1) + b[2] * a2 + b[3] * np.conj(a2)
    t = _pair_matrix(tau1, tau2, phi)
    ac1, ac2 = np.conj(a1), np.conj(a2)
    c = np.zeros((npts, nmax + 2, nmax + 2), dtype=complex)
    c[:, 0, 0] = ((1.0 - abs(tau1) ** 2) * (1.0 - abs(tau2) ** 2)) ** 0.25 * np.exp(
        -0.5 * (np.abs(a1) ** 2 + np.abs(a2) ** 2)
        - 0.5 * (t[0, 0] * ac1**2 + 2.0 * t[0, 1] * ac1 * ac2 + t[1, 1] * ac2**2)
    )
    det_base = a[0] * b[2] - a[2] * b[0]
    if abs(det_base) < 1e-12:
        raise NonConvergent("ladder system is degenerate; cannot march shells")
    for s in range(0, 2 * nmax + 1):
        for n in range(max(0, s - nmax), min(s, nmax) + 1):
            m = s - n
            r1 = z1 * c[:, n, m]
            r2 = z2 * c[:, n, m]
            if n > 0:
                r1 = r1 - a[1] * np.sqrt(n) * c[:, n - 1, m]
                r2 = r2 - b[1] * np.sqrt(n) * c[:, n - 1, m]
            if m > 0:
                r1 = r1 - a[3] * np.sqrt(m) * c[:, n, m - 1]
                r2 = r2 - b[3] * np.sqrt(m) * c[:, n, m - 1]
            # per-cell 2x2 solve: [[A1 rtN, A3 rtM], [B1 rtN, B3 rtM]]
            rtn, rtm = np.sqrt(n + 1.0), np.sqrt(m + 1.0)
            det = rtn * rtm * det_base
            c[:, n + 1, m] = (b[2] * rtm * r1 - a[2] * rtm * r2) / det
            if n == 0:
                c[:, 0, m + 1] = (-b[0] * rtn * r1 + a[0] * rtn * r2) / det
    return c[:, : nmax + 1, : nmax + 1]


def fock_coefficients(point: PhasePoint, params: NonSepParams, nmax: int) -> np.ndarray:
    """Matrix of Fock coefficients <n m|state> for n, m <= nmax."""
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    pts = np.array([[point.q1, point.q2, point.p1, point.p2]])
    return _fock_batch(params, pts, nmax)[0]


def _quantise_field(
    params: NonSepParams,
    field,
    nmax: int,
    qorder: int,
    porder: int,
    nsig: float,
    chunk: int = 20000,
):
    """4D phase-space quadrature of f(q1, q2, p1, p2) against the family.

    Returns the (nmax+1)^2-dimensional matrix of the quantised field in the
    two-mode Fock basis together with the identity-resolution matrix from
    the same grid (the engine's own convergence witness); measure
    d2q d2p / (2 pi hbar)^2.  Boxes are sized from the Gaussian decay of the
    vacuum amplitude plus the basis extent.
    """
    l1, l2, hbar = params.lam1, params.lam2, params.hbar
    q, _, _, _ = _wavefunction_parts(
        params, PhasePoint(0.0, 0.0, 0.0, 0.0)
    )
    mi = np.linalg.inv(q.real)
    ext = np.sqrt(2.0 * nmax + 1.0)
    wq1 = ext * l1 + nsig * np.sqrt(mi[0, 0])
    wq2 = ext * l2 + nsig * np.sqrt(mi[1, 1])
    k = _k_matrix(params.tau1, params.tau2, params.phi)
    covp = np.linalg.inv(-2.0 * k[np.ix_([1, 3], [1, 3])])
    wp1 = (ext + nsig * np.sqrt(covp[0, 0])) * hbar / l1
    wp2 = (ext + nsig * np.sqrt(covp[1, 1])) * hbar / l2
    rq1 = legendre_box_rule(-wq1, wq1, qorder)
    rq2 = legendre_box_rule(-wq2, wq2, qorder)
    rp1 = legendre_box_rule(-wp1, wp1, porder)
    rp2 = legendre_box_rule(-wp2, wp2, porder)
    g1, g2, g3, g4 = np.meshgrid(
        rq1.nodes, rq2.nodes, rp1.nodes, rp2.nodes, indexing="ij"
    )
    weights = np.einsum(
        "i,j,k,l->ijkl", rq1.weights, rq2.weights, rp1.weights, rp2.weights
    ).ravel()
    pts = np.stack([g1.ravel(), g2.ravel(), g3.ravel(), g4.ravel()], axis=1)
    fv = np.asarray(field(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise GrowthViolation("field evaluates non-finite inside the quadrature box")
    wf = weights * fv
    dim = (nmax + 1) ** 2
    acc = np.zeros((dim, dim), dtype=complex)
    ident = np.zeros((dim, dim), dtype=complex)
    for s in range(0, pts.shape[0], chunk):
        cc = _fock_batch(params, pts[s : s + chunk], nmax).reshape(-1, dim)
        acc += (cc * wf[s : s + chunk, None]).T @ cc.conj()
        ident += (cc * weights[s : s + chunk, None]).T @ cc.conj()
    norm = (2.0 * np.pi * hbar) ** 2
    return acc / norm, ident / norm


def verify_identity_resolution(
    params: NonSepParams,
    nmax: int = 6,
    qorder: int = 38,
    porder: int = 32,
    nsig: float = 8.0,
) -> float:
    """Max-entry deviation of the quantised constant field from the identity.

    The coherent family resolves the identity with measure (2 pi hbar)^2;
    this quadrature check is the numerical witness for that measure power.
    """
    dim = (nmax + 1) ** 2
    _, ident = _quantise_field(
        params, lambda q1, q2, p1, p2: np.ones_like(q1), nmax, qorder, porder, nsig
    )
    return float(np.max(np.abs(ident - np.eye(dim))))


def _position_matrices(params: NonSepParams, nmax: int):
    n1 = nmax + 1
    a = np.zeros((n1, n1))
    n = np.arange(n1 - 1)
    a[n, n + 1] = np.sqrt(n + 1.0)
    x1 = params.lam1 * (a + a.T) / np.sqrt(2.0)
    x2 = params.lam2 * (a + a.T) / np.sqrt(2.0)
    eye = np.eye(n1)
    return np.kron(x1, eye), np.kron(eye, x2)


def table1_coefficient_rows(params: NonSepParams) -> dict:
    """Adopted and rival closed-form rows for the quantised position fields.

    Keys "q1", "q2" map to coefficient pairs over (x1_hat, x2_hat); "q1q2"
    maps to the additive constants accompanying x1_hat x2_hat.  The adopted
    values are the ones the Fock-basis quadrature oracle confirms (linear
    fields quantise to the bare position operators; the product field gains
    half the off-diagonal kernel covariance).  The rival rows mix the modes
    through Re ell and are kept only so that verification reports can show
    how far they deviate.
    """
    d1, d2, ell = _quad_coefficients(params.tau1, params.tau2, params.phi)
    delta = 16.0 * d1.real * d2.real - 4.0 * ell.real**2
    l1, l2 = params.lam1, params.lam2
    m = np.array([[2.0 * d1.real / l1**2, ell.real / (l1 * l2)],
                  [ell.real / (l1 * l2), 2.0 * d2.real / l2**2]])
    mi = np.linalg.inv(m)
    return {
        "q1": {
            "adopted": (1.0, 0.0),
            "rival": (
                1.0 + 8.0 * ell.real**2 / delta,
                16.0 * (l1 / l2) * ell.real * d2.real / delta,
            ),
        },
        "q2": {
            "adopted": (0.0, 1.0),
            "rival": (
                16.0 * (l2 / l1) * ell.real * d1.real / delta,
                1.0 + 8.0 * ell.real**2 / delta,
            ),
        },
        "q1q2": {
            "adopted": mi[0, 1] / 2.0,
            "rival": (8.0 * l1 * l2 * ell.real / delta**2)
            * (3.0 + 16.0 * ell.real**2 / delta),
        },
    }


_TABLE1_FIELDS = {
    "one": lambda q1, q2, p1, p2: np.ones_like(q1),
    "q1": lambda q1, q2, p1, p2: q1,
    "q2": lambda q1, q2, p1, p2: q2,
    "q1q2": lambda q1, q2, p1, p2: q1 * q2,
}


def table1_operators(
    params: NonSepParams,
    f: str,
    nmax: int,
    qorder: int = 38,
    porder: int = 32,
    nsig: float = 8.5,
    tol: float = 1e-3,
) -> TruncatedOperator:
    """Quantised operator of the field ``f`` in the truncated two-mode basis.

    Computed by direct 4D quadrature and asserted against the adopted closed
    form (identity, bare positions, position product plus a constant) on the
    interior block; the quadrature value is returned as the ground truth.
    """
    if f not in _TABLE1_FIELDS:
        raise ConfigError(f"unknown field name {f!r}; expected one of "
                          f"{sorted(_TABLE1_FIELDS)}")
    if nmax < 2:
        raise TruncationTooSmall("need nmax >= 2 for an interior block")
    mat, _ = _quantise_field(params, _TABLE1_FIELDS[f], nmax, qorder, porder, nsig)
    x1, x2 = _position_matrices(params, nmax)
    dim = (nmax + 1) ** 2
    if f == "one":
        closed = np.eye(dim)
    elif f == "q1":
        closed = x1
    elif f == "q2":
        closed = x2
    else:
        closed = x1 @ x2 + table1_coefficient_rows(params)["q1q2"]["adopted"] * np.eye(dim)
    # interior block: two shells of boundary per mode are discarded
    n1 = nmax + 1
    flat = np.arange(dim)
    keep = (flat // n1 <= nmax - 2) & (flat % n1 <= nmax - 2)
    sel = np.ix_(keep, keep)
    dev = float(np.max(np.abs(mat[sel] - closed[sel])))
    if dev > tol:
        raise QuadratureNotConverged(
            f"quantised {f} deviates from the closed form by {dev:.2e} "
            f"(tol {tol:.1e}); raise the quadrature orders"
        )
    return TruncatedOperator(dim, mat)


# ---------------------------------------------------------------------------
# overlap


def nonsep_overlap_sq(
    point_a: PhasePoint, point_b: PhasePoint, params: NonSepParams
) -> float:
    """Squared overlap of the states at two phase points, exactly.

    Direct Gaussian integration of the two wavefunctions; this closed-form
    integral is the primary route, with the coefficient-table expression
    available through :func:`nonsep_overlap_report` for comparison.
    """
    qa, va, na, pha = _wavefunction_parts(params, point_a)
    qb, vb, nb, phb = _wavefunction_parts(params, point_b)
    amat = (np.conj(qa) + qb) / 2.0
    bvec = np.conj(va) + vb
    ov = np.conj(na * pha) * nb * phb * integrate_gaussian_quadratic(amat, bvec)
    return float(abs(ov) ** 2)


def nonsep_overlap_closed(
    point_a: PhasePoint, point_b: PhasePoint, params: NonSepParams
) -> float:
    """Squared overlap from the displacement-difference quadratic form."""
    k = _k_matrix(params.tau1, params.tau2, params.phi)
    l1, l2, hbar = params.lam1, params.lam2, params.hbar
    r = np.array(
        [
            (point_b.q1 - point_a.q1) / l1,
            l1 * (point_b.p1 - point_a.p1) / hbar,
            (point_b.q2 - point_a.q2) / l2,
            l2 * (point_b.p2 - point_a.p2) / hbar,
        ]
    )
    return float(np.exp(r @ k @ r))


def nonsep_overlap_report(
    point_a: PhasePoint, point_b: PhasePoint, params: NonSepParams
) -> OverlapReport:
    return OverlapReport(
        oracle=nonsep_overlap_sq(point_a, point_b, params),
        closed_form=nonsep_overlap_closed(point_a, point_b, params),
    )


# ---------------------------------------------------------------------------
# coupled position portrait


def nonsep_portrait_hq(
    h, point: PhasePoint, params: NonSepParams, order: int = 90
) -> float:
    """Lower symbol of the quantised position field h(q1, q2).

    Bivariate Gaussian smoothing of h centred at (q1, q2) whose precision
    matrix is the real part of the wavefunction quadratic form; the mixing
    angle makes the kernel anisotropic whenever Re ell is nonzero.  Fields
    with declared support integrate on a clipped product rule, everything
    else on Gauss-Hermite nodes along the kernel's principal axes.
    """
    field = as_field(h)
    d1, d2, ell = _quad_coefficients(params.tau1, params.tau2, params.phi)
    l1, l2 = params.lam1, params.lam2
    m = np.array([[2.0 * d1.real / l1**2, ell.real / (l1 * l2)],
                  [ell.real / (l1 * l2), 2.0 * d2.real / l2**2]])
    centre = np.array([point.q1, point.q2])
    if field.support is None:
        w, vecs = np.linalg.eigh(m)
        rule = gauss_hermite_rule(order)
        t1, t2 = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = (
            np.stack([t1.ravel() * np.sqrt(2.0 / w[0]),
                      t2.ravel() * np.sqrt(2.0 / w[1])], axis=1)
            @ vecs.T
            + centre
        )
        vals = field(pts[:, 0], pts[:, 1]).reshape(order, order)
        wts = rule.weights[:, None] * rule.weights[None, :]
        return float(np.sum(wts * vals) / np.pi)
    mi = np.linalg.inv(m)
    windows = []
    for axis in range(2):
        pad = _NSIGMA + (field.degree if field.growth == "poly" else 0)
        half = pad * np.sqrt(mi[axis, axis])
        lo, hi = centre[axis] - half, centre[axis] + half
        a, bnd = field.support[axis]
        lo, hi = max(lo, a), min(hi, bnd)
        if not hi > lo:
            return 0.0
        windows.append((lo, hi))
    r1 = legendre_box_rule(*windows[0], order, 2)
    r2 = legendre_box_rule(*windows[1], order, 2)
    u1, u2 = np.meshgrid(r1.nodes, r2.nodes, indexing="ij")
    wts = r1.weights[:, None] * r2.weights[None, :]
    du1, du2 = u1 - centre[0], u2 - centre[1]
    kern = np.exp(
        -0.5 * (m[0, 0] * du1**2 + 2.0 * m[0, 1] * du1 * du2 + m[1, 1] * du2**2)
    ) * (np.sqrt(np.linalg.det(m)) / (2.0 * np.pi))
    return float(np.sum(wts * kern * field(u1, u2)))


# ---------------------------------------------------------------------------
# mode-mixing (Bogoliubov) residual


def _squeeze_columns(tau: complex, ncols: int, ambient: int) -> np.ndarray:
    """Exact squeeze-operator columns <m|S|n>, n < ncols, m < ambient.

    Column n follows from column n-1 by one ladder application.  The forward
    recurrence amplifies rounding by roughly (|c|+|s|) sqrt(m/n) per column,
    so it runs in extended precision and is cast down once at the end.
    """
    cols = np.zeros((ambient, ncols), np.clongdouble)
    v = np.zeros(ambient, np.clongdouble)
    v[0] = (1.0 - abs(tau) ** 2) ** 0.25
    tl = np.clongdouble(tau)
    k = 0
    while 2 * k + 2 < ambient:
        v[2 * k + 2] = -tl * np.sqrt(np.longdouble(2 * k + 1) / (2 * k + 2)) * v[2 * k]
        k += 1
    cols[:, 0] = v
    c = 1.0 / np.sqrt(1.0 - np.abs(tl) ** 2)
    sbar = np.conj(tl) * c
    rt = np.sqrt(np.arange(1, ambient, dtype=np.longdouble))
    for n in range(1, ncols):
        prev = cols[:, n - 1]
        nxt = np.zeros(ambient, np.clongdouble)
        nxt[1:] += c * rt * prev[:-1]
        nxt[:-1] += sbar * rt * prev[1:]
        cols[:, n] = nxt / np.sqrt(np.longdouble(n))
    return cols.astype(complex)


def _displacement_columns(alpha: complex, ncols: int, ambient: int) -> np.ndarray:
    """Exact displacement-operator columns <m|D|n>, n < ncols, m < ambient."""
    cols = np.zeros((ambient, ncols), np.clongdouble)
    v = np.zeros(ambient, np.clongdouble)
    al = np.clongdouble(alpha)
    v[0] = np.exp(-0.5 * np.abs(al) ** 2)
    for m in range(1, ambient):
        v[m] = al / np.sqrt(np.longdouble(m)) * v[m - 1]
    cols[:, 0] = v
    ac = np.conj(al)
    rt = np.sqrt(np.arange(1, ambient, dtype=np.longdouble))
    for n in range(1, ncols):
        prev = cols[:, n - 1]
        nxt = -ac * prev
        nxt[1:] += rt * prev[:-1]
        cols[:, n] = nxt / np.sqrt(np.longdouble(n))
    return cols.astype(complex)


def _beam_splitter_sparse(phi: float, ambient: int) -> sp.csr_matrix:
    """Beam-splitter unitary on the two-mode box, exact per photon-number sector."""
    rows, colidx, vals = [], [], []
    for tot in range(2 * ambient - 1):
        n1s = np.arange(max(0, tot - ambient + 1), min(tot, ambient - 1) + 1)
        k = n1s.size
        gen = np.zeros((k, k))
        for i, n1 in enumerate(n1s[:-1]):
            amp = phi * np.sqrt((n1 + 1.0) * (tot - n1))
            gen[i + 1, i] = amp
            gen[i, i + 1] = -amp
        block = expm(gen)
        idx = n1s * ambient + (tot - n1s)
        ii, jj = np.nonzero(np.abs(block) > 1e-18)
        rows.extend(idx[ii])
        colidx.extend(idx[jj])
        vals.extend(block[ii, jj])
    return sp.csr_matrix(
        (vals, (rows, colidx)), shape=(ambient**2, ambient**2), dtype=complex
    )


def _g_columns_for(
    tau1: complex,
    tau2: complex,
    phi: float,
    a1: complex,
    a2: complex,
    pairs,
    ambient: int,
) -> np.ndarray:
    nmax1 = max(p[0] for p in pairs) + 1
    nmax2 = max(p[1] for p in pairs) + 1
    s1 = _squeeze_columns(tau1, nmax1, ambient)
    s2 = _squeeze_columns(tau2, nmax2, ambient)
    cols = np.empty((ambient**2, len(pairs)), dtype=complex)
    for j, (n1, n2) in enumerate(pairs):
        cols[:, j] = np.kron(s1[:, n1], s2[:, n2])
    cols = _beam_splitter_sparse(phi, ambient) @ cols
    d1 = _displacement_columns(a1, ambient, ambient)
    d2 = _displacement_columns(a2, ambient, ambient)
    out = np.einsum(
        "ab,bcj,dc->adj",
        d1,
        cols.reshape(ambient, ambient, len(pairs)),
        d2,
        optimize=True,
    )
    return out.reshape(ambient**2, len(pairs))


def _mixing_matrix(
    tau1: complex, tau2: complex, phi: float, a1: complex, a2: complex, pairs, mode: int
) -> np.ndarray:
    """Mixed-ladder closed form on the span of the pairs (banded matrix)."""
    idx = {p: i for i, p in enumerate(pairs)}
    c1 = 1.0 / np.sqrt(1.0 - abs(tau1) ** 2)
    s1 = tau1 * c1
    c2 = 1.0 / np.sqrt(1.0 - abs(tau2) ** 2)
    s2 = tau2 * c2
    cphi, sphi = np.cos(phi), np.sin(phi)
    if mode == 1:
        shift = a1
        w = (cphi * c1, -cphi * s1, sphi * c2, -sphi * s2)
    else:
        shift = a2
        w = (-sphi * c1, sphi * s1, cphi * c2, -cphi * s2)
    f = np.zeros((len(pairs), len(pairs)), dtype=complex)
    for (n1, n2), kcol in idx.items():
        f[kcol, kcol] += shift
        for dn1, dn2, wgt, amp in (
            (-1, 0, w[0], np.sqrt(n1)),
            (+1, 0, w[1], np.sqrt(n1 + 1.0)),
            (0, -1, w[2], np.sqrt(n2)),
            (0, +1, w[3], np.sqrt(n2 + 1.0)),
        ):
            tgt = (n1 + dn1, n2 + dn2)
            if tgt in idx:
                f[idx[tgt], kcol] += wgt * amp
    return f


def _lower_mode(vecs: np.ndarray, dim: int, mode: int) -> np.ndarray:
    """Apply the mode-1 or mode-2 annihilation to stacked two-mode vectors."""
    v = vecs.reshape(dim, dim, -1)
    out = np.zeros_like(v)
    rt = np.sqrt(np.arange(1, dim))
    if mode == 1:
        out[:-1, :, :] = rt[:, None, None] * v[1:, :, :]
    else:
        out[:, :-1, :] = rt[None, :, None] * v[:, 1:, :]
    return out.reshape(dim**2, -1)


def bogoliubov_check(params: NonSepParams, nmax: int, dim: int = 40) -> float:
    """Residual of the mixed-ladder relations at truncation ``dim`` per mode.

    Builds the exact projection of the full unitary onto the dim^2 box,
    column by column (per-mode ladder recurrences for squeeze and
    displacement factors, per-sector beam splitter), then measures how far
    a_j G differs from G applied to the closed-form ladder mixture, over the
    columns with n1 + n2 <= nmax and all rows the truncated lowering leaves
    exact.  Left-multiplied form throughout: sandwiching with the truncated
    adjoint would add squeezed-tail mass lost beyond the box (> 1e-6 even at
    the vacuum column for moderate squeezing) and test the truncation rather
    than the algebra.
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    if 2 * nmax > dim:
        raise TruncationTooSmall(
            f"interior block nmax = {nmax} needs dim >= {2 * nmax}, got {dim}"
        )
    tau1, tau2, phi = params.tau1, params.tau2, params.phi
    # displacement amplitudes: one coherent label per mode, fixed here to the
    # unit phase-space cell; the relation is displacement covariant, so one
    # nonzero choice exercises the constant term
    a1, a2 = 0.7 * np.exp(0.4j), 0.7 * np.exp(-1.8j)
    ambient = dim + 60
    pairs = [
        (n1, n2)
        for n1 in range(nmax + 2)
        for n2 in range(nmax + 2)
        if n1 + n2 <= nmax + 1
    ]
    sel = [i for i, p in enumerate(pairs) if p[0] + p[1] <= nmax]
    g = _g_columns_for(tau1, tau2, phi, a1, a2, pairs, ambient)
    blk = np.zeros((ambient, ambient), dtype=bool)
    blk[:dim, :dim] = True
    gn = g[blk.ravel(), :]
    rows = np.zeros((dim, dim), dtype=bool)
    rows[: dim - 2, : dim - 2] = True
    rows = rows.ravel()
    res = 0.0
    for mode in (1, 2):
        f = _mixing_matrix(tau1, tau2, phi, a1, a2, pairs, mode)
        r = _lower_mode(gn, dim, mode)[:, sel] - gn @ f[:, sel]
        res = max(res, float(np.max(np.abs(r[rows, :]))))
    return res
