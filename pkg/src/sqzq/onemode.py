"""One-mode squeezed coherent states.

A state is labelled by a complex squeezing parameter and a phase-space point.
The internal label is tau = (xi/|xi|) tanh|xi|, which lives strictly inside
the unit disc; all widths, wavefunctions and overlaps are rational or Gaussian
expressions in tau.  The overall phase convention is the one produced by
applying the squeeze operator after the displacement operator to the vacuum,
which the test suite pins against a truncated-operator matrix-exponential
oracle (only momentum-sensitive kernel constructions can tell phase
conventions apart; densities and portraits cannot).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DegenerateSqueezing, QuadratureNotConverged
from .numerics import QuadratureRule, gauss_hermite_rule, hermite_phys

__all__ = [
    "SqueezeParameter",
    "OneModeWidths",
    "OneModePhasePoint",
    "tau_from_xi",
    "alpha_from_qp",
    "qp_from_alpha",
    "wavefunction",
    "fock_coefficients",
    "overlap_sq",
    "verify_identity_resolution",
    "holomorphic_orthogonality_check",
]

# widths diverge as |tau| -> 1; everything stops strictly short of the rim
_TAU_RIM = 1.0 - 1e-7


def tau_from_xi(xi: complex) -> complex:
    """Map the squeeze label xi to the unit-disc parameter tau.

    tau = (xi/|xi|) tanh|xi|, with the removable singularity at xi = 0 filled
    by tau = 0.  |tau| = tanh|xi| < 1 and arg tau = arg xi.
    """
    r = abs(xi)
    if r == 0.0:
        return 0.0 + 0.0j
    return complex(xi) / r * np.tanh(r)


@dataclass(frozen=True)
class OneModeWidths:
    """Width bundle of a one-mode state.

    sigma_q_sq is the complex Gaussian width parameter (1+tau)/(1-tau); its
    real part controls the |psi|^2 falloff.  delta_q_sq/delta_p_sq/gamma are
    the real overlap widths; they satisfy delta_q_sq*delta_p_sq = 1+4 gamma^2,
    which is what makes the overlap integrate to exactly 2 pi hbar.
    """

    sigma_q_sq: complex
    delta_q_sq: float
    delta_p_sq: float
    gamma: float


@dataclass(frozen=True)
class SqueezeParameter:
    """Squeezing label plus the length and action scales.

    ``lam`` is the oscillator length (lambda is reserved in Python).  Use the
    factories: ``from_xi`` derives tau, ``from_tau`` back-fills a consistent
    xi on the same ray.
    """

    xi: complex
    tau: complex
    lam: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and self.hbar > 0):
            raise ValueError("lam and hbar must be positive")
        if abs(self.tau) > _TAU_RIM:
            raise DegenerateSqueezing(
                f"|tau| = {abs(self.tau):.9f} too close to 1; widths diverge"
            )

    @classmethod
    def from_xi(cls, xi: complex, lam: float = 1.0, hbar: float = 1.0) -> "SqueezeParameter":
        return cls(complex(xi), tau_from_xi(xi), float(lam), float(hbar))

    @classmethod
    def from_tau(cls, tau: complex, lam: float = 1.0, hbar: float = 1.0) -> "SqueezeParameter":
        tau = complex(tau)
        t = abs(tau)
        xi = 0.0 + 0.0j if t == 0.0 else tau / t * np.arctanh(t)
        return cls(xi, tau, float(lam), float(hbar))

    def widths(self) -> OneModeWidths:
        tau = self.tau
        t2 = abs(tau) ** 2
        one_minus = abs(1.0 - tau) ** 2
        sigma_q_sq = (1.0 + tau) / (1.0 - tau)
        delta_p_sq = one_minus / (1.0 - t2)
        gamma = tau.imag / (1.0 - t2)
        delta_q_sq = ((1.0 - t2) ** 2 + 4.0 * tau.imag**2) / (one_minus * (1.0 - t2))
        return OneModeWidths(sigma_q_sq, delta_q_sq, delta_p_sq, gamma)


@dataclass(frozen=True)
class OneModePhasePoint:
    """Expectation values (q, p) labelling the state."""

    q: float
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.q) and np.isfinite(self.p)):
            raise ValueError("phase-space point must be finite")


def _symplectic_matrix(tau: complex) -> np.ndarray:
    """Unit-determinant map from (q/(lam sqrt2), lam p/(hbar sqrt2)) to (Re a, Im a)."""
    s = np.sqrt(1.0 - abs(tau) ** 2)
    return np.array(
        [[1.0 + tau.real, tau.imag], [tau.imag, 1.0 - tau.real]]
    ) / s


def alpha_from_qp(point: OneModePhasePoint, param: SqueezeParameter) -> complex:
    """Complex amplitude whose state has position/momentum means (q, p)."""
    u = point.q / (param.lam * np.sqrt(2.0))
    w = param.lam * point.p / (param.hbar * np.sqrt(2.0))
    m = _symplectic_matrix(param.tau)
    re, im = m @ (u, w)
    return re + 1j * im


def qp_from_alpha(alpha: complex, param: SqueezeParameter) -> OneModePhasePoint:
    """Inverse of :func:`alpha_from_qp` (exact 2x2 inverse, determinant 1)."""
    tau = param.tau
    s = np.sqrt(1.0 - abs(tau) ** 2)
    minv = np.array(
        [[1.0 - tau.real, -tau.imag], [-tau.imag, 1.0 + tau.real]]
    ) / s
    u, w = minv @ (alpha.real, alpha.imag)
    return OneModePhasePoint(
        u * param.lam * np.sqrt(2.0), w * param.hbar * np.sqrt(2.0) / param.lam
    )


def wavefunction(point: OneModePhasePoint, param: SqueezeParameter, x) -> np.ndarray:
    """Position wavefunction psi(x), vectorised over x.

    Normalised Gaussian; |psi|^2 peaks at x = q with variance
    lam^2/(2 Re sigma_q_sq).  The x-independent phase is the one the
    squeeze-after-displace construction produces.
    """
    tau, lam = param.tau, param.lam
    x = np.asarray(x, dtype=float)
    a = alpha_from_qp(point, param)
    t2 = abs(tau) ** 2
    one_m_tau = 1.0 - tau
    pref = (1.0 - t2) ** 0.25 / (np.pi**0.25 * np.sqrt(lam) * np.sqrt(one_m_tau))
    # the alpha^2 coefficient combines the squeeze-after-displace phase
    # exp(a^2 conj(tau)/2) with the Gaussian completion term
    phase = np.exp(-0.5 * abs(a) ** 2 - a**2 * (1.0 - np.conj(tau)) / (2.0 * one_m_tau))
    expo = (
        -(1.0 + tau) * x**2 / (2.0 * one_m_tau * lam**2)
        + np.sqrt(2.0 * (1.0 - t2)) * a * x / (one_m_tau * lam)
    )
    return pref * phase * np.exp(expo)


def _fock_rows(alpha, tau: complex, nmax: int) -> np.ndarray:
    """Normalised recurrence rows g_n(alpha), shape (nmax+1,) + alpha.shape.

    g_n = tau^{n/2} H_n(alpha sqrt((1-|tau|^2)/(2 tau))) / sqrt(2^n n!)
    without ever forming the square roots of tau: the branch-free form
    g_{n+1} = sqrt(2/(n+1)) zw g_n - sqrt(n/(n+1)) tau g_{n-1},
    zw = alpha sqrt((1-|tau|^2)/2), reduces to alpha^n/sqrt(n!) exactly at
    tau = 0 and never overflows (each row stays O(1)).
    """
    alpha = np.asarray(alpha, dtype=complex)
    zw = alpha * np.sqrt((1.0 - abs(tau) ** 2) / 2.0)
    g = np.zeros((nmax + 1,) + alpha.shape, dtype=complex)
    g[0] = 1.0
    if nmax >= 1:
        g[1] = np.sqrt(2.0) * zw
    for n in range(1, nmax):
        g[n + 1] = np.sqrt(2.0 / (n + 1)) * zw * g[n] - np.sqrt(n / (n + 1)) * tau * g[n - 1]
    return g


def _prefactor(alpha, tau: complex):
    """n-independent factor of the Fock coefficients, vectorised over alpha.

    exp(alpha^2 conj(tau)/2) carries the phase of the squeeze-after-displace
    construction; its modulus keeps the whole factor bounded by
    exp(-|alpha|^2 (1-|tau|)/2).
    """
    alpha = np.asarray(alpha, dtype=complex)
    return (1.0 - abs(tau) ** 2) ** 0.25 * np.exp(
        -0.5 * np.abs(alpha) ** 2 + alpha**2 * np.conj(tau) / 2.0
    )


def fock_coefficients(alpha: complex, param: SqueezeParameter, nmax: int) -> np.ndarray:
    """Number-basis coefficients c_0..c_nmax of the state with amplitude alpha.

    sum |c_n|^2 -> 1 as nmax grows; at tau = 0 the coefficients are exactly
    the Poissonian e^{-|alpha|^2/2} alpha^n/sqrt(n!).
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    tau = param.tau
    a = complex(alpha)
    g = _fock_rows(a, tau, nmax)
    return _prefactor(a, tau) * g


def overlap_sq(
    point_a: OneModePhasePoint, point_b: OneModePhasePoint, param: SqueezeParameter
) -> float:
    """|<b|a>|^2 for two states sharing one squeezing parameter.

    Gaussian in the phase-space separation; equals 1 at coincident points and
    integrates over (q', p')/(2 pi hbar) to exactly 1.
    """
    w = param.widths()
    lam, hbar = param.lam, param.hbar
    dq = point_a.q - point_b.q
    dp = point_a.p - point_b.p
    expo = (
        -w.delta_q_sq * dq**2 / (2.0 * lam**2)
        - lam**2 * w.delta_p_sq * dp**2 / (2.0 * hbar**2)
        - 2.0 * w.gamma * dq * dp / hbar
    )
    return float(np.exp(expo))


def _plane_rule(param: SqueezeParameter, quad: QuadratureRule):
    """1D nodes/weights for one axis of the alpha-plane integral.

    Gauss-Hermite rules are rescaled by the coefficient-product decay length
    (1-|tau|)^(-1/2) and their implicit weight is divided out; cartesian rules
    are taken literally (the caller owns the box).
    """
    if quad.kind == "gauss_hermite":
        scale = 1.0 / np.sqrt(1.0 - abs(param.tau))
        nodes = quad.nodes * scale
        weights = quad.weights * np.exp(quad.nodes**2) * scale
        return nodes, weights
    return quad.nodes, quad.weights


def verify_identity_resolution(
    param: SqueezeParameter, nmax: int, quad: QuadratureRule
) -> float:
    """Max deviation of the numeric resolution-of-identity matrix from I.

    Integrates M_nm = (1/pi) integral c_n(alpha) conj(c_m(alpha)) d^2 alpha
    over the plane with a tensor product of ``quad``; mathematically M = I
    for every |tau| < 1, so the return value measures quadrature error alone.

    Raises
    ------
    QuadratureNotConverged
        if the deviation exceeds 0.05, i.e. the rule's order or box is
        manifestly inadequate rather than merely imprecise.
    """
    nodes, weights = _plane_rule(param, quad)
    re, im = np.meshgrid(nodes, nodes, indexing="ij")
    alpha = (re + 1j * im).ravel()
    w2 = (weights[:, None] * weights[None, :]).ravel()
    g = _fock_rows(alpha, param.tau, nmax)
    c = g * _prefactor(alpha, param.tau)[None, :]
    m = (c * w2[None, :]) @ c.conj().T / np.pi
    dev = float(np.max(np.abs(m - np.eye(nmax + 1))))
    if dev > 0.05:
        raise QuadratureNotConverged(
            f"identity-resolution deviation {dev:.3g}; increase the rule's order or box"
        )
    return dev


def holomorphic_orthogonality_check(
    param: SqueezeParameter, n: int, m: int, order: int | None = None
):
    """Orthogonality integral of Hermite polynomials at conjugate complex args.

    Evaluates lhs = integral H_n(x+iy) H_m(x-iy) e^{-a x^2 - b y^2} dx dy with
    a = 2|tau|/(1+|tau|), b = 2|tau|/(1-|tau|) (these satisfy 1/a - 1/b = 1,
    which is exactly the condition for orthogonality) and returns (lhs, rhs)
    with the closed form rhs = (pi/sqrt(ab)) 2^n n! ((a+b)/(ab))^n delta_nm.

    The substitution x = t/sqrt(a), y = s/sqrt(b) turns the integrand into a
    polynomial times the Gauss-Hermite weight, so the quadrature is exact once
    the order exceeds (n+m)/2.
    """
    t = abs(param.tau)
    if t < 1e-12:
        raise ValueError("orthogonality weight degenerates at tau = 0")
    a = 2.0 * t / (1.0 + t)
    b = 2.0 * t / (1.0 - t)
    if abs(1.0 / a - 1.0 / b - 1.0) > 1e-12:
        raise AssertionError("weight constraint 1/a - 1/b = 1 violated")
    if order is None:
        order = (n + m) // 2 + 4
    rule = gauss_hermite_rule(order)
    tnod, snod = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    wts = rule.weights[:, None] * rule.weights[None, :]
    z_plus = tnod / np.sqrt(a) + 1j * snod / np.sqrt(b)
    lhs = np.sum(wts * hermite_phys(n, z_plus) * hermite_phys(m, np.conj(z_plus))) / np.sqrt(a * b)
    if n == m:
        rhs = np.pi / np.sqrt(a * b) * 2.0**n * float(factorial(n)) * ((a + b) / (a * b)) ** n
    else:
        rhs = 0.0
    return complex(lhs), float(rhs)
