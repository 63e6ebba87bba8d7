"""Quantisation of phase-space functions over squeezed coherent families.

A classical function f(q, p) becomes an operator by integrating f against
the rank-one projectors of a state family with the flat measure that makes
f = 1 come out as the identity.  Entries are independent integrals, so the
matrix of the quantised operator is exact entry by entry up to quadrature
error; no truncation leakage enters until operators are multiplied, which
is why the commutator and dilation checks restrict themselves to interior
blocks of matrices built at twice the requested size.

The x-representation kernel of any admissible f here is supported on the
diagonal: position-only functions quantise to multiplication operators
(the multiplier being a Gaussian smoothing of f), and momentum dependence
of polynomial degree <= 2 adds first and second derivative terms whose
coefficients come from exact Gaussian moments, never from oscillatory
numeric p-integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ConfigError,
    GrowthViolation,
    TruncationTooSmall,
    UnsupportedMomentumDependence,
)
from .numerics import TruncatedOperator, gauss_hermite_rule
from .onemode import SqueezeParameter, _fock_rows, _plane_rule, _prefactor
from .nonsepstates import NonSepParams, _quad_coefficients, _quantise_field
from .sepstates import TwoModeParams

__all__ = [
    "ClassicalFunction",
    "QuantisedOperator",
    "QuadratureReport",
    "KernelAction",
    "quantise",
    "kernel_eval",
    "dirac_correspondence_check",
    "symmetrisation_constant",
]


@dataclass(frozen=True)
class ClassicalFunction:
    """Phase-space function with declared arity and growth.

    One-mode evaluators take (q, p), two-mode ones (q1, q2, p1, p2), both
    vectorised over numpy arrays.  The growth declaration is spot-checked
    against the actual values on the quadrature grid, not trusted.
    """

    evaluator: Callable
    arity: str = "one-mode"
    growth: str = "poly"
    degree: int = 2

    def __post_init__(self):
        if self.arity not in ("one-mode", "two-mode"):
            raise ConfigError("arity must be 'one-mode' or 'two-mode'")
        if self.growth not in ("bounded", "poly"):
            raise ConfigError("growth must be 'bounded' or 'poly'")

    def __call__(self, *coords):
        return self.evaluator(*coords)


def _as_classical(f, arity: str) -> ClassicalFunction:
    if isinstance(f, ClassicalFunction):
        if f.arity != arity:
            raise ConfigError(
                f"function has arity {f.arity!r} but the family is {arity}"
            )
        return f
    return ClassicalFunction(f, arity=arity)


@dataclass(frozen=True)
class QuadratureReport:
    """Convergence witnesses taken from the same grid as the operator.

    ``identity_deviation`` is the max-entry error of quantising f = 1 on the
    grid actually used (a direct measure of grid adequacy for the family);
    ``hermiticity_defect`` the largest anti-Hermitian entry, which must sit
    at quadrature level for real f.
    """

    identity_deviation: float
    hermiticity_defect: float


@dataclass(frozen=True)
class QuantisedOperator:
    basis: int
    matrix: TruncatedOperator
    family_tag: str
    quadrature_report: QuadratureReport


@dataclass(frozen=True)
class KernelAction:
    """Diagonal-kernel action (A_f g)(x) = a0 g(x) + a1 g'(x) + a2 g''(x).

    Every admissible f produces a kernel supported on x = x' (delta and its
    first two derivatives); the coefficients are the entire content.  For
    position-only f only a0 survives and equals the Gaussian smoothing of f
    at x, exposed as ``smoothing_factor``.
    """

    a0: complex
    a1: complex
    a2: complex
    diagonal: bool = True

    @property
    def delta_order(self) -> int:
        if self.a2 != 0.0:
            return 2
        return 1 if self.a1 != 0.0 else 0

    @property
    def smoothing_factor(self) -> complex:
        if self.delta_order > 0:
            raise UnsupportedMomentumDependence(
                "kernel carries delta-derivative terms; no pure smoothing factor"
            )
        return self.a0


def _spot_check_growth(f: ClassicalFunction, coords, mid_mask, edge_mask):
    """Cheap falsification of the declared growth on the actual grid."""
    vals = np.abs(np.asarray(f(*coords), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise GrowthViolation("evaluator is non-finite inside the quadrature box")
    edge = vals[edge_mask].max() if edge_mask.any() else 0.0
    mid = vals[mid_mask].max() if mid_mask.any() else 0.0
    if f.growth == "bounded":
        allowed = 10.0 * max(mid, 1e-12)
    else:
        allowed = max(mid, 1e-12) * 2.0 ** max(f.degree, 1) * 50.0
    if edge > allowed:
        raise GrowthViolation(
            f"declared growth {f.growth!r} is violated on the grid: "
            f"edge max {edge:.3g} vs mid max {mid:.3g}"
        )


def _alpha_grid(param: SqueezeParameter, order: int):
    """Tensor alpha-plane rule with weights carrying the 1/pi measure."""
    nodes, weights = _plane_rule(param, gauss_hermite_rule(order))
    re, im = np.meshgrid(nodes, nodes, indexing="ij")
    alpha = (re + 1j * im).ravel()
    w2 = (weights[:, None] * weights[None, :]).ravel() / np.pi
    return alpha, w2


def _qp_from_alpha_grid(alpha: np.ndarray, param: SqueezeParameter):
    """Vectorised inverse of the phase-space -> coherent-label map."""
    tau, lam, hbar = param.tau, param.lam, param.hbar
    den = np.sqrt(1.0 - abs(tau) ** 2)
    u, v = alpha.real, alpha.imag
    q = lam * np.sqrt(2.0) * ((1.0 - tau.real) * u - tau.imag * v) / den
    p = (hbar / lam) * np.sqrt(2.0) * (-tau.imag * u + (1.0 + tau.real) * v) / den
    return q, p


def _quantise_onemode(f: ClassicalFunction, param: SqueezeParameter, nmax: int, order: int):
    alpha, w2 = _alpha_grid(param, order)
    q, p = _qp_from_alpha_grid(alpha, param)
    # Chebyshev radius so the rings contain axis extremes, not just corners
    r = np.maximum(np.abs(alpha.real), np.abs(alpha.imag))
    edge = r > 0.9 * r.max()
    mid = (r > 0.4 * r.max()) & (r < 0.5 * r.max())
    _spot_check_growth(f, (q, p), mid, edge)
    c = _fock_rows(alpha, param.tau, nmax) * _prefactor(alpha, param.tau)[None, :]
    fv = np.asarray(f(q, p), dtype=float)
    mat = (c * (w2 * fv)[None, :]) @ c.conj().T
    ident = (c * w2[None, :]) @ c.conj().T
    return mat, ident


def _quantise_twomode(f: ClassicalFunction, params: NonSepParams, nmax: int):
    coords_seen = {}

    def wrapped(q1, q2, p1, p2):
        coords_seen["c"] = (q1, q2, p1, p2)
        return f(q1, q2, p1, p2)

    mat, ident = _quantise_field(params, wrapped, nmax, qorder=38, porder=32, nsig=8.5)
    q1, q2, p1, p2 = coords_seen["c"]
    r = np.max(np.abs(np.stack([q1, q2, p1, p2])), axis=0)
    edge = r > 0.9 * r.max()
    mid = (r > 0.4 * r.max()) & (r < 0.5 * r.max())
    _spot_check_growth(f, (q1, q2, p1, p2), mid, edge)
    return mat, ident


def _family(family):
    if isinstance(family, SqueezeParameter):
        return family, "one-mode", (
            f"squeezed-onemode(tau={family.tau:.6g}, lam={family.lam:.6g}, "
            f"hbar={family.hbar:.6g})"
        )
    if isinstance(family, TwoModeParams):
        family = NonSepParams(family, 0.0)
    if isinstance(family, NonSepParams):
        return family, "two-mode", (
            f"squeezed-nonsep(tau1={family.tau1:.6g}, tau2={family.tau2:.6g}, "
            f"phi={family.phi:.6g}, lam1={family.lam1:.6g}, lam2={family.lam2:.6g}, "
            f"hbar={family.hbar:.6g})"
        )
    raise ConfigError(f"unsupported state family {type(family).__name__}")


def quantise(f, family, nmax: int, order: int = 140) -> QuantisedOperator:
    """Operator of f over the family, in the truncated number basis.

    One-mode families integrate on a scaled Gauss-Hermite tensor grid of the
    given order in the coherent-label plane; two-mode families use the 4D
    phase-space engine with its own calibrated orders (``order`` is ignored).
    The report carries the identity deviation measured on the very same
    grid, so a caller can tell quadrature error from genuine operator
    structure.
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    fam, arity, tag = _family(family)
    cf = _as_classical(f, arity)
    if arity == "one-mode":
        mat, ident = _quantise_onemode(cf, fam, nmax, order)
        dim = nmax + 1
    else:
        mat, ident = _quantise_twomode(cf, fam, nmax)
        dim = (nmax + 1) ** 2
    report = QuadratureReport(
        identity_deviation=float(np.max(np.abs(ident - np.eye(dim)))),
        hermiticity_defect=float(np.max(np.abs(mat - mat.conj().T)) / 2.0),
    )
    return QuantisedOperator(
        basis=nmax, matrix=TruncatedOperator(dim, mat), family_tag=tag,
        quadrature_report=report,
    )


def symmetrisation_constant(param: SqueezeParameter) -> float:
    """Coefficient replacing the symmetrised-product constant for complex tau.

    The quantisation of qp is (xp + px)/2 + hbar * this * identity; it
    vanishes exactly for real squeezing, recovering the usual rule.
    """
    s = param.widths().sigma_q_sq
    return float(-s.imag / (2.0 * s.real))


def _p_components(f: ClassicalFunction, q: np.ndarray, pscale: float):
    """Split f(q, p) = f0 + f1 p + f2 p^2 pointwise; refuse higher degrees."""
    zero = np.zeros_like(q)
    f0 = np.asarray(f(q, zero), dtype=float)
    fp = np.asarray(f(q, zero + pscale), dtype=float)
    fm = np.asarray(f(q, zero - pscale), dtype=float)
    f1 = (fp - fm) / (2.0 * pscale)
    f2 = (fp + fm - 2.0 * f0) / (2.0 * pscale**2)
    probe = np.asarray(f(q, zero + 2.0 * pscale), dtype=float)
    model = f0 + 2.0 * pscale * f1 + 4.0 * pscale**2 * f2
    scale = np.max(np.abs([f0, fp, fm, probe])) + 1.0
    if np.max(np.abs(probe - model)) > 1e-8 * scale:
        raise UnsupportedMomentumDependence(
            "momentum dependence is not polynomial of degree <= 2"
        )
    return f0, f1, f2


def kernel_eval(f, family, x: float, xp: float | None = None, order: int = 80) -> KernelAction:
    """Diagonal kernel of the quantised f at position x.

    The optional second position is accepted for interface symmetry but the
    kernel of every admissible f is a distribution on x = x'; what is
    returned is its action on test functions (see KernelAction).  Momentum
    dependence beyond quadratic is refused; two-mode families support
    position-only functions, evaluated at x = (x1, x2).
    """
    fam, arity, _ = _family(family)
    cf = _as_classical(f, arity)
    rule = gauss_hermite_rule(order)
    if arity == "two-mode":
        x = np.asarray(x, dtype=float)
        if x.shape != (2,):
            raise ConfigError("two-mode kernel point must be a pair (x1, x2)")
        d1, d2, ell = _quad_coefficients(fam.tau1, fam.tau2, fam.phi)
        l1, l2 = fam.lam1, fam.lam2
        m = 2.0 * np.array(
            [
                [2.0 * d1.real / l1**2, ell.real / (l1 * l2)],
                [ell.real / (l1 * l2), 2.0 * d2.real / l2**2],
            ]
        )
        w, vecs = np.linalg.eigh(m)
        t1, t2 = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = (
            np.stack(
                [t1.ravel() * np.sqrt(2.0 / w[0]), t2.ravel() * np.sqrt(2.0 / w[1])],
                axis=1,
            )
            @ vecs.T
            + x
        )
        zero = np.zeros(pts.shape[0])
        probe = np.asarray(cf(pts[:, 0], pts[:, 1], zero + 0.37, zero - 0.61), dtype=float)
        base = np.asarray(cf(pts[:, 0], pts[:, 1], zero, zero), dtype=float)
        if np.max(np.abs(probe - base)) > 1e-12 * (np.max(np.abs(base)) + 1.0):
            raise UnsupportedMomentumDependence(
                "two-mode kernels support position-only functions"
            )
        wts = (rule.weights[:, None] * rule.weights[None, :]).ravel()
        a0 = complex(np.sum(wts * base) / np.pi)
        return KernelAction(a0, 0.0, 0.0)

    lam, hbar, tau = fam.lam, fam.hbar, fam.tau
    q1 = fam.widths().sigma_q_sq / lam**2
    s = 1.0 / np.sqrt(2.0 * q1.real)
    qn = float(x) + np.sqrt(2.0) * s * rule.nodes
    zn = np.sqrt(2.0) * rule.nodes
    wts = rule.weights / np.sqrt(np.pi)
    f0, f1, f2 = _p_components(cf, qn, pscale=hbar / lam)
    q1c = np.conj(q1)
    e = lambda vals: complex(np.sum(wts * vals))
    a0 = e(f0)
    a1 = 0.0 + 0.0j
    a2 = 0.0 + 0.0j
    if np.max(np.abs(f1)) > 0.0:
        a1 += -1j * hbar * e(f1)
        a0 += -1j * hbar * q1c * e(f1 * s * zn)
    if np.max(np.abs(f2)) > 0.0:
        a2 += -(hbar**2) * e(f2)
        a1 += -2.0 * hbar**2 * q1c * e(f2 * s * zn)
        a0 += -(hbar**2) * e(f2 * (q1c**2 * (s * zn) ** 2 - q1c))
    return KernelAction(complex(a0), complex(a1), complex(a2))


def dirac_correspondence_check(family, nmax: int, order: int = 140) -> float:
    """Max deviation of [A_q, A_p] from i hbar on the interior block.

    The two operators are built at twice the requested truncation so their
    product is exact on the reported block; what remains is quadrature error
    plus the family's genuine commutator content.
    """
    fam, arity, _ = _family(family)
    if arity != "one-mode":
        raise ConfigError(
            "commutator certification is one-mode; use quantise directly for "
            "two-mode families"
        )
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    big = 2 * nmax + 2
    aq = quantise(ClassicalFunction(lambda q, p: q), fam, big, order=order)
    ap = quantise(ClassicalFunction(lambda q, p: p), fam, big, order=order)
    comm = aq.matrix.entries @ ap.matrix.entries - ap.matrix.entries @ aq.matrix.entries
    blk = comm[: nmax + 1, : nmax + 1]
    return float(np.max(np.abs(blk - 1j * fam.hbar * np.eye(nmax + 1))))
