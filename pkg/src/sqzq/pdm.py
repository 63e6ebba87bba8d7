"""Constrained oscillators with position-dependent mass and their smoothed
semiclassical dynamics.

The classical model confines each coordinate to (-1/Lambda_j, 1/Lambda_j) by
letting the mass m0/(1 - Lambda_j^2 q_j^2) diverge at the walls.  The
substitution theta_j = arcsin(Lambda_j q_j) turns each mode into the pendulum
theta'' = -(Vbar_j/m0) sin(2 theta_j), which is smooth through wall touches
and keeps |q_j| <= 1/Lambda_j exactly, so classical trajectories are
integrated in the angle variables and mapped back.  Without an external
potential the angles advance uniformly and each coordinate oscillates at
frequency Lambda_j v0_j.

Quantisation smears the hard walls: observables are replaced by their
Gaussian-smoothed portraits, and the box indicator acquires erfc-shaped
shoulders of width lambda_j Delta_p_j per mode.  The smeared mass portrait
stays finite and strictly positive everywhere, the confining walls become a
finite potential barrier, and a sufficiently energetic state escapes.  The
semiclassical equations of motion are integrated in (q, v) form: the
canonical momentum p_j = v_j / A_j grows like exp(z^2) beyond the walls and
makes the equivalent (q, p) system needlessly stiff during an escape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .errors import ConfigError, NonFiniteState, OutsideBox
from .numerics import OdeProblem, solve_ode
from .sepstates import TwoModeParams

__all__ = [
    "PdmModel",
    "SemiclassicalModel",
    "InitialState",
    "Trajectory",
    "classical_exact",
    "classical_energy",
    "classical_integrate",
    "portrait_chi",
    "portrait_q2chi",
    "regularised_mass",
    "regularised_mass_gradient",
    "effective_potential",
    "effective_potential_gradient",
    "semiclassical_energy",
    "initial_momenta",
    "semiclassical_integrate",
    "forbidden_region",
    "Preset",
    "PRESETS",
    "run_preset",
]

_CLASSIFICATIONS = ("bounded", "escaped", "singular-stop")

# Escaped means: outside the classical rectangle with the barrier already
# far below the conserved energy, or unambiguously far away.
_ESCAPE_POTENTIAL_FRACTION = 0.01
_FAR_AWAY_FACTOR = 2.0


@dataclass(frozen=True)
class PdmModel:
    """Two uncoupled modes with mass m0/(1 - Lambda_j^2 q_j^2).

    The mass divergence confines mode j to (-1/Lambda_j, 1/Lambda_j); vbar_j
    is the strength of an additional external potential vbar_j q_j^2 (no
    half: the conventional spring constant is 2 vbar_j).
    """

    m0: float
    lambda1: float
    lambda2: float
    vbar1: float = 0.0
    vbar2: float = 0.0

    def __post_init__(self):
        vals = (self.m0, self.lambda1, self.lambda2, self.vbar1, self.vbar2)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigError("model parameters must be finite")
        if not self.m0 > 0:
            raise ConfigError("m0 must be positive")
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ConfigError("inverse lengths lambda1, lambda2 must be positive")
        if self.vbar1 < 0 or self.vbar2 < 0:
            raise ConfigError("oscillator strengths vbar1, vbar2 must be nonnegative")

    def inverse_length(self, j: int) -> float:
        _require_mode(j)
        return self.lambda1 if j == 1 else self.lambda2

    def strength(self, j: int) -> float:
        _require_mode(j)
        return self.vbar1 if j == 1 else self.vbar2

    def wall(self, j: int) -> float:
        """Half-width 1/Lambda_j of the confining box in mode j."""
        return 1.0 / self.inverse_length(j)

    @property
    def box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((-self.wall(1), self.wall(1)), (-self.wall(2), self.wall(2)))

    def mass(self, j: int, q):
        """m0/(1 - Lambda_j^2 q^2); diverges at |q| = 1/Lambda_j."""
        lam = self.inverse_length(j)
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.m0 / (1.0 - (lam * q) ** 2)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SemiclassicalModel:
    """A PdmModel paired with the squeezing parameters of the evolving state.

    Dynamics are only derived for real squeezing (gamma_j = 0); complex tau
    is rejected here, although the portrait functions accept it.
    """

    model: PdmModel
    modes: TwoModeParams

    def __post_init__(self):
        for j in (1, 2):
            if self.modes.mode(j).tau.imag != 0.0:
                raise ConfigError(
                    "semiclassical dynamics require real tau (gamma = 0) in both modes"
                )

    @property
    def hbar(self) -> float:
        return self.modes.hbar

    def smoothing(self, j: int) -> float:
        """Gaussian half-width lambda_j Delta_p_j of the wall shoulders."""
        par = self.modes.mode(j)
        return par.lam * np.sqrt(par.widths().delta_p_sq)

    def kinetic_coeff(self, j: int) -> float:
        """hbar^2 / (2 lambda_j^2 Delta_p_j^2), the mass-portrait weight in V_eff."""
        return self.hbar**2 / (2.0 * self.smoothing(j) ** 2)


@dataclass(frozen=True)
class InitialState:
    """Initial positions and velocities (not momenta) of both modes."""

    q1: float
    q2: float
    v1: float
    v2: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.q1, self.q2, self.v1, self.v2)):
            raise ValueError("initial state must be finite")

    def q(self, j: int) -> float:
        _require_mode(j)
        return self.q1 if j == 1 else self.q2

    def v(self, j: int) -> float:
        _require_mode(j)
        return self.v1 if j == 1 else self.v2


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory (t, q, p, E) plus an outcome classification.

    ``q`` and ``p`` have shape (n, 2).  ``classification`` is "bounded",
    "escaped" or "singular-stop"; the last marks a run whose integrator
    stalled, with the samples truncated at the stall.  ``escape_time`` is the
    first sample time at which the escape criterion held, None otherwise.
    Momenta may overflow at exact wall touches where the classical mass
    diverges; positions and energies are finite throughout.
    """

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    classification: str
    escape_time: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        n = t.shape[0] if t.ndim == 1 else -1
        if n < 2:
            raise ValueError("trajectory needs at least two time samples")
        if np.asarray(self.q).shape != (n, 2) or np.asarray(self.p).shape != (n, 2):
            raise ValueError("q and p must have shape (len(t), 2)")
        if np.asarray(self.energy).shape != (n,):
            raise ValueError("energy must have shape (len(t),)")
        if not np.all(np.diff(t) > 0):
            raise ValueError("time samples must be strictly increasing")
        if self.classification not in _CLASSIFICATIONS:
            raise ValueError(f"classification must be one of {_CLASSIFICATIONS}")

    def energy_drift(self) -> float:
        """Largest |E(t) - E(0)| relative to |E(0)|."""
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))


def _require_mode(j: int) -> None:
    if j not in (1, 2):
        raise ValueError("mode index must be 1 or 2")


# ----------------------------------------------------------------------
# classical dynamics


def classical_exact(model: PdmModel, j: int, q0: float, v0: float, t):
    """Closed-form free motion of mode j: a sine of frequency Lambda_j v0.

    Only valid without external potential.  Accepts scalar or array t.
    """
    _require_mode(j)
    if model.vbar1 != 0.0 or model.vbar2 != 0.0:
        raise ConfigError("closed-form motion requires vbar1 = vbar2 = 0")
    lam = model.inverse_length(j)
    if abs(lam * q0) >= 1.0:
        raise OutsideBox(f"|Lambda q0| = {abs(lam * q0):.6g} >= 1")
    t = np.asarray(t, dtype=float)
    phase = lam * v0 * t / np.sqrt(1.0 - (lam * q0) ** 2) + np.arcsin(lam * q0)
    out = np.sin(phase) / lam
    return out[()] if out.ndim == 0 else out


def classical_energy(model: PdmModel, q, v):
    """H = sum_j m_j(q_j) v_j^2 / 2 + vbar_j q_j^2 in velocity form."""
    q = _as_points(q)
    v = _as_points(v)
    total = 0.0
    for j, k in ((1, 0), (2, 1)):
        total = total + 0.5 * model.mass(j, q[..., k]) * v[..., k] ** 2
        total = total + model.strength(j) * q[..., k] ** 2
    out = np.asarray(total)
    return out[()] if out.ndim == 0 else out


def classical_integrate(
    model: PdmModel,
    init: InitialState,
    t_span: tuple[float, float],
    *,
    samples: int = 2001,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-13,
) -> Trajectory:
    """Integrate the confined classical motion of both modes.

    Works in the angles theta_j = arcsin(Lambda_j q_j), where the motion is a
    plain pendulum and wall touches are regular interior points; the exact
    bound |q_j| <= 1/Lambda_j survives the round-trip.  The momenta in the
    returned samples are recovered as m0 thetadot_j / (Lambda_j cos theta_j)
    and overflow only if a sample lands exactly on a wall touch.
    """
    lam = np.array([model.lambda1, model.lambda2])
    vbar = np.array([model.vbar1, model.vbar2])
    q0 = np.array([init.q1, init.q2])
    v0 = np.array([init.v1, init.v2])
    if np.any(np.abs(lam * q0) >= 1.0):
        raise OutsideBox("initial position must lie strictly inside the box")

    theta0 = np.arcsin(lam * q0)
    omega0 = lam * v0 / np.cos(theta0)
    coeff = vbar / model.m0

    def rhs(t, y):
        return np.array([y[2], y[3], -coeff[0] * np.sin(2.0 * y[0]), -coeff[1] * np.sin(2.0 * y[1])])

    problem = OdeProblem(
        dimension=4,
        rhs=rhs,
        t_span=t_span,
        y0=np.array([theta0[0], theta0[1], omega0[0], omega0[1]]),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
    t_eval = np.linspace(t_span[0], t_span[1], samples)
    sol = solve_ode(problem, t_eval=t_eval, raise_on_failure=False)
    classification = "bounded"
    if sol.status == "failed":
        # cannot happen for the smooth pendulum system with finite input,
        # but a stalled run is still reported rather than silently patched
        if sol.t.size < 2:
            raise NonFiniteState(sol.message or "integration produced no usable samples")
        classification = "singular-stop"

    theta = sol.y[:, 0:2]
    omega = sol.y[:, 2:4]
    q = np.sin(theta) / lam
    with np.errstate(divide="ignore", over="ignore"):
        p = model.m0 * omega / (lam * np.cos(theta))
    # per-mode pendulum invariant, identical to p^2/2m + vbar q^2
    energy = np.sum(
        (0.5 * model.m0 * omega**2 + vbar * np.sin(theta) ** 2) / lam**2, axis=1
    )
    return Trajectory(sol.t, q, p, energy, classification)


# ----------------------------------------------------------------------
# smoothed portraits of the box observables

# For one mode with wall half-width w and smoothing s = lambda Delta_p the
# Gaussian smoothing of the box indicator chi and of q^2 chi are elementary:
#   c(q) = (erfc(z_b) - erfc(z_a)) / 2,        z_x = (q - x) / (sqrt2 s)
#   g(q) = (q^2 + s^2) c(q)
#          + s/sqrt(2 pi) ((q - w) e^{-z_a^2} - (q + w) e^{-z_b^2})
# with walls a = -w, b = +w, and derivatives
#   c'(q) = (e^{-z_a^2} - e^{-z_b^2}) / (s sqrt(2 pi))
#   g'(q) = 2 q c(q) + (w^2 + 2 s^2) c'(q).


def _mode_pieces(q, w: float, s: float):
    """c, g, c', g' for one mode; q may be any float array."""
    q = np.asarray(q, dtype=float)
    rt2s = np.sqrt(2.0) * s
    za = (q + w) / rt2s
    zb = (q - w) / rt2s
    ea = np.exp(-za * za)
    eb = np.exp(-zb * zb)
    c = 0.5 * (erfc(zb) - erfc(za))
    cp = (ea - eb) / (s * np.sqrt(2.0 * np.pi))
    g = (q * q + s * s) * c + s / np.sqrt(2.0 * np.pi) * ((q - w) * ea - (q + w) * eb)
    gp = 2.0 * q * c + (w * w + 2.0 * s * s) * cp
    return c, g, cp, gp


def _as_points(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim == 0 or q.shape[-1] != 2:
        raise ValueError("q must have shape (..., 2)")
    return q


def _mode_scales(model: PdmModel, params: TwoModeParams, j: int) -> tuple[float, float]:
    """(wall half-width, Gaussian smoothing width) of mode j."""
    par = params.mode(j)
    s = par.lam * np.sqrt(par.widths().delta_p_sq)
    return model.wall(j), s


def portrait_chi(model: PdmModel, params: TwoModeParams, q):
    """Smoothed box indicator, a product of per-mode erfc windows in (0, 1)."""
    q = _as_points(q)
    w1, s1 = _mode_scales(model, params, 1)
    w2, s2 = _mode_scales(model, params, 2)
    c1 = _mode_pieces(q[..., 0], w1, s1)[0]
    c2 = _mode_pieces(q[..., 1], w2, s2)[0]
    out = c1 * c2
    return out[()] if out.ndim == 0 else out


def portrait_q2chi(model: PdmModel, params: TwoModeParams, j: int, q):
    """Smoothed q_j^2 restricted to the box.

    In the infinite-box limit this reduces to q_j^2 + lambda_j^2 Delta_p_j^2,
    the familiar smearing shift of the square.
    """
    _require_mode(j)
    q = _as_points(q)
    wj, sj = _mode_scales(model, params, j)
    wo, so = _mode_scales(model, params, 3 - j)
    g = _mode_pieces(q[..., j - 1], wj, sj)[1]
    c_other = _mode_pieces(q[..., 2 - j], wo, so)[0]
    out = g * c_other
    return out[()] if out.ndim == 0 else out


def regularised_mass(model: PdmModel, params: TwoModeParams, q, j: int):
    """Smoothed inverse-mass factor A_j = (c_j - Lambda_j^2 g_j) c_other / m0.

    Strictly positive everywhere: inside the box it tends to
    (1 - Lambda_j^2 q_j^2)/m0, outside it decays like a Gaussian tail without
    crossing zero, so the semiclassical flow has no mass singularity.
    """
    _require_mode(j)
    q = _as_points(q)
    wj, sj = _mode_scales(model, params, j)
    wo, so = _mode_scales(model, params, 3 - j)
    lam = model.inverse_length(j)
    cj, gj, _, _ = _mode_pieces(q[..., j - 1], wj, sj)
    c_other = _mode_pieces(q[..., 2 - j], wo, so)[0]
    out = (cj - lam * lam * gj) / model.m0 * c_other
    return out[()] if out.ndim == 0 else out


def regularised_mass_gradient(model: PdmModel, params: TwoModeParams, q, j: int):
    """Closed-form (d/dq1, d/dq2) of regularised_mass, stacked along the last axis."""
    _require_mode(j)
    q = _as_points(q)
    wj, sj = _mode_scales(model, params, j)
    wo, so = _mode_scales(model, params, 3 - j)
    lam = model.inverse_length(j)
    cj, gj, cjp, gjp = _mode_pieces(q[..., j - 1], wj, sj)
    co, _, cop, _ = _mode_pieces(q[..., 2 - j], wo, so)
    mj = (cj - lam * lam * gj) / model.m0
    mjp = (cjp - lam * lam * gjp) / model.m0
    grad_own = mjp * co
    grad_other = mj * cop
    if j == 1:
        return np.stack([grad_own, grad_other], axis=-1)
    return np.stack([grad_other, grad_own], axis=-1)


def _veff_pieces(model: PdmModel, semi_params: TwoModeParams, q1, q2, kin: tuple[float, float]):
    """All per-mode pieces needed by V_eff and its gradient."""
    w1, s1 = _mode_scales(model, semi_params, 1)
    w2, s2 = _mode_scales(model, semi_params, 2)
    c1, g1, c1p, g1p = _mode_pieces(q1, w1, s1)
    c2, g2, c2p, g2p = _mode_pieces(q2, w2, s2)
    l1, l2 = model.lambda1, model.lambda2
    m1 = (c1 - l1 * l1 * g1) / model.m0
    m2 = (c2 - l2 * l2 * g2) / model.m0
    m1p = (c1p - l1 * l1 * g1p) / model.m0
    m2p = (c2p - l2 * l2 * g2p) / model.m0
    k1, k2 = kin
    veff = k1 * m1 * c2 + k2 * c1 * m2 + model.vbar1 * g1 * c2 + model.vbar2 * c1 * g2
    d1 = k1 * m1p * c2 + k2 * c1p * m2 + model.vbar1 * g1p * c2 + model.vbar2 * c1p * g2
    d2 = k1 * m1 * c2p + k2 * c1 * m2p + model.vbar1 * g1 * c2p + model.vbar2 * c1 * g2p
    return veff, d1, d2, (m1 * c2, c1 * m2, m1p * c2, m1 * c2p, c1p * m2, c1 * m2p)


def _kinetic_coeffs(params: TwoModeParams) -> tuple[float, float]:
    out = []
    for j in (1, 2):
        par = params.mode(j)
        s2 = par.lam**2 * par.widths().delta_p_sq
        out.append(params.hbar**2 / (2.0 * s2))
    return out[0], out[1]


def _require_real_tau(params: TwoModeParams) -> None:
    if params.mode1.tau.imag != 0.0 or params.mode2.tau.imag != 0.0:
        raise ConfigError("the effective potential is derived for real tau (gamma = 0)")


def effective_potential(model: PdmModel, params: TwoModeParams, q):
    """Smoothed potential: kinetic wall terms plus the external oscillators.

    V_eff = sum_j hbar^2/(2 lambda_j^2 Delta_p_j^2) A_j + vbar_j <q_j^2 chi>.
    Finite everywhere and decaying to zero far outside the box, which is what
    turns the classical hard walls into an escapable barrier.
    """
    _require_real_tau(params)
    q = _as_points(q)
    veff = _veff_pieces(model, params, q[..., 0], q[..., 1], _kinetic_coeffs(params))[0]
    out = np.asarray(veff)
    return out[()] if out.ndim == 0 else out


def effective_potential_gradient(model: PdmModel, params: TwoModeParams, q):
    """Closed-form gradient of effective_potential, stacked along the last axis."""
    _require_real_tau(params)
    q = _as_points(q)
    _, d1, d2, _ = _veff_pieces(model, params, q[..., 0], q[..., 1], _kinetic_coeffs(params))
    return np.stack([d1, d2], axis=-1)


# ----------------------------------------------------------------------
# semiclassical dynamics


def semiclassical_energy(semi: SemiclassicalModel, q, p):
    """Conserved value p1^2 A_1/2 + p2^2 A_2/2 + V_eff at (q, p)."""
    q = _as_points(q)
    p = _as_points(p)
    a1 = regularised_mass(semi.model, semi.modes, q, 1)
    a2 = regularised_mass(semi.model, semi.modes, q, 2)
    veff = effective_potential(semi.model, semi.modes, q)
    out = np.asarray(0.5 * (p[..., 0] ** 2 * a1 + p[..., 1] ** 2 * a2) + veff)
    return out[()] if out.ndim == 0 else out


def initial_momenta(semi: SemiclassicalModel, init: InitialState) -> np.ndarray:
    """Momenta conjugate to the initial velocities: p_j = v_j / A_j(q0)."""
    q0 = np.array([init.q1, init.q2])
    a1 = regularised_mass(semi.model, semi.modes, q0, 1)
    a2 = regularised_mass(semi.model, semi.modes, q0, 2)
    return np.array([init.v1 / a1, init.v2 / a2])


def _classify_escape(semi: SemiclassicalModel, t, q, veff, e0):
    """First sample, if any, at which the trajectory counts as escaped."""
    scaled = np.maximum(
        np.abs(semi.model.lambda1 * q[:, 0]), np.abs(semi.model.lambda2 * q[:, 1])
    )
    outside = scaled > 1.0
    barrier_gone = veff < _ESCAPE_POTENTIAL_FRACTION * e0
    far = np.max(np.abs(q), axis=1) > _FAR_AWAY_FACTOR * max(semi.model.wall(1), semi.model.wall(2))
    hit = (outside & barrier_gone) | far
    if not np.any(hit):
        return None
    return float(t[int(np.argmax(hit))])


def semiclassical_integrate(
    semi: SemiclassicalModel,
    init: InitialState,
    t_span: tuple[float, float],
    *,
    samples: int = 3001,
    rel_tol: float = 1e-11,
    abs_tol: float = 1e-13,
) -> Trajectory:
    """Integrate the smoothed equations of motion from positions and velocities.

    The second-order (q, v) system is used instead of the canonical (q, p)
    one: v_j = p_j A_j stays bounded during an escape while p_j explodes like
    a Gaussian reciprocal, and the (q, p) form loses six orders of magnitude
    of energy conservation crossing the wall region.  All coefficients use
    the closed-form erfc expressions and their analytic derivatives.

    The initial point may lie anywhere; escape is detected by leaving the
    classical rectangle after the barrier has dropped below a hundredth of
    the conserved energy, or by straying beyond twice the larger half-width.
    """
    model = semi.model
    kin = _kinetic_coeffs(semi.modes)

    def rhs(t, y):
        q1, q2, v1, v2 = y
        _, d1v, d2v, (a1, a2, d1a1, d2a1, d1a2, d2a2) = _veff_pieces(
            model, semi.modes, q1, q2, kin
        )
        acc1 = (
            0.5 * v1 * v1 / a1 * d1a1
            - 0.5 * a1 / (a2 * a2) * d1a2 * v2 * v2
            + v1 * v2 / a1 * d2a1
            - a1 * d1v
        )
        acc2 = (
            0.5 * v2 * v2 / a2 * d2a2
            - 0.5 * a2 / (a1 * a1) * d2a1 * v1 * v1
            + v1 * v2 / a2 * d1a2
            - a2 * d2v
        )
        return np.array([v1, v2, acc1, acc2])

    y0 = np.array([init.q1, init.q2, init.v1, init.v2])
    # so far outside that every portrait underflows to zero, the equations
    # degenerate to 0/0; fail up front instead of stalling the integrator
    with np.errstate(divide="ignore", invalid="ignore"):
        f0 = rhs(t_span[0], y0)
    if not np.all(np.isfinite(f0)):
        raise NonFiniteState(
            "equations of motion are not finite at the initial state; "
            "the portraits underflow this far outside the box"
        )
    problem = OdeProblem(
        dimension=4,
        rhs=rhs,
        t_span=t_span,
        y0=y0,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
    t_eval = np.linspace(t_span[0], t_span[1], samples)
    sol = solve_ode(problem, t_eval=t_eval, raise_on_failure=False)
    stalled = sol.status == "failed"
    if stalled and sol.t.size < 2:
        raise NonFiniteState(sol.message or "integration produced no usable samples")

    q = sol.y[:, 0:2]
    v = sol.y[:, 2:4]
    veff, _, _, (a1, a2, *_rest) = _veff_pieces(
        model, semi.modes, q[:, 0], q[:, 1], kin
    )
    p = np.stack([v[:, 0] / a1, v[:, 1] / a2], axis=-1)
    energy = 0.5 * (v[:, 0] ** 2 / a1 + v[:, 1] ** 2 / a2) + veff

    if stalled:
        return Trajectory(sol.t, q, p, energy, "singular-stop")
    escape_time = _classify_escape(semi, sol.t, q, veff, energy[0])
    if escape_time is None:
        return Trajectory(sol.t, q, p, energy, "bounded")
    return Trajectory(sol.t, q, p, energy, "escaped", escape_time)


def forbidden_region(
    semi: SemiclassicalModel,
    init: InitialState,
    q1_axis=None,
    q2_axis=None,
) -> np.ndarray:
    """Boolean grid marking V_eff(q) >= the conserved energy launched from init.

    Element [i, k] corresponds to (q1_axis[i], q2_axis[k]).  Default axes
    span 1.5 box half-widths with 201 points per side.  A trajectory
    classified bounded stays off this mask up to grid resolution.
    """
    model = semi.model
    if q1_axis is None:
        q1_axis = np.linspace(-1.5 * model.wall(1), 1.5 * model.wall(1), 201)
    if q2_axis is None:
        q2_axis = np.linspace(-1.5 * model.wall(2), 1.5 * model.wall(2), 201)
    q1_axis = np.asarray(q1_axis, dtype=float)
    q2_axis = np.asarray(q2_axis, dtype=float)

    kin = _kinetic_coeffs(semi.modes)
    w1, s1 = _mode_scales(model, semi.modes, 1)
    w2, s2 = _mode_scales(model, semi.modes, 2)
    c1, g1, _, _ = _mode_pieces(q1_axis, w1, s1)
    c2, g2, _, _ = _mode_pieces(q2_axis, w2, s2)
    m1 = (c1 - model.lambda1**2 * g1) / model.m0
    m2 = (c2 - model.lambda2**2 * g2) / model.m0
    veff = (
        kin[0] * np.outer(m1, c2)
        + kin[1] * np.outer(c1, m2)
        + model.vbar1 * np.outer(g1, c2)
        + model.vbar2 * np.outer(c1, g2)
    )

    p0 = initial_momenta(semi, init)
    e0 = semiclassical_energy(semi, np.array([init.q1, init.q2]), p0)
    return veff >= e0


# ----------------------------------------------------------------------
# canned parameter sets


@dataclass(frozen=True)
class Preset:
    """A ready-to-run scenario; modes is None for purely classical ones."""

    name: str
    kind: str  # "classical" or "semiclassical"
    model: PdmModel
    init: InitialState
    t_span: tuple[float, float]
    modes: Optional[TwoModeParams] = None
    closure_time: Optional[float] = None
    description: str = ""


def _classical_preset(name, lambda1, lambda2, vbar, m0, v0, t_span, closure, text):
    return Preset(
        name=name,
        kind="classical",
        model=PdmModel(m0=m0, lambda1=lambda1, lambda2=lambda2, vbar1=vbar, vbar2=vbar),
        init=InitialState(0.0, 0.0, v0[0], v0[1]),
        t_span=t_span,
        closure_time=closure,
        description=text,
    )


def _semiclassical_preset(name, v0, text):
    return Preset(
        name=name,
        kind="semiclassical",
        model=PdmModel(m0=5.0, lambda1=1.5, lambda2=1.0, vbar1=50.0, vbar2=50.0),
        init=InitialState(0.0, 0.0, v0[0], v0[1]),
        t_span=(0.0, 15.0),
        modes=TwoModeParams.from_tau(0.9, 0.9, lam1=0.5, lam2=0.5, hbar=1.0),
        description=text,
    )


PRESETS = {
    "fig3a": _classical_preset(
        "fig3a", 1.0, 1.0, 0.0, 1.0, (1.0, 2.0), (0.0, 65.0), 2.0 * np.pi,
        "free box motion, frequencies 1 and 2; orbit closes after 2 pi",
    ),
    "fig3b": _classical_preset(
        "fig3b", 1.5, 1.0, 0.0, 1.0, (1.0, 2.0), (0.0, 65.0), 4.0 * np.pi,
        "free box motion, frequencies 3/2 and 2; orbit closes after 4 pi",
    ),
    "fig3c": _classical_preset(
        "fig3c", 2.0, 1.0, 0.0, 1.0, (1.0, 2.0), (0.0, 65.0), np.pi,
        "free box motion, equal frequencies 2; orbit closes after pi",
    ),
    "fig4a": _classical_preset(
        "fig4a", 2.0, 1.0, 1.0, 5.0, (1.0, 2.0), (0.0, 35.0), None,
        "weak external oscillator inside the box",
    ),
    "fig4b": _classical_preset(
        "fig4b", 2.0, 1.0, 2.0, 5.0, (1.0, 2.0), (0.0, 35.0), None,
        "moderate external oscillator inside the box",
    ),
    "fig4c": _classical_preset(
        "fig4c", 2.0, 1.0, 15.0, 5.0, (1.0, 2.0), (0.0, 35.0), None,
        "strong external oscillator: libration well inside the walls",
    ),
    "fig6a": _semiclassical_preset(
        "fig6a", (0.75, 0.75),
        "semiclassical launch below both barrier tops: stays confined",
    ),
    "fig6b": _semiclassical_preset(
        "fig6b", (1.0, 1.5),
        "energetic launch aimed at the stronger barrier: stays confined",
    ),
    "fig6c": _semiclassical_preset(
        "fig6c", (1.75, 1.25),
        "energetic launch along the weaker barrier: escapes the box",
    ),
}


def run_preset(
    name: str,
    *,
    samples: Optional[int] = None,
    rel_tol: Optional[float] = None,
    abs_tol: Optional[float] = None,
) -> Trajectory:
    """Integrate a named preset and return its trajectory."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    kwargs = {}
    if samples is not None:
        kwargs["samples"] = samples
    if rel_tol is not None:
        kwargs["rel_tol"] = rel_tol
    if abs_tol is not None:
        kwargs["abs_tol"] = abs_tol
    if preset.kind == "classical":
        return classical_integrate(preset.model, preset.init, preset.t_span, **kwargs)
    semi = SemiclassicalModel(preset.model, preset.modes)
    return semiclassical_integrate(semi, preset.init, preset.t_span, **kwargs)
