"""Flow-map formulation on diffeomorphisms of the circle.

With ``gamma`` the flow of ``u^p`` and ``zeta = u o gamma`` the equation
becomes the ODE

    gamma_dot = zeta^p,      zeta_dot = F(gamma, zeta),

    F = (p/2) [D^{-1}( u^{p-1} u_x^2 )] o gamma,   u = zeta o gamma^{-1}.

F is evaluated without any composition: by the chain rule
``u^{p-1} u_x^2 o gamma = zeta^{p-1} zeta_x^2 / gamma_x^2``, and the conjugated
primitive is taken with :func:`~mhslab.spectral.pullback_antiderivative`'s
closed form.  The identity part of ``gamma`` is time invariant, so only its
periodic displacement is integrated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BreakdownError
from .eulerian import BREAKDOWN, NONFINITE, make_record
from .scales import ScaleParams
from .spectral import (
    Diffeo,
    ModelParams,
    SpectralField,
    _pullback_weighted,
    antiderivative,
    compose,
    dealias,
    derivative,
    inner,
    invert_diffeo,
    multiply,
    power,
)

BREAKDOWN_FLOOR = 1e-3

# "exact": conjugate of the mean-projected primitive (equivalent to the
# Eulerian equation).  "closed_form": antiderivative(zeta^{p-1} zeta_x^2 / gamma_x),
# the closed form that subtracts the mean in Lagrangian coordinates.
CONJUGATIONS = ("exact", "closed_form")


@dataclass
class LagrangianState:
    gamma: Diffeo
    zeta: SpectralField
    params: ModelParams
    t: float = 0.0

    @classmethod
    def initial(cls, u0: SpectralField, params: ModelParams, t: float = 0.0):
        return cls(Diffeo.identity(u0.n_modes), u0, params, t)

    @property
    def n_modes(self) -> int:
        return self.zeta.n_modes


def _grid_divide(f: SpectralField, g: np.ndarray, dealiased: bool) -> SpectralField:
    out = SpectralField.from_grid(f.grid / g)
    return dealias(out) if dealiased else out


def _source(zeta: SpectralField, params: ModelParams) -> SpectralField:
    """``zeta^{p-1} zeta_x^2``."""
    zx = derivative(zeta)
    a = multiply(zx, zx, params.dealias)
    if params.p > 1:
        a = multiply(power(zeta, params.p - 1, params.dealias), a, params.dealias)
    return a


def _weighted_primitive(w: SpectralField, gamma: Diffeo, conjugation: str) -> SpectralField:
    # w = f * gamma_x for the integrand f in Lagrangian coordinates
    if conjugation == "exact":
        return _pullback_weighted(w, gamma)
    if conjugation == "closed_form":
        return antiderivative(w)
    raise ValueError(f"conjugation must be one of {CONJUGATIONS}")


def F(state: LagrangianState, conjugation: str = "exact", floor: float = 0.0) -> SpectralField:
    gamma = state.gamma
    gamma.require_valid(floor, t=state.t)
    p = state.params.p
    w = _grid_divide(_source(state.zeta, state.params), gamma.jacobian.grid, state.params.dealias)
    return (0.5 * p) * _weighted_primitive(w, gamma, conjugation)


def F_definition_route(state: LagrangianState) -> SpectralField:
    """``F`` by literal composition: invert gamma, build ``u``, apply the
    Eulerian nonlocal operator, compose back.  Verification only."""
    from .eulerian import nonlocal_term

    u = compose(state.zeta, invert_diffeo(state.gamma))
    return compose(nonlocal_term(u, state.params), state.gamma)


def rhs_lagrangian(state: LagrangianState, conjugation: str = "exact"):
    """``(d displacement/dt, d zeta/dt) = (zeta^p, F)``."""
    return power(state.zeta, state.params.p, state.params.dealias), F(state, conjugation)


def dF_dgamma(state: LagrangianState, W: SpectralField, conjugation: str = "exact",
              constant_term: bool = False) -> SpectralField:
    """Derivative of :func:`F` along a displacement perturbation ``W``.

    Only ``gamma_x`` enters the integrand, giving the term
    ``-(p/2) D^{-1}(A W_x / gamma_x^2)`` with ``A = zeta^{p-1} zeta_x^2``.  The
    exact conjugation adds the variation of the mean-transport term and of
    the normalizing constant.  ``constant_term`` adds the constant
    ``(1/2) int W (zeta^p)_x zeta_x / gamma_x^2 dx``.
    """
    gamma = state.gamma
    gamma.require_valid(t=state.t)
    p, da = state.params.p, state.params.dealias
    jac = gamma.jacobian.grid
    a = _source(state.zeta, state.params)
    wx = derivative(W)
    dw = -SpectralField.from_grid(a.grid * wx.grid / jac ** 2)
    if da:
        dw = dealias(dw)
    if conjugation == "closed_form":
        out = antiderivative(dw)
    elif conjugation == "exact":
        w = _grid_divide(a, jac, da)
        m, dm = w.mean, dw.mean
        d = gamma.displacement
        dx_d = derivative(d)
        q = antiderivative(w) - m * d
        dq = antiderivative(dw) - dm * d - m * W
        dc = dq.mean + inner(dq, dx_d) + inner(q, wx)
        out = dq - dc
    else:
        raise ValueError(f"conjugation must be one of {CONJUGATIONS}")
    out = (0.5 * p) * out
    if constant_term:
        out = out + 0.5 * p * float(np.mean(W.grid * a.grid / jac ** 2))
    return out


def dF_dzeta(state: LagrangianState, W: SpectralField, conjugation: str = "exact") -> SpectralField:
    """Derivative of :func:`F` along ``zeta -> zeta + eps W``.

    The integrand variation is
    ``p (zeta^{p-1} W)_x zeta_x + (zeta^p)_x W_x`` divided by ``gamma_x``.
    """
    gamma = state.gamma
    gamma.require_valid(t=state.t)
    p, da = state.params.p, state.params.dealias
    z = state.zeta
    zx, wx = derivative(z), derivative(W)
    if p == 1:
        zp1w = W
        dzp = zx
    else:
        zp1 = power(z, p - 1, da)
        zp1w = multiply(zp1, W, da)
        dzp = derivative(multiply(zp1, z, da))
    b = p * multiply(derivative(zp1w), zx, da) + multiply(dzp, wx, da)
    dw = _grid_divide(b, gamma.jacobian.grid, da)
    if conjugation == "closed_form":
        return 0.5 * antiderivative(dw)
    if conjugation == "exact":
        return 0.5 * _pullback_weighted(dw, gamma)
    raise ValueError(f"conjugation must be one of {CONJUGATIONS}")


def reconstruct_u(state: LagrangianState) -> SpectralField:
    """Eulerian field ``zeta o gamma^{-1}``."""
    return compose(state.zeta, invert_diffeo(state.gamma))


@dataclass
class LagrangianRun:
    state: LagrangianState
    dt: float
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    code: str | None = None
    steps: int = 0
    conjugation: str = "exact"


def step_rk4(run: LagrangianRun, dt: float | None = None) -> LagrangianRun:
    """One RK4 step of the coupled (displacement, zeta) system, in place."""
    dt = run.dt if dt is None else dt
    s = run.state
    conj = run.conjugation

    def rhs(d, z):
        return rhs_lagrangian(LagrangianState(Diffeo(d), z, s.params, s.t), conj)

    d0, z0 = s.gamma.displacement, s.zeta
    k1 = rhs(d0, z0)
    k2 = rhs(d0 + (0.5 * dt) * k1[0], z0 + (0.5 * dt) * k1[1])
    k3 = rhs(d0 + (0.5 * dt) * k2[0], z0 + (0.5 * dt) * k2[1])
    k4 = rhs(d0 + dt * k3[0], z0 + dt * k3[1])
    d = d0 + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    z = z0 + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    run.state = LagrangianState(Diffeo(d), z, s.params, s.t + dt)
    run.steps += 1
    return run


def lagrangian_record(state: LagrangianState, dt_used: float,
                      scale_params: ScaleParams | None = None):
    u = reconstruct_u(state)
    return make_record(u, state.t, dt_used, scale_params, min_gamma_x=state.gamma.min_jacobian)


def integrate_lagrangian(run: LagrangianRun, t_end: float, record_every: int = 1,
                         scale_params: ScaleParams | None = None,
                         floor: float = BREAKDOWN_FLOOR, record: bool = True,
                         on_record=None) -> LagrangianRun:
    """RK4 to ``t_end``; stops with code ``"breakdown"`` once
    ``min gamma_x <= floor``.  ``trace`` gets ``(t, min gamma_x)`` every step."""
    def rec(h):
        run.history.append(lagrangian_record(run.state, h, scale_params))
        if on_record is not None:
            on_record(run)

    if record and not run.history:
        rec(0.0)
    since = 0
    eps = 1e-12 * max(1.0, abs(t_end))
    while run.state.t < t_end - eps:
        h = min(run.dt, t_end - run.state.t)
        try:
            step_rk4(run, h)
        except BreakdownError:
            run.code = BREAKDOWN
            break
        since += 1
        s = run.state
        mj = s.gamma.min_jacobian
        run.trace.append((s.t, mj))
        if not (np.all(np.isfinite(s.zeta.grid)) and math.isfinite(mj)):
            run.code = NONFINITE
            break
        if mj <= floor:
            run.code = BREAKDOWN
            if record:
                try:
                    rec(h)
                except BreakdownError:
                    pass
            break
        if record and (since >= record_every or s.t >= t_end - eps):
            rec(h)
            since = 0
    return run
