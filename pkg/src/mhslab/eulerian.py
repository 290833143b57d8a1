"""Direct integration of the nonlocal equation

    u_t + u^p u_x = (p/2) D^{-1}( u^{p-1} u_x^2 )

where ``D^{-1}`` is the mean-projected antiderivative, so the spatial mean
of ``u`` is conserved.  Classical RK4 with optional step-doubling control,
per-record diagnostics, and wave-breaking estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CFLError, InsufficientDataError
from .scales import ScaleParams, drop_roundoff, fit_radius, scale_norm
from .spectral import (
    ModelParams,
    SpectralField,
    antiderivative,
    dealias_cutoff,
    derivative,
    inner,
    multiply,
    power,
)

SLOPE_HARD_STOP = 1e6
RESOLUTION_LOST = 1e-3  # spectral tail ratio at which the run is stopped
RESOLVED_TAIL = 1e-8  # tail ratio still trusted by the breaking-time fit
RADIUS_MIN_MODES = 4

# terminal codes
BLOWUP = "blowup"
NONFINITE = "nonfinite"
UNRESOLVED = "unresolved"
BREAKDOWN = "breakdown"


@dataclass
class RunRecord:
    t: float
    mean_u: float
    energy: float
    sup_u: float
    sup_abs_ux: float
    radius_est: float
    scale_norm: float
    dt_used: float
    min_gamma_x: float | None = None


CSV_COLUMNS = ["t", "mean_u", "energy", "sup_u", "sup_abs_ux", "radius_est", "scale_norm", "dt_used"]


def energy(u: SpectralField) -> float:
    """``int (u_x)^2 dx`` by Parseval."""
    ux = derivative(u)
    return inner(ux, ux)


def spectral_tail(u: SpectralField) -> float:
    """Largest coefficient in the top tenth of the retained band, relative
    to the largest nonconstant coefficient."""
    k = dealias_cutoff(u.n_modes)
    a = np.abs(u.coeffs[1:k + 1])
    top = a.max()
    if top == 0.0:
        return 0.0
    return float(a[int(0.9 * k):].max() / top)


def make_record(u: SpectralField, t: float, dt_used: float,
                scale_params: ScaleParams | None = None, min_gamma_x=None) -> RunRecord:
    scale_params = scale_params or ScaleParams()
    ux = derivative(u)
    try:
        radius = fit_radius(u, min_modes=RADIUS_MIN_MODES)
    except InsufficientDataError:
        radius = math.nan
    return RunRecord(
        t=t,
        mean_u=u.mean,
        energy=inner(ux, ux),
        sup_u=u.sup_norm(),
        sup_abs_ux=ux.sup_norm(),
        radius_est=radius,
        scale_norm=scale_norm(drop_roundoff(u.without_mean()), scale_params).value,
        dt_used=dt_used,
        min_gamma_x=min_gamma_x,
    )


def nonlocal_term(u: SpectralField, params: ModelParams) -> SpectralField:
    """``(p/2) D^{-1}(u^{p-1} u_x^2)``."""
    p, da = params.p, params.dealias
    ux = derivative(u)
    h = multiply(ux, ux, da)
    if p > 1:
        h = multiply(power(u, p - 1, da), h, da)
    return (0.5 * p) * antiderivative(h)


def rhs_euler(u: SpectralField, params: ModelParams) -> SpectralField:
    transport = multiply(power(u, params.p, params.dealias), derivative(u), params.dealias)
    return nonlocal_term(u, params) - transport


def cfl_limit(u: SpectralField, p: int) -> float:
    return 0.5 / max(1.0, u.sup_norm() ** p * 2.0 * math.pi * u.n_modes)


def _rk4(u: SpectralField, dt: float, params: ModelParams) -> SpectralField:
    k1 = rhs_euler(u, params)
    k2 = rhs_euler(u + (0.5 * dt) * k1, params)
    k3 = rhs_euler(u + (0.5 * dt) * k2, params)
    k4 = rhs_euler(u + dt * k3, params)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class EulerianRun:
    """Single-owner mutable run state.

    ``trace`` holds ``(t, sup|u_x|, spectral tail)`` after every step and is
    what the breaking-time fit consumes; ``history`` holds the sparser
    :class:`RunRecord` rows.
    """

    u: SpectralField
    params: ModelParams
    dt: float
    t: float = 0.0
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    code: str | None = None
    steps: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def step_rk4(run: EulerianRun, dt: float | None = None) -> EulerianRun:
    """Advance ``run`` in place by one classical RK4 step."""
    dt = run.dt if dt is None else dt
    limit = cfl_limit(run.u, run.params.p)
    if dt > limit:
        raise CFLError(f"dt = {dt:g} exceeds the advective limit {limit:.3g}", limit)
    run.u = _rk4(run.u, dt, run.params)
    run.t += dt
    run.steps += 1
    return run


def _check_state(run: EulerianRun):
    g = run.u.grid
    if not np.all(np.isfinite(g)):
        return NONFINITE, math.nan, math.nan
    sup_ux = derivative(run.u).sup_norm()
    tail = spectral_tail(run.u)
    run.trace.append((run.t, sup_ux, tail))
    if sup_ux > SLOPE_HARD_STOP:
        return BLOWUP, sup_ux, tail
    if tail > RESOLUTION_LOST:
        return UNRESOLVED, sup_ux, tail
    return None, sup_ux, tail


def integrate(run: EulerianRun, t_end: float, record_every: int = 1,
              scale_params: ScaleParams | None = None, adaptive: bool = False,
              tol: float = 1e-10, on_record=None) -> EulerianRun:
    """Integrate to ``t_end``, recording every ``record_every`` steps.

    The final step is shortened to land on ``t_end`` exactly.  On breakdown
    the run stops with ``run.code`` set and the partial history kept.
    With ``adaptive`` the step is controlled by step doubling against the
    local tolerance ``tol`` (sup norm).  ``on_record(run)`` is called after
    every appended record.
    """
    def rec(h):
        run.history.append(make_record(run.u, run.t, h, scale_params))
        if on_record is not None:
            on_record(run)

    if not run.history:
        rec(0.0)
    dt = run.dt
    since = 0
    while run.t < t_end - 1e-12 * max(1.0, abs(t_end)):
        h = min(dt, t_end - run.t)
        if adaptive:
            h = _adaptive_step(run, h, tol)
            dt = run.dt
        else:
            step_rk4(run, h)
        since += 1
        code, _, _ = _check_state(run)
        if code is not None:
            run.code = code
            if code != NONFINITE:
                rec(h)
            break
        if since >= record_every or run.t >= t_end - 1e-12 * max(1.0, abs(t_end)):
            rec(h)
            since = 0
    return run


def _adaptive_step(run: EulerianRun, h: float, tol: float) -> float:
    while True:
        full = _rk4(run.u, h, run.params)
        half = _rk4(_rk4(run.u, 0.5 * h, run.params), 0.5 * h, run.params)
        err = float(np.max(np.abs(half.grid - full.grid))) / 15.0
        factor = 0.9 * (tol / err) ** 0.2 if err > 0 else 2.0
        if err <= tol:
            limit = cfl_limit(half, run.params.p)
            run.u = half
            run.t += h
            run.steps += 1
            run.dt = min(h * min(2.0, max(0.2, factor)), limit)
            return h
        h *= max(0.2, factor)


def predict_breaking_time(u0: SpectralField, params: ModelParams,
                          horizon: float = 5.0, dt: float = 1e-3):
    """Breaking time of the classical solution, or ``None``.

    For ``p = 1`` the slope ``v = u_x`` along a characteristic obeys
    ``dv/dt = -(v^2 + K)/2`` with ``K = int u_x^2`` conserved, which blows up
    at ``T* = (2/sqrt K)(pi/2 + arctan(min u0' / sqrt K))``.  For ``p >= 2``
    the flow map is integrated until ``min gamma_x`` drops below ``1e-3``.
    """
    K = energy(u0)
    if K <= 1e-28:
        return None
    if params.p == 1:
        m = _min_slope(u0)
        rk = math.sqrt(K)
        return (2.0 / rk) * (0.5 * math.pi + math.atan(m / rk))
    from .lagrangian import LagrangianRun, LagrangianState, integrate_lagrangian

    run = LagrangianRun(LagrangianState.initial(u0, params), dt=dt)
    integrate_lagrangian(run, horizon, record_every=10 ** 9, record=False)
    return run.state.t if run.code is not None else None


def _min_slope(u: SpectralField) -> float:
    ux = derivative(u)
    n = 8 * u.n_modes
    x = np.arange(n) / n
    vals = ux.evaluate(x)
    j = int(np.argmin(vals))
    h = 1.0 / n
    res = minimize_scalar(lambda y: float(ux.evaluate(np.array([y]))[0]),
                          bounds=(x[j] - h, x[j] + h), method="bounded",
                          options={"xatol": 1e-13})
    return min(float(res.fun), float(vals[j]))


@dataclass
class BreakingFit:
    t_star: float
    window: tuple
    n_points: int
    max_resolved_slope: float


def estimate_breaking_time(trace, resolved_tail: float = RESOLVED_TAIL,
                           window_fraction: float = 0.5) -> BreakingFit | None:
    """Extrapolate ``1/sup|u_x|`` linearly to zero.

    Only steps whose spectral tail is below ``resolved_tail`` are used, and
    of those only the final window where ``sup|u_x|`` exceeds
    ``window_fraction`` times its largest resolved value.
    """
    arr = np.asarray(trace, dtype=np.float64)
    if arr.size == 0:
        return None
    ok = np.isfinite(arr[:, 1]) & (arr[:, 2] < resolved_tail) & (arr[:, 1] > 0)
    if ok.sum() < 5:
        return None
    # resolved prefix only: stop at the first unresolved step
    first_bad = np.argmin(ok) if not ok.all() else arr.shape[0]
    arr = arr[:first_bad]
    smax = arr[:, 1].max()
    w = arr[:, 1] >= window_fraction * smax
    if w.sum() < 5:
        return None
    slope, icpt = np.polyfit(arr[w, 0], 1.0 / arr[w, 1], 1)
    if slope >= 0:
        return None
    return BreakingFit(float(-icpt / slope), (float(arr[w, 0][0]), float(arr[w, 0][-1])),
                       int(w.sum()), float(smax))
