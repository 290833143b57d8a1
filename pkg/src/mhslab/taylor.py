"""Time-Taylor series for the first-order system in ``(u1, u2) = (u, u_x)``:

    d/dt u1 = F1 = -(1/(p+1)) (u1^{p+1})_x + (p/2) D^{-1}(u1^{p-1} u2^2)
    d/dt u2 = F2 = -(u1^p u2)_x + (p/2) u1^{p-1} u2^2

Coefficients follow from ``(j+1) a_{j+1} = [F]_j``, where ``[F]_j`` is the
j-th coefficient of F after Cauchy-product expansion of every power and
product.  Each Cauchy product applies the same dealiased spatial product
as the time steppers (see :class:`_Series`).

With ``consistent=True`` (the default) the constant mode of the local term
in F2 is removed, which is exactly ``(F1)_x``; then ``u2 = (u1)_x`` holds at
every order.  ``consistent=False`` keeps F2 as written, and ``u2`` then
drifts from ``(u1)_x`` by a constant at first order (and by more after).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, PreconditionError
from .scales import ScaleParams, sobolev_norm
from .spectral import (
    ModelParams,
    SpectralField,
    antiderivative,
    dealias,
    dealias_cutoff,
    derivative,
)


@dataclass
class TaylorSeries:
    params: ModelParams
    coeffs_u1: list
    coeffs_u2: list
    base_time: float = 0.0
    consistent: bool = True

    @property
    def order(self) -> int:
        return len(self.coeffs_u1) - 1


class _Series:
    """Growing Cauchy series of one product.

    With dealiasing the terms are kept as two-sided coefficient arrays on
    the retained band and multiplied by direct convolution, which equals
    the truncated pseudospectral product but keeps empty modes exactly
    zero (FFT roundoff in high modes would otherwise be amplified by one
    derivative per order).  Without dealiasing the aliased grid product is
    used, as in the time steppers.
    """

    def __init__(self, n_modes: int, dealiased: bool):
        self.fields: list = []
        self.data: list = []
        self.n = n_modes
        self.cut = dealias_cutoff(n_modes) if dealiased else None

    def push(self, f: SpectralField):
        self.fields.append(f)
        if self.cut is None:
            self.data.append(np.asarray(f.grid))
        else:
            half = f.coeffs[:self.cut + 1]
            self.data.append(np.concatenate([np.conj(half[:0:-1]), half]))

    def __getitem__(self, j):
        return self.fields[j]


def _cauchy(a: _Series, b: _Series, j: int) -> SpectralField:
    if a.cut is None:
        acc = np.zeros(a.n)
        for i in range(j + 1):
            acc += a.data[i] * b.data[j - i]
        return SpectralField.from_grid(acc)
    k = a.cut
    acc = np.zeros(4 * k + 1, dtype=np.complex128)
    for i in range(j + 1):
        acc += np.convolve(a.data[i], b.data[j - i])
    c = np.zeros(a.n // 2 + 1, dtype=np.complex128)
    c[:k + 1] = acc[2 * k:3 * k + 1]
    return SpectralField(c)


def taylor_coeffs(u0: SpectralField, params: ModelParams, J: int,
                  consistent: bool = True, base_time: float = 0.0) -> TaylorSeries:
    """Taylor coefficients of ``(u1, u2)`` up to order ``J`` about ``base_time``."""
    if J < 1:
        raise PreconditionError("order J must be at least 1")
    p, da = params.p, params.dealias
    n = u0.n_modes
    if da:
        u0 = dealias(u0)
    u1 = _Series(n, da)
    u2 = _Series(n, da)
    # pw[k] holds the series of u1^k, k = 1 .. p+1
    pw = {k: _Series(n, da) for k in range(2, p + 2)}
    pw[1] = u1
    sq = _Series(n, da)  # u2^2
    mix = _Series(n, da) if p > 1 else sq  # u1^{p-1} u2^2
    flux = _Series(n, da)  # u1^p u2

    def extend(j):
        for k in range(2, p + 2):
            pw[k].push(_cauchy(u1, pw[k - 1], j))
        sq.push(_cauchy(u2, u2, j))
        if p > 1:
            mix.push(_cauchy(pw[p - 1], sq, j))
        flux.push(_cauchy(pw[p], u2, j))

    u1.push(u0)
    u2.push(derivative(u0))
    extend(0)
    for j in range(J):
        m = mix[j]
        f1 = (0.5 * p) * antiderivative(m) - derivative(pw[p + 1][j]) / (p + 1)
        local = m.without_mean() if consistent else m
        f2 = (0.5 * p) * local - derivative(flux[j])
        u1.push(f1 / (j + 1))
        u2.push(f2 / (j + 1))
        extend(j + 1)
    return TaylorSeries(params, list(u1.fields), list(u2.fields), base_time, consistent)


def evaluate_series(series: TaylorSeries, t: float, radius: float | None = None):
    """Horner evaluation of both series at absolute time ``t``.

    Warns if ``|t - t0|`` exceeds a supplied convergence ``radius``.
    """
    tau = t - series.base_time
    if radius is not None and abs(tau) > radius:
        warnings.warn(f"|t - t0| = {abs(tau):g} exceeds the estimated radius {radius:g}",
                      RuntimeWarning, stacklevel=2)
    out = []
    for coeffs in (series.coeffs_u1, series.coeffs_u2):
        acc = coeffs[-1].coeffs.copy()
        for a in reversed(coeffs[:-1]):
            acc = acc * tau + a.coeffs
        out.append(SpectralField(acc))
    return out[0], out[1]


def coefficient_norms(series: TaylorSeries, sigma: float = 2.0) -> np.ndarray:
    return np.array([sobolev_norm(a, sigma) for a in series.coeffs_u1])


def time_radius(series: TaylorSeries, norm: ScaleParams | None = None) -> float:
    """Root-test radius ``1 / limsup ||a_j||^(1/j)``.

    ``log ||a_j||_{H^sigma}`` is fit linearly in ``j`` over ``[J/2, J]``; the
    radius is ``exp(-slope)``.  Vanishing coefficients give ``inf``.
    """
    J = series.order
    if J < 8:
        raise InsufficientDataError(f"time radius needs order J >= 8, got {J}")
    sigma = norm.sigma if norm is not None else 2.0
    norms = coefficient_norms(series, sigma)
    ref = max(norms[0], 1e-300)
    j = np.arange(J // 2, J + 1)
    vals = norms[J // 2:]
    keep = vals > 1e-15 * ref
    if keep.sum() == 0:
        return math.inf
    if keep.sum() < 3:
        raise InsufficientDataError("too few nonzero coefficients in the fit window")
    slope, _ = np.polyfit(j[keep], np.log(vals[keep]), 1)
    return float(math.exp(-slope))


def _defects(series: TaylorSeries):
    for a1, a2 in zip(series.coeffs_u1, series.coeffs_u2):
        yield a2 - derivative(a1)


def consistency_defect(series: TaylorSeries) -> list:
    """Sup norm of the nonconstant part of ``a2_j - (a1_j)_x`` for each j."""
    return [d.without_mean().sup_norm() for d in _defects(series)]


def constant_defect(series: TaylorSeries) -> list:
    """Constant part of ``a2_j - (a1_j)_x`` for each j."""
    return [d.mean for d in _defects(series)]


def export_jsonl(series: TaylorSeries, fh) -> None:
    """One line per coefficient: ``{"j", "which", "coeffs"}``."""
    for which, coeffs in (("u1", series.coeffs_u1), ("u2", series.coeffs_u2)):
        for j, a in enumerate(coeffs):
            row = {"j": j, "which": which,
                   "coeffs": [[float(c.real), float(c.imag)] for c in a.coeffs]}
            fh.write(json.dumps(row) + "\n")


@dataclass
class TaylorRun:
    """Piecewise series solution, re-expanded every ``segment`` time units."""

    params: ModelParams
    order: int
    segment: float
    segments: list = field(default_factory=list)

    def at(self, t: float) -> SpectralField:
        for s in self.segments:
            if s.base_time - 1e-12 <= t <= s.base_time + self.segment + 1e-12:
                return evaluate_series(s, t)[0]
        raise ValueError(f"t = {t} is outside the integrated range")


def integrate_taylor(u0: SpectralField, params: ModelParams, t_end: float,
                     order: int = 16, segment: float = 0.01, t0: float = 0.0) -> TaylorRun:
    """Chain series of the given order, each re-expanded from the previous
    segment's endpoint value (and its exact derivative)."""
    run = TaylorRun(params, order, segment)
    u, t = u0, t0
    n_seg = max(1, math.ceil((t_end - t0) / segment - 1e-9))
    for i in range(n_seg):
        s = taylor_coeffs(u, params, order, base_time=t)
        run.segments.append(s)
        t_next = t0 + (i + 1) * segment
        u = evaluate_series(s, t_next)[0]
        t = t_next
    return run
