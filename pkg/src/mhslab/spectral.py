"""Fourier pseudospectral primitives on the unit circle T = R/Z.

A real periodic field is stored by its normalized Fourier coefficients
``f_hat[n]`` for ``n = 0 .. N/2`` (the negative modes follow from Hermitian
symmetry), with the convention

    f(x) = sum_n f_hat[n] exp(2 pi i n x),   n = -N/2+1 .. N/2,

sampled on the uniform grid ``x_j = j/N``.  The Nyquist mode ``n = N/2`` is
treated as ``f_hat[N/2] cos(pi N x)``; it lies in the kernel of both
:func:`derivative` and :func:`antiderivative`.

Everything here is a pure function of its arguments.  Fields are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BreakdownError, PreconditionError, SizeMismatchError

TWO_PI = 2.0 * np.pi


def grid_points(n_modes: int) -> np.ndarray:
    return np.arange(n_modes) / n_modes


def wavenumbers(n_modes: int) -> np.ndarray:
    """Nonnegative wavenumbers ``0 .. N/2`` matching the rfft layout."""
    return np.arange(n_modes // 2 + 1)


def dealias_cutoff(n_modes: int) -> int:
    """Largest retained wavenumber under the 2/3 rule."""
    return n_modes // 3


class SpectralField:
    """Real periodic function represented by its Fourier coefficients.

    Parameters
    ----------
    coeffs : array_like of complex, length N/2 + 1
        Coefficients for ``n = 0 .. N/2``.  The imaginary parts of the mean
        and Nyquist entries are discarded so the field is real.
    """

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 2:
            raise PreconditionError("coefficient array must be 1-D with at least 2 entries")
        c[0] = c[0].real
        c[-1] = c[-1].real
        c.setflags(write=False)
        self.coeffs = c
        self.n_modes = 2 * (c.size - 1)

    # construction -------------------------------------------------------

    @classmethod
    def from_grid(cls, values) -> "SpectralField":
        v = np.asarray(values, dtype=np.float64)
        n = v.size
        if n < 2 or n % 2:
            raise PreconditionError(f"grid size must be a positive even integer, got {n}")
        return cls(np.fft.rfft(v) / n)

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes // 2 + 1, dtype=np.complex128))

    @classmethod
    def constant(cls, value: float, n_modes: int) -> "SpectralField":
        c = np.zeros(n_modes // 2 + 1, dtype=np.complex128)
        c[0] = value
        return cls(c)

    @classmethod
    def from_function(cls, fn, n_modes: int) -> "SpectralField":
        """Sample ``fn`` (vectorized over x in [0, 1)) on the grid."""
        return cls.from_grid(fn(grid_points(n_modes)))

    # views --------------------------------------------------------------

    @cached_property
    def grid(self) -> np.ndarray:
        g = np.fft.irfft(self.coeffs * self.n_modes, n=self.n_modes)
        g.setflags(write=False)
        return g

    @property
    def mean(self) -> float:
        return float(self.coeffs[0].real)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.grid)))

    def without_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[0] = 0.0
        return SpectralField(c)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points.

        Direct summation, O(N) per point.
        """
        y = np.asarray(points, dtype=np.float64)
        shape = y.shape
        y = y.ravel()
        half = self.n_modes // 2
        n = np.arange(1, half)
        phase = np.exp(1j * TWO_PI * np.outer(y, n))
        vals = self.coeffs[0].real + 2.0 * (phase @ self.coeffs[1:half]).real
        vals += self.coeffs[half].real * np.cos(np.pi * self.n_modes * y)
        return vals.reshape(shape)

    # arithmetic ---------------------------------------------------------

    def _check(self, other: "SpectralField") -> None:
        if other.n_modes != self.n_modes:
            raise SizeMismatchError(
                f"grid sizes differ: {self.n_modes} vs {other.n_modes}"
            )

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return SpectralField(c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.coeffs - other.coeffs)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return SpectralField(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise TypeError("use multiply() for field products")
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.coeffs / scalar)

    def __repr__(self):
        return f"SpectralField(n_modes={self.n_modes}, mean={self.mean:.6g})"


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity exponent ``p`` and the 2/3-rule toggle."""

    p: int = 1
    dealias: bool = True

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise PreconditionError(f"p must be a positive integer, got {self.p!r}")


def sup_distance(f: SpectralField, g: SpectralField) -> float:
    f._check(g)
    return float(np.max(np.abs(f.grid - g.grid)))


def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product on T computed from coefficients (Parseval)."""
    f._check(g)
    a, b = f.coeffs, g.coeffs
    half = f.n_modes // 2
    s = (a[0] * b[0].conjugate()).real
    s += 2.0 * np.sum((a[1:half] * b[1:half].conjugate()).real)
    s += 0.5 * (a[half] * b[half].conjugate()).real
    return float(s)


def truncate(f: SpectralField, cutoff: int) -> SpectralField:
    """Zero every mode with ``|n| > cutoff``."""
    c = f.coeffs.copy()
    c[cutoff + 1:] = 0.0
    return SpectralField(c)


def dealias(f: SpectralField) -> SpectralField:
    return truncate(f, dealias_cutoff(f.n_modes))


def derivative(f: SpectralField) -> SpectralField:
    n = wavenumbers(f.n_modes)
    c = f.coeffs * (1j * TWO_PI * n)
    c[-1] = 0.0
    return SpectralField(c)


def antiderivative(f: SpectralField) -> SpectralField:
    """Zero-mean primitive of the zero-mean part of ``f``.

    Coefficient rule ``g_hat[n] = f_hat[n] / (2 pi i n)`` for ``n != 0``,
    ``g_hat[0] = 0``.  The constant mode of ``f`` is projected out, which
    makes the result single valued on the circle.
    """
    n = wavenumbers(f.n_modes)
    c = np.zeros_like(f.coeffs)
    c[1:-1] = f.coeffs[1:-1] / (1j * TWO_PI * n[1:-1])
    return SpectralField(c)


def multiply(f: SpectralField, g: SpectralField, dealias: bool = True) -> SpectralField:
    """Pointwise product; with ``dealias`` modes above N/3 are zeroed
    on the inputs and on the result."""
    f._check(g)
    if dealias:
        k = dealias_cutoff(f.n_modes)
        f, g = truncate(f, k), truncate(g, k)
        return truncate(SpectralField.from_grid(f.grid * g.grid), k)
    return SpectralField.from_grid(f.grid * g.grid)


def convolve(f: SpectralField, g: SpectralField) -> SpectralField:
    """Product by direct convolution of the coefficient sequences.

    Exact (no FFT roundoff in empty modes) when the combined degree stays
    below N/2; higher modes are dropped, never aliased.  Nyquist inputs are
    ignored.
    """
    f._check(g)
    half = f.n_modes // 2
    a, b = f.coeffs[:half], g.coeffs[:half]
    fa = np.concatenate([np.conj(a[:0:-1]), a])
    fb = np.concatenate([np.conj(b[:0:-1]), b])
    full = np.convolve(fa, fb)
    c = np.zeros(half + 1, dtype=np.complex128)
    mid = 2 * (half - 1)
    c[:half] = full[mid:mid + half]
    return SpectralField(c)


def power(f: SpectralField, p: int, dealias: bool = True) -> SpectralField:
    """``f**p`` by repeated :func:`multiply`."""
    if int(p) != p or p < 1:
        raise PreconditionError(f"power requires an integer p >= 1, got {p!r}")
    result = f
    for _ in range(int(p) - 1):
        result = multiply(result, f, dealias)
    return result


# ---------------------------------------------------------------------------
# diffeomorphisms


class Diffeo:
    """Orientation-preserving circle map ``gamma(x) = x + d(x)``.

    ``d`` is periodic, so ``gamma(x + 1) = gamma(x) + 1`` holds by
    construction.  A Diffeo is allowed to hold a non-invertible map; use
    :attr:`min_jacobian` or :meth:`require_valid` to detect breakdown.
    """

    def __init__(self, displacement: SpectralField):
        self.displacement = displacement

    @classmethod
    def identity(cls, n_modes: int) -> "Diffeo":
        return cls(SpectralField.zeros(n_modes))

    @classmethod
    def rotation(cls, shift: float, n_modes: int) -> "Diffeo":
        return cls(SpectralField.constant(shift, n_modes))

    @property
    def n_modes(self) -> int:
        return self.displacement.n_modes

    @cached_property
    def jacobian(self) -> SpectralField:
        """``d gamma / dx = 1 + d'(x)``."""
        return derivative(self.displacement) + 1.0

    @cached_property
    def grid(self) -> np.ndarray:
        """Samples ``gamma(x_j)``."""
        return grid_points(self.n_modes) + self.displacement.grid

    @cached_property
    def min_jacobian(self) -> float:
        return float(np.min(self.jacobian.grid))

    def fine_min_jacobian(self, factor: int = 4) -> float:
        """Minimum of the Jacobian interpolant on a ``factor``-times finer grid."""
        n = self.n_modes
        c = np.zeros(factor * n // 2 + 1, dtype=np.complex128)
        c[: n // 2 + 1] = self.jacobian.coeffs
        if n // 2 < c.size - 1:
            c[n // 2] *= 0.5  # split Nyquist between +-N/2 on the fine grid
        fine = np.fft.irfft(c * factor * n, n=factor * n)
        return float(np.min(fine))

    def is_valid(self, floor: float = 0.0) -> bool:
        return self.min_jacobian > floor

    def require_valid(self, floor: float = 0.0, t=None) -> None:
        mj = self.min_jacobian
        if not mj > floor:
            raise BreakdownError(
                f"flow map is not a diffeomorphism: min d(gamma)/dx = {mj:.3e} <= {floor:g}",
                t=t,
                indicator=mj,
            )

    def __call__(self, points) -> np.ndarray:
        y = np.asarray(points, dtype=np.float64)
        return y + self.displacement.evaluate(y)

    def __repr__(self):
        return f"Diffeo(n_modes={self.n_modes}, min_jacobian={self.min_jacobian:.4g})"


def compose(f: SpectralField, gamma: Diffeo) -> SpectralField:
    """Grid samples of ``f(gamma(x_j))``, transformed back to coefficients.

    The trigonometric interpolant of ``f`` is summed directly at the off-grid
    points, so the result is exact for trigonometric polynomials up to
    rounding (and up to the resolution of ``f o gamma`` itself).
    """
    f._check(gamma.displacement)
    gamma.require_valid()
    return SpectralField.from_grid(f.evaluate(gamma.grid))


def invert_diffeo(gamma: Diffeo, tol: float = 1e-12, max_iter: int = 200) -> Diffeo:
    """Inverse map from per-point safeguarded Newton/bisection.

    For each grid point ``x_j`` the monotone equation ``gamma(y) - x_j = 0``
    is solved inside a bracket derived from the range of the displacement.
    """
    if not gamma.fine_min_jacobian() > 0.0:
        raise BreakdownError(
            "cannot invert: gamma is not monotone",
            indicator=gamma.min_jacobian,
        )
    n = gamma.n_modes
    x = grid_points(n)
    d = gamma.displacement
    jac = gamma.jacobian
    dg = d.grid
    pad = 0.1 * (dg.max() - dg.min()) + 1e-3
    lo = x - dg.max() - pad
    hi = x - dg.min() + pad

    def resid(y):
        return y + d.evaluate(y) - x

    r_lo, r_hi = resid(lo), resid(hi)
    for _ in range(50):
        bad = (r_lo > 0) | (r_hi < 0)
        if not bad.any():
            break
        lo = np.where(r_lo > 0, lo - pad, lo)
        hi = np.where(r_hi < 0, hi + pad, hi)
        r_lo, r_hi = resid(lo), resid(hi)

    y = x - dg  # first-order guess
    y = np.clip(y, lo, hi)
    for _ in range(max_iter):
        r = resid(y)
        lo = np.where(r < 0, y, lo)
        hi = np.where(r >= 0, y, hi)
        slope = jac.evaluate(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            y_new = y - r / slope
        outside = ~np.isfinite(y_new) | (y_new < lo) | (y_new > hi) | (slope <= 0)
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        step = np.abs(y_new - y)
        y = y_new
        if np.max(step) < tol and np.max(np.abs(r)) < 10 * tol:
            break
    return Diffeo(SpectralField.from_grid(y - x))


def conjugated_antiderivative(
    f: SpectralField, gamma: Diffeo, dealias: bool = False
) -> SpectralField:
    """Closed form ``antiderivative(f * d(gamma)/dx)``.

    Equals ``antiderivative(f) + antiderivative(f * (gamma' - 1))``.  This is
    the conjugated primitive when the mean is subtracted *after* pulling back
    to Lagrangian coordinates.  For the exact conjugate of the mean-projected
    operator see :func:`pullback_antiderivative`.
    """
    gamma.require_valid()
    weighted = f + multiply(f, derivative(gamma.displacement), dealias)
    return antiderivative(weighted)


def _pullback_weighted(weighted: SpectralField, gamma: Diffeo) -> SpectralField:
    # weighted = f * gamma'; returns antiderivative(f o gamma^-1) o gamma
    m = weighted.mean
    q = antiderivative(weighted) - m * gamma.displacement
    c = q.mean + inner(q, derivative(gamma.displacement))
    return q - c


def pullback_antiderivative(
    f: SpectralField, gamma: Diffeo, dealias: bool = False
) -> SpectralField:
    """Exact conjugate ``antiderivative(f o gamma^-1) o gamma``, composition free.

    With ``w = f gamma'`` and ``m = mean(w)``, the conjugate is
    ``antiderivative(w) - m (gamma - id) - c`` where the constant ``c`` makes
    the result average to zero against ``gamma' dx``.  No interpolation or
    inversion is performed.
    """
    gamma.require_valid()
    weighted = f + multiply(f, derivative(gamma.displacement), dealias)
    return _pullback_weighted(weighted, gamma)
