"""Sobolev norms, the analytic scale norms, and Fourier-decay radius fits.

The scale norm of a zero-mean field is

    |||u|||_s = sup_k  ||d^k u||_{H^sigma} * s^k * (k+1)^2 / k!

truncated at ``k_max`` and evaluated in log space.  The inner Sobolev index
``sigma`` is kept separate from the scale parameter ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InsufficientDataError, PreconditionError
from .spectral import SpectralField, TWO_PI, antiderivative, convolve, derivative


@dataclass(frozen=True)
class ScaleParams:
    s: float = 0.5
    sigma: float = 2.0
    k_max: int = 30

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise PreconditionError(f"scale parameter s must lie in (0, 1), got {self.s}")
        if self.sigma < 0:
            raise PreconditionError("sigma must be nonnegative")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise PreconditionError("k_max must be a positive integer")


@dataclass(frozen=True)
class NormReport:
    value: float
    argmax_k: int
    truncation_ok: bool

    def csv_row(self) -> list:
        return [repr(float(self.value)), str(self.argmax_k), str(self.truncation_ok).lower()]


def _two_sided(f: SpectralField):
    """Wavenumbers and squared magnitudes weighted by multiplicity."""
    half = f.n_modes // 2
    n = np.arange(half + 1, dtype=np.float64)
    mult = np.full(half + 1, 2.0)
    mult[0] = 1.0
    mult[half] = 0.5
    return n, mult * np.abs(f.coeffs) ** 2


def sobolev_norm(f: SpectralField, s: float) -> float:
    """``(sum_n (1 + (2 pi n)^2)^s |f_n|^2)^(1/2)`` over all integer ``n``."""
    if s < 0:
        raise PreconditionError("Sobolev index must be nonnegative")
    n, w = _two_sided(f)
    return float(np.sqrt(np.sum((1.0 + (TWO_PI * n) ** 2) ** s * w)))


def log_derivative_norms(f: SpectralField, sigma: float, k_max: int) -> np.ndarray:
    """``log ||d^k f||_{H^sigma}`` for ``k = 0 .. k_max`` (``-inf`` for zero)."""
    n, w = _two_sided(f)
    with np.errstate(divide="ignore"):
        base = np.log(w) + sigma * np.log1p((TWO_PI * n) ** 2)
        logk = np.log(TWO_PI * n)
    out = np.empty(k_max + 1)
    out[0] = 0.5 * logsumexp(base)
    k = np.arange(1, k_max + 1)[:, None]
    out[1:] = 0.5 * logsumexp(base[None, 1:] + 2 * k * logk[None, 1:], axis=1)
    return out


def scale_terms(f: SpectralField, params: ScaleParams) -> np.ndarray:
    """Log of each term of the scale-norm supremum, ``k = 0 .. k_max``."""
    k = np.arange(params.k_max + 1)
    logs = log_derivative_norms(f, params.sigma, params.k_max)
    return logs + k * math.log(params.s) + 2 * np.log(k + 1.0) - gammaln(k + 1.0)


def scale_norm(
    f: SpectralField, params: ScaleParams, require_zero_mean: bool = True
) -> NormReport:
    """Truncated scale norm with a decay certificate.

    ``truncation_ok`` holds when each of the last three terms is below
    ``1e-6 * value``; a failed certificate is reported, not raised.
    """
    if require_zero_mean:
        scale = max(1.0, sobolev_norm(f, 0.0))
        if abs(f.mean) > 1e-12 * scale:
            raise PreconditionError(f"scale norm needs a zero-mean field, mean = {f.mean:.3e}")
    terms = scale_terms(f, params)
    if not np.isfinite(terms).any():
        return NormReport(0.0, 0, True)
    kmax = int(np.argmax(terms))
    top = terms[kmax]
    ok = bool(np.all(terms[-3:] < top + math.log(1e-6)))
    return NormReport(float(np.exp(top)), kmax, ok)


def drop_roundoff(f: SpectralField, rel_floor: float = 1e-13) -> SpectralField:
    """Zero nonconstant modes below ``rel_floor`` times the largest one.

    Roundoff-level high modes are otherwise amplified by the ``k``-th
    derivative weights of the scale norm.
    """
    c = f.coeffs.copy()
    a = np.abs(c[1:])
    if a.size and a.max() > 0:
        c[1:][a < rel_floor * a.max()] = 0.0
    return SpectralField(c)


def op_P1(f: SpectralField) -> SpectralField:
    return -derivative(f)


def op_P2(f: SpectralField) -> SpectralField:
    return antiderivative(f)


@dataclass
class LemmaReport:
    s: float
    s_prime: float
    n_fields: int = 0
    p1_max_ratio: float = 0.0
    p2_max_ratio: float = 0.0
    algebra_constant: float = 0.0
    all_truncation_ok: bool = True
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_lemma_bounds(corpus, s: float, s_prime: float, params: ScaleParams,
                       slack: float = 1e-9) -> LemmaReport:
    """Check the P1 and P2 scale estimates on every corpus field.

    Ratios are ``lhs / rhs`` with ``rhs`` the stated bound (so a ratio
    above ``1 + slack`` is a violation).  The algebra constant is the
    largest ``|||uv|||_s / (|||u|||_s |||v|||_s)`` over all pairs; the
    product's mean is kept since the norm formula does not need it.
    Products are exact coefficient convolutions: FFT roundoff in empty high
    modes would otherwise dominate the high-derivative terms.
    """
    if not 0.0 < s_prime < s < 1.0:
        raise PreconditionError("need 0 < s' < s < 1")
    p_s = replace(params, s=s)
    p_sp = replace(params, s=s_prime)
    rep = LemmaReport(s=s, s_prime=s_prime, n_fields=len(corpus))
    norms = []
    for i, u in enumerate(corpus):
        nu = scale_norm(u, p_s)
        norms.append(nu.value)
        lhs1 = scale_norm(op_P1(u), p_sp)
        lhs2 = scale_norm(op_P2(u), p_s)
        rep.all_truncation_ok &= nu.truncation_ok and lhs1.truncation_ok and lhs2.truncation_ok
        rhs1 = nu.value / (s - s_prime)
        for name, lhs, rhs in (("P1", lhs1.value, rhs1), ("P2", lhs2.value, nu.value)):
            ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
            if name == "P1":
                rep.p1_max_ratio = max(rep.p1_max_ratio, ratio)
            else:
                rep.p2_max_ratio = max(rep.p2_max_ratio, ratio)
            if lhs > rhs * (1.0 + slack):
                rep.violations.append({"lemma": name, "index": i, "lhs": lhs, "rhs": rhs})
    for i, u in enumerate(corpus):
        for j in range(i, len(corpus)):
            denom = norms[i] * norms[j]
            if denom == 0:
                continue
            prod = convolve(u, corpus[j])
            val = scale_norm(prod, p_s, require_zero_mean=False).value
            rep.algebra_constant = max(rep.algebra_constant, val / denom)
    return rep


def random_trig_corpus(rng: np.random.Generator, size: int, n_modes: int,
                       max_degree: int = 8) -> list:
    """Zero-mean random trigonometric polynomials of degree at most ``max_degree``."""
    corpus = []
    for _ in range(size):
        deg = int(rng.integers(1, max_degree + 1))
        c = np.zeros(n_modes // 2 + 1, dtype=np.complex128)
        c[1:deg + 1] = rng.normal(size=deg) + 1j * rng.normal(size=deg)
        c[1:deg + 1] *= 0.5 / np.arange(1, deg + 1)
        corpus.append(SpectralField(c))
    return corpus


def fit_radius(f: SpectralField, min_modes: int = 8, rel_floor: float = 1e-13) -> float:
    """Width of the analyticity strip from the decay of ``|f_n|``.

    Fits ``log|f_n| ~ a - 2 pi rho n`` by least squares over the modes from
    the first one below ``0.1 * max|f_n|`` down to the noise floor
    ``rel_floor * max|f_n|``.  Returns ``inf`` for fields with fewer than
    ``min_modes`` modes above the floor (band-limited to double precision)
    and ``0.0`` when the fitted coefficients do not decay.
    """
    half = f.n_modes // 2
    a = np.abs(f.coeffs[1:half])
    n = np.arange(1, half)
    top = a.max() if a.size else 0.0
    if top == 0.0:
        return math.inf
    above = a > rel_floor * top
    if int(above.sum()) < min_modes:
        return math.inf
    start = int(np.argmax(a < 0.1 * top))
    if a[start] >= 0.1 * top:
        raise InsufficientDataError("coefficients never fall below 10% of the peak")
    window = above.copy()
    window[:start] = False
    if int(window.sum()) < 3:
        raise InsufficientDataError(f"only {int(window.sum())} modes in the fit window")
    slope, _ = np.polyfit(n[window], np.log(a[window]), 1)
    if slope >= 0:
        return 0.0
    return float(-slope / TWO_PI)
