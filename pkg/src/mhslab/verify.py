"""Seeded property suites behind ``mhslab verify``.

Each check yields a :class:`PropertyResult` with the measured value, the
bound it is held to, and a witness describing the worst case.  The
scenario helpers (``triality``, ``fd_errors``, ...) are shared with the
test suite.
"""
from __future__ import annotations

import dataclasses
import functools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import eulerian as eul
from . import lagrangian as lag
from .initcond import parse_init, realize
from .scales import ScaleParams, check_lemma_bounds, random_trig_corpus
from .spectral import (
    Diffeo,
    ModelParams,
    SpectralField,
    antiderivative,
    compose,
    conjugated_antiderivative,
    derivative,
    grid_points,
    invert_diffeo,
    multiply,
    pullback_antiderivative,
    sup_distance,
)
from .taylor import (
    consistency_defect,
    constant_defect,
    evaluate_series,
    integrate_taylor,
    taylor_coeffs,
    time_radius,
)

SUITES = ("spectral", "lemmas", "derivatives", "equivalence", "conservation", "taylor")

SEEDS = {"spectral": 101, "lemmas": 202, "derivatives": 303, "equivalence": 404}

LEMMA_PAIRS = ((0.1, 0.05), (0.5, 0.25), (0.9, 0.45))
LEMMA_PARAMS = ScaleParams(s=0.5, sigma=2.0, k_max=150)


@dataclass
class PropertyResult:
    suite: str
    name: str
    value: float
    bound: str
    passed: bool
    margin: float
    witness: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.suite}/{self.name}: value={self.value:.3e} bound {self.bound} margin={self.margin:.3e}"


def _upper(suite, name, value, limit, witness=None) -> PropertyResult:
    value = float(value)
    ok = bool(value <= limit)
    return PropertyResult(suite, name, value, f"<= {limit:g}", ok, float(limit - value), witness or {})


def _lower(suite, name, value, limit, witness=None) -> PropertyResult:
    value = float(value)
    ok = bool(value > limit)
    return PropertyResult(suite, name, value, f"> {limit:g}", ok, float(value - limit), witness or {})


def _within(suite, name, values, lo, hi, witness=None) -> PropertyResult:
    """All ``values`` inside ``[lo, hi]``; the reported value is the worst."""
    values = np.asarray(values, dtype=np.float64)
    margins = np.minimum(values - lo, hi - values)
    i = int(np.argmin(margins))
    w = dict(witness or {})
    w["case"] = i
    ok = bool(np.all(np.isfinite(values)) and margins[i] >= 0)
    return PropertyResult(suite, name, float(values[i]), f"in [{lo:g}, {hi:g}]", ok, float(margins[i]), w)


# ---------------------------------------------------------------- generators

def random_field(rng: np.random.Generator, n_modes: int, degree: int, amp: float,
                 with_mean: bool = True) -> SpectralField:
    c = np.zeros(n_modes // 2 + 1, dtype=np.complex128)
    k = np.arange(1, degree + 1)
    c[1:degree + 1] = amp * (rng.normal(size=degree) + 1j * rng.normal(size=degree)) / k ** 2
    if with_mean:
        c[0] = amp * rng.normal()
    return SpectralField(c)


def random_diffeo(rng: np.random.Generator, n_modes: int, degree: int, amp: float,
                  min_jacobian: float) -> Diffeo:
    """Random displacement, shrunk if needed so ``min gamma_x >= min_jacobian``."""
    d = random_field(rng, n_modes, degree, amp)
    low = Diffeo(d).fine_min_jacobian() - 1.0
    if 1.0 + low < min_jacobian:
        d = d * ((1.0 - min_jacobian) / -low * (1.0 - 1e-9))
    return Diffeo(d)


def sine_data(amplitude: float, n_modes: int) -> SpectralField:
    return realize(parse_init(f"{amplitude!r}*sin(2*pi*x)"), n_modes)


# ---------------------------------------------------------------- scenarios

@dataclass
class Triality:
    p: int
    times: list
    eulerian: list
    lagrangian: list
    taylor: list

    def deviations(self) -> dict:
        pairs = {"eulerian-lagrangian": (self.eulerian, self.lagrangian),
                 "eulerian-taylor": (self.eulerian, self.taylor),
                 "lagrangian-taylor": (self.lagrangian, self.taylor)}
        return {k: max(sup_distance(f, g) for f, g in zip(a, b)) for k, (a, b) in pairs.items()}

    def drifts(self) -> dict:
        """Per solver: (relative energy drift, absolute mean drift)."""
        out = {}
        for name in ("eulerian", "lagrangian", "taylor"):
            us = getattr(self, name)
            e0, m0 = eul.energy(us[0]), us[0].mean
            out[name] = (max(abs(eul.energy(u) - e0) for u in us) / e0,
                         max(abs(u.mean - m0) for u in us))
        return out


@functools.lru_cache(maxsize=None)
def triality(p: int, amplitude: float = 0.1, n_modes: int = 256, dt: float = 1e-4,
             t_end: float = 0.1, every: float = 0.01) -> Triality:
    """Eulerian RK4, reconstructed Lagrangian RK4 and re-expanded Taylor
    series (J=16) sampled at the same times."""
    params = ModelParams(p)
    u0 = sine_data(amplitude, n_modes)
    steps = int(round(every / dt))
    e_fields, l_fields = [], []
    e = eul.EulerianRun(u0, params, dt)
    eul.integrate(e, t_end, record_every=steps, on_record=lambda r: e_fields.append(r.u))
    lr = lag.LagrangianRun(lag.LagrangianState.initial(u0, params), dt)
    lag.integrate_lagrangian(lr, t_end, record_every=steps,
                             on_record=lambda r: l_fields.append(lag.reconstruct_u(r.state)))
    times = [h.t for h in e.history]
    tr = integrate_taylor(u0, params, t_end, order=16, segment=every)
    t_fields = [tr.at(t) for t in times]
    return Triality(p, times, e_fields, l_fields, t_fields)


def fd_state(rng: np.random.Generator, p: int, n_modes: int = 64):
    gamma = random_diffeo(rng, n_modes, 3, 0.03, 0.5)
    zeta = random_field(rng, n_modes, 3, 0.5)
    W = random_field(rng, n_modes, 3, 1.0)
    return lag.LagrangianState(gamma, zeta, ModelParams(p)), W


def fd_errors(state, W, direction: str, eps_values=(1e-4, 1e-5)) -> list:
    """Sup error of central differences of F against the analytic derivative."""
    d, z = state.gamma.displacement, state.zeta

    def F_at(dd, zz):
        return lag.F(lag.LagrangianState(Diffeo(dd), zz, state.params))

    if direction == "gamma":
        exact = lag.dF_dgamma(state, W)
        plus = lambda e: F_at(d + e * W, z)
        minus = lambda e: F_at(d - e * W, z)
    elif direction == "zeta":
        exact = lag.dF_dzeta(state, W)
        plus = lambda e: F_at(d, z + e * W)
        minus = lambda e: F_at(d, z - e * W)
    else:
        raise ValueError(direction)
    errs = []
    for e in eps_values:
        fd = (plus(e) - minus(e)) / (2.0 * e)
        errs.append(sup_distance(fd, exact))
    return errs, exact.sup_norm()


def identity_pairs(rng: np.random.Generator, count: int = 50, n_modes: int = 128):
    for _ in range(count):
        f = random_field(rng, n_modes, 8, 1.0)
        gamma = random_diffeo(rng, n_modes, 6, 0.15, 0.3)
        yield f, gamma


def identity_error(f: SpectralField, gamma: Diffeo) -> float:
    lhs = conjugated_antiderivative(f, gamma) - antiderivative(f)
    rhs = antiderivative(multiply(f, derivative(gamma.displacement), dealias=False))
    scale = max(lhs.sup_norm(), rhs.sup_norm(), 1e-300)
    return sup_distance(lhs, rhs) / scale


# ---------------------------------------------------------------- suites

def suite_spectral() -> list:
    rng = np.random.default_rng(SEEDS["spectral"])
    out = []
    worst_a = worst_b = worst_c = 0.0
    for _ in range(20):
        f = random_field(rng, 64, 10, 1.0)
        scale = max(1.0, f.sup_norm())
        worst_a = max(worst_a, sup_distance(derivative(antiderivative(f)), f.without_mean()) / scale)
        worst_b = max(worst_b, sup_distance(antiderivative(derivative(f)), f.without_mean()) / scale)
        g = random_field(rng, 64, 10, 1.0)
        worst_c = max(worst_c, sup_distance(multiply(f, g), multiply(g, f)))
    out.append(_upper("spectral", "derivative_of_antiderivative", worst_a, 1e-13))
    out.append(_upper("spectral", "antiderivative_of_derivative", worst_b, 1e-13))
    out.append(_upper("spectral", "product_commutes", worst_c, 1e-14))

    errs = [identity_error(f, g) for f, g in identity_pairs(rng)]
    i = int(np.argmax(errs))
    out.append(_upper("spectral", "conjugation_identity_50_pairs", errs[i], 1e-12, {"pair": i}))

    worst = 0.0
    for _ in range(5):
        f = random_field(rng, 256, 6, 1.0)
        gamma = random_diffeo(rng, 256, 4, 0.1, 0.5)
        route = compose(antiderivative(compose(f, invert_diffeo(gamma))), gamma)
        worst = max(worst, sup_distance(pullback_antiderivative(f, gamma), route))
    out.append(_upper("spectral", "pullback_primitive_vs_definition", worst, 1e-8))

    worst = 0.0
    for _ in range(5):
        gamma = random_diffeo(rng, 128, 4, 0.1, 0.3)
        inv = invert_diffeo(gamma)
        r = gamma(inv.grid) - grid_points(128)
        worst = max(worst, float(np.max(np.abs((r + 0.5) % 1.0 - 0.5))))
    out.append(_upper("spectral", "inverse_roundtrip", worst, 1e-11))
    return out


def suite_lemmas() -> list:
    rng = np.random.default_rng(SEEDS["lemmas"])
    corpus = random_trig_corpus(rng, 100, 64, max_degree=8)
    out = []
    runs = [(s, sp, LEMMA_PARAMS) for s, sp in LEMMA_PAIRS]
    # inner Sobolev index tied to the scale parameter
    runs += [(s, sp, dataclasses.replace(LEMMA_PARAMS, sigma=s)) for s, sp in LEMMA_PAIRS]
    for s, sp, params in runs:
        rep = check_lemma_bounds(corpus, s, sp, params)
        tag = f"s={s:g},s'={sp:g},sigma={params.sigma:g}"
        w = {"violations": rep.violations[:3]}
        out.append(_upper("lemmas", f"P1_ratio[{tag}]", rep.p1_max_ratio, 1.0 + 1e-9, w))
        out.append(_upper("lemmas", f"P2_ratio[{tag}]", rep.p2_max_ratio, 1.0 + 1e-9, w))
        out.append(_upper("lemmas", f"algebra_constant_finite[{tag}]",
                          rep.algebra_constant if math.isfinite(rep.algebra_constant) else math.inf,
                          1e300))
        out.append(_lower("lemmas", f"truncation_certified[{tag}]", float(rep.all_truncation_ok), 0.5))
    return out


def fd_ratio_cases(seed: int = SEEDS["derivatives"], count: int = 20):
    """The seeded finite-difference cases: p alternates over {2, 3}."""
    rng = np.random.default_rng(seed)
    return [fd_state(rng, 2 + (i % 2)) for i in range(count)]


def suite_derivatives() -> list:
    out = []
    ratios = {"gamma": [], "zeta": []}
    for state, W in fd_ratio_cases():
        for direction in ratios:
            (e1, e2), _ = fd_errors(state, W, direction)
            ratios[direction].append(e1 / e2)
    for direction, vals in ratios.items():
        out.append(_within("derivatives", f"fd_ratio_{direction}_20_cases", vals, 80.0, 120.0))

    # p = 1: F is quadratic in zeta, so central differences are exact there
    rng = np.random.default_rng(SEEDS["derivatives"] + 1)
    g_ratios, z_rel = [], []
    for _ in range(5):
        state, W = fd_state(rng, 1)
        (e1, e2), _ = fd_errors(state, W, "gamma")
        g_ratios.append(e1 / e2)
        (e1, _), scale = fd_errors(state, W, "zeta")
        z_rel.append(e1 / scale)
    out.append(_within("derivatives", "fd_ratio_gamma_p1", g_ratios, 80.0, 120.0))
    out.append(_upper("derivatives", "fd_exact_zeta_p1", max(z_rel), 1e-9))

    worst = 0.0
    for _ in range(5):
        state, W1 = fd_state(rng, 2)
        W2 = random_field(rng, 64, 3, 1.0)
        a, b = rng.normal(size=2)
        for fn in (lag.dF_dgamma, lag.dF_dzeta):
            lhs = fn(state, a * W1 + b * W2)
            rhs = a * fn(state, W1) + b * fn(state, W2)
            worst = max(worst, sup_distance(lhs, rhs) / max(1.0, lhs.sup_norm()))
    out.append(_upper("derivatives", "linearity", worst, 1e-12))
    return out


def suite_equivalence() -> list:
    out = []
    for p in (1, 2, 3):
        dev = triality(p).deviations()
        k = max(dev, key=dev.get)
        out.append(_upper("equivalence", f"triality_p{p}", dev[k], 1e-6, {"pair": k}))

    rng = np.random.default_rng(SEEDS["equivalence"])
    worst = 0.0
    for p in (1, 2, 3):
        # the literal route composes non-band-limited fields; N=512 resolves them
        gamma = random_diffeo(rng, 512, 4, 0.08, 0.5)
        zeta = random_field(rng, 512, 4, 0.5)
        st = lag.LagrangianState(gamma, zeta, ModelParams(p))
        worst = max(worst, sup_distance(lag.F(st), lag.F_definition_route(st)))
    out.append(_upper("equivalence", "F_composition_free_vs_definition", worst, 1e-8))

    # breaking run: gamma stays a diffeomorphism past 0.9 T* and min gamma_x decreases
    u0 = sine_data(1.0, 256)
    t_star = eul.predict_breaking_time(u0, ModelParams(1))
    run = lag.LagrangianRun(lag.LagrangianState.initial(u0, ModelParams(1)), 1e-4)
    lag.integrate_lagrangian(run, 0.9 * t_star, record=False)
    mj = np.array([m for _, m in run.trace])
    out.append(_lower("equivalence", "diffeo_beyond_0.9T*", float(mj[-1]), 0.0,
                      {"t": run.state.t, "code": run.code}))
    tail = mj[len(mj) // 2:]
    out.append(_lower("equivalence", "min_gamma_x_strictly_decreasing",
                      float(-np.max(np.diff(tail))), 0.0))
    return out


def suite_conservation() -> list:
    out = []
    for p in (1, 2, 3):
        for solver, (de, dm) in triality(p).drifts().items():
            out.append(_upper("conservation", f"energy_{solver}_p{p}", de, 1e-8))
            out.append(_upper("conservation", f"mean_{solver}_p{p}", dm, 1e-10))
    return out


def suite_taylor() -> list:
    out = []
    n = 256
    worst = 0.0
    for p in (1, 2):
        series = taylor_coeffs(sine_data(0.1, n), ModelParams(p), 16)
        worst = max(worst, max(consistency_defect(series)))
    out.append(_upper("taylor", "nonconstant_defect", worst, 1e-12))

    u0 = sine_data(1.0, n)
    p1 = ModelParams(1)
    lit = taylor_coeffs(u0, p1, 2, consistent=False)
    out.append(_upper("taylor", "literal_gauge_constant_defect_j1",
                      abs(constant_defect(lit)[1] - math.pi ** 2), 1e-10))

    series = taylor_coeffs(u0, p1, 8)
    expected = SpectralField.from_function(lambda x: -0.75 * math.pi * np.sin(4 * math.pi * x), n)
    out.append(_upper("taylor", "first_coefficient", sup_distance(series.coeffs_u1[1], expected), 1e-12))

    reality = 0.0
    for a in series.coeffs_u1 + series.coeffs_u2:
        full = np.concatenate([a.coeffs, np.conj(a.coeffs[-2:0:-1])]) * n
        vals = np.fft.ifft(full)
        reality = max(reality, float(np.max(np.abs(vals.imag)) / max(np.max(np.abs(vals.real)), 1e-300)))
    out.append(_upper("taylor", "coefficients_real_relative", reality, 1e-12))

    run = eul.EulerianRun(u0, p1, 1e-4)
    eul.integrate(run, 1e-3)
    out.append(_upper("taylor", "series_vs_rk4_t=1e-3_J=8",
                      sup_distance(run.u, evaluate_series(series, 1e-3)[0]), 1e-10))

    r16 = time_radius(taylor_coeffs(u0, p1, 16))
    r24 = time_radius(taylor_coeffs(u0, p1, 24))
    out.append(_upper("taylor", "radius_stable_J16_J24", abs(r24 - r16) / r16, 0.10,
                      {"r16": r16, "r24": r24}))

    radii = [time_radius(taylor_coeffs(sine_data(a, n), p1, 16)) for a in (0.1, 0.5, 1.0)]
    out.append(_lower("taylor", "radius_decreases_with_amplitude",
                      float(-np.max(np.diff(radii))), 0.0, {"radii": radii}))

    small = sine_data(0.1, n)
    series = taylor_coeffs(small, p1, 24)
    half = 0.5 * time_radius(series)
    run = eul.EulerianRun(small, p1, 1e-4)
    worst = 0.0
    for t in np.linspace(0.1 * half, half, 5):
        eul.integrate(run, float(t))
        worst = max(worst, sup_distance(run.u, evaluate_series(series, float(t))[0]))
    out.append(_upper("taylor", "series_vs_rk4_within_half_radius", worst, 1e-6, {"half_radius": half}))

    tri = triality(1)
    worst = max(sup_distance(a, b) for t, a, b in zip(tri.times, tri.eulerian, tri.taylor) if t <= 1e-2 + 1e-12)
    worst = max(worst, max(sup_distance(a, b) for t, a, b in zip(tri.times, tri.lagrangian, tri.taylor)
                           if t <= 1e-2 + 1e-12))
    out.append(_upper("taylor", "series_vs_solvers_t<=1e-2", worst, 1e-8))
    return out


_RUNNERS = {
    "spectral": suite_spectral,
    "lemmas": suite_lemmas,
    "derivatives": suite_derivatives,
    "equivalence": suite_equivalence,
    "conservation": suite_conservation,
    "taylor": suite_taylor,
}


def run_suites(name: str = "all", emit=print) -> list:
    names = SUITES if name == "all" else (name,)
    if any(n not in _RUNNERS for n in names):
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    results = []
    for n in names:
        for r in _RUNNERS[n]():
            results.append(r)
            if emit is not None:
                emit(r.line())
    return results


def failure_report(results) -> str:
    fails = [asdict(r) for r in results if not r.passed]
    return json.dumps({"failures": [{"property": f"{f['suite']}/{f['name']}", "value": f["value"],
                                     "bound": f["bound"], "margin": f["margin"],
                                     "witness": f["witness"]} for f in fails]},
                      default=str, sort_keys=True)
