import math

import numpy as np
import pytest

from mhslab import eulerian as eul
from mhslab.errors import CFLError
from mhslab.spectral import ModelParams, SpectralField, sup_distance
from mhslab.verify import random_field, sine_data

N = 64


def fn(f, n=N):
    return SpectralField.from_function(f, n)


def test_rhs_of_sin():
    out = eul.rhs_euler(sine_data(1.0, N), ModelParams(1))
    assert sup_distance(out, fn(lambda x: -0.75 * np.pi * np.sin(4 * np.pi * x))) < 1e-12
    # the nonlocal part alone is +(pi/4) sin(4 pi x)
    nl = eul.nonlocal_term(sine_data(1.0, N), ModelParams(1))
    assert sup_distance(nl, fn(lambda x: 0.25 * np.pi * np.sin(4 * np.pi * x))) < 1e-12


def test_rhs_vs_grid_quadrature():
    """Nonlocal term against a trapezoid primitive of the grid integrand."""
    from scipy.integrate import cumulative_trapezoid

    u = sine_data(1.0, N)
    x = np.linspace(0, 1, 64001)
    integrand = (2 * np.pi * np.cos(2 * np.pi * x)) ** 2
    prim = cumulative_trapezoid(integrand - integrand[:-1].mean(), x, initial=0.0)
    prim = 0.5 * (prim - prim[:-1].mean())
    nl = eul.nonlocal_term(u, ModelParams(1))
    assert np.max(np.abs(nl.grid - prim[:-1:1000])) < 1e-6


@pytest.mark.parametrize("p", [1, 2, 3])
def test_rhs_is_mean_free(p):
    rng = np.random.default_rng(40 + p)
    for _ in range(50):
        u = random_field(rng, N, 8, 0.5)
        r = eul.rhs_euler(u, ModelParams(p))
        assert abs(r.mean) <= 1e-14 * max(1.0, r.sup_norm())


@pytest.mark.parametrize("p", [1, 2, 3])
def test_constant_is_equilibrium(p):
    u0 = SpectralField.constant(0.3, N)
    assert eul.rhs_euler(u0, ModelParams(p)).sup_norm() == 0.0
    run = eul.EulerianRun(u0, ModelParams(p), 1e-3)
    eul.integrate(run, 0.05, record_every=10)
    assert np.array_equal(run.u.coeffs, u0.coeffs)
    assert run.code is None


def test_step_doubling_small_data():
    u = sine_data(0.1, N)
    p = ModelParams(1)
    one = eul._rk4(u, 1e-3, p)
    two = eul._rk4(eul._rk4(u, 5e-4, p), 5e-4, p)
    assert sup_distance(one, two) < 1e-14


def test_step_doubling_is_fifth_order():
    u = sine_data(1.0, N)
    p = ModelParams(1)
    d = [sup_distance(eul._rk4(u, h, p), eul._rk4(eul._rk4(u, h / 2, p), h / 2, p))
         for h in (4e-3, 2e-3, 1e-3)]
    assert 24 < d[0] / d[1] < 40 and 24 < d[1] / d[2] < 40


def test_cfl_refusal():
    u = sine_data(1.0, 256)
    limit = 0.5 / (2 * math.pi * 256)
    assert eul.cfl_limit(u, 1) == pytest.approx(limit)
    run = eul.EulerianRun(u, ModelParams(1), 1e-3)
    with pytest.raises(CFLError) as info:
        eul.step_rk4(run)
    assert info.value.suggested_dt == pytest.approx(limit)


def test_dt_must_be_positive():
    with pytest.raises(ValueError):
        eul.EulerianRun(sine_data(0.1, N), ModelParams(1), 0.0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_energy_and_mean_conserved(p):
    u0 = sine_data(0.1, N) + fn(lambda x: 0.02 + 0.03 * np.cos(4 * np.pi * x))
    run = eul.EulerianRun(u0, ModelParams(p), 1e-3)
    eul.integrate(run, 0.1, record_every=10)
    e0, m0 = run.history[0].energy, run.history[0].mean_u
    assert max(abs(h.energy - e0) for h in run.history) / e0 < 1e-8
    assert max(abs(h.mean_u - m0) for h in run.history) < 1e-10
    times = [h.t for h in run.history]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert times[-1] == pytest.approx(0.1, abs=1e-15)


def test_energy_of_sin():
    assert eul.energy(sine_data(1.0, N)) == pytest.approx(2 * math.pi ** 2, rel=1e-14)


def test_adaptive_matches_fixed_step():
    u0 = sine_data(0.5, N)
    a = eul.EulerianRun(u0, ModelParams(1), 1e-4)
    eul.integrate(a, 0.05, adaptive=True, tol=1e-12)
    b = eul.EulerianRun(u0, ModelParams(1), 1e-4)
    eul.integrate(b, 0.05)
    assert sup_distance(a.u, b.u) < 1e-9
    assert a.steps < b.steps


def test_breaking_run_stops_with_code():
    run = eul.EulerianRun(sine_data(1.0, 128), ModelParams(1), 5e-4)
    eul.integrate(run, 0.5, record_every=50)
    assert run.code == eul.UNRESOLVED
    assert run.t < 0.2771
    assert len(run.history) >= 2


def test_predict_breaking_time():
    T = (math.sqrt(2) / math.pi) * (math.pi / 2 - math.atan(math.sqrt(2)))
    assert eul.predict_breaking_time(sine_data(1.0, N), ModelParams(1)) == pytest.approx(T, rel=1e-12)
    assert eul.predict_breaking_time(SpectralField.constant(0.3, N), ModelParams(1)) is None
    assert eul.predict_breaking_time(sine_data(2.0, N), ModelParams(1)) < T
    # the closed form scales like 1/amplitude for a pure mode
    assert eul.predict_breaking_time(sine_data(2.0, N), ModelParams(1)) == pytest.approx(T / 2)


def test_predict_breaking_time_general_p():
    t2 = eul.predict_breaking_time(sine_data(1.0, N), ModelParams(2), dt=1e-3)
    assert t2 is not None and 0 < t2 < 5


def test_estimate_breaking_time_on_synthetic_trace():
    t = np.linspace(0, 0.9, 200)
    trace = [(ti, 1.0 / (1.0 - ti), 0.0) for ti in t]
    fit = eul.estimate_breaking_time(trace)
    assert fit.t_star == pytest.approx(1.0, rel=1e-10)
    assert eul.estimate_breaking_time([]) is None


def test_record_columns():
    rec = eul.make_record(sine_data(0.1, N), 0.0, 0.0)
    assert [c for c in eul.CSV_COLUMNS] == ["t", "mean_u", "energy", "sup_u", "sup_abs_ux",
                                             "radius_est", "scale_norm", "dt_used"]
    assert rec.sup_abs_ux == pytest.approx(0.2 * math.pi)
    assert rec.radius_est == math.inf
