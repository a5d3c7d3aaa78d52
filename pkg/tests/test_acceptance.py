"""Acceptance suite: one test per criterion, named ``test_criterion_<n>_<label>``.

Run with ``pytest tests/test_acceptance.py -v``; a pass/fail line per criterion is
printed in the terminal summary. Studies are cached per module so criteria 5-9
share the expensive oracle solves.
"""

import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mesoscale.experiments import (
    SampleSpec,
    StudySpec,
    _green_pairs,
    rows_csv,
    run_study,
    sweep_cloud,
)
from mesoscale.fields import (
    approximate_green,
    approximate_green_freespace,
    build_model,
    diagonal_interaction_term,
)
from mesoscale.geometry import (
    LEMMA1_FACTOR,
    AmbientDomain,
    CloudSpec,
    cloud_from_arrays,
    generate_cloud,
    separation_parameters,
)
from mesoscale.kernels import (
    Bump,
    SourceTerm,
    ambient_green,
    capacitary_potential,
    exterior_green,
)
from mesoscale.oracle import oracle_green
from mesoscale.system import (
    assemble_system,
    certificates,
    interaction_matrix,
    solve_coefficients,
    solve_system,
)

from conftest import random_sphere_points

FREE = AmbientDomain.free_space()
SOURCE = SourceTerm((Bump((0.05, -0.03, 0.02), 0.2, 1.0, 4),))
BASE = CloudSpec("lattice", radius=1e-3, spacing=0.5, n_per_axis=2)
EPS_SWEEP = (4e-4, 8e-4, 1.6e-3, 3.2e-3)
SEED = 20240601


def _spec(quantity, **kw):
    return StudySpec(sweep="epsilon", values=EPS_SWEEP, base_cloud=BASE, source=SOURCE,
                     samples=SampleSpec(count=500, strategy="mixed", pairs=100),
                     quantity=quantity, seed=SEED, **kw)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _csv(result):
    return rows_csv(result).encode()


@pytest.fixture(scope="module")
def u_study():
    return _timed(lambda: run_study(_spec("u")))


@pytest.fixture(scope="module")
def green_study():
    return _timed(lambda: run_study(_spec("green")))


@pytest.fixture(scope="module")
def energy_study():
    return _timed(lambda: run_study(_spec("energy", mc_samples=100_000, fd_step_fraction=0.1)))


def _report(name, result):
    fit = result.fit
    print(f"\n{name}: slope {fit.slope:.4f} CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
    for r in result.rows:
        print(f"  eps={r.epsilon:.3g} sup={r.sup_error:.4g} energy={r.energy_error:.4g} "
              f"residual={r.oracle_residual:.2g} trusted={r.trusted}")


def test_criterion_1_kernel_exactness():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    ball = AmbientDomain.ball(1.0)
    x = random_sphere_points(rng, 100, np.zeros(3), 1.0)
    y = rng.uniform(-0.5, 0.5, size=(100, 3))
    g_ball = np.abs(np.asarray(ambient_green(ball, x, y))).max()

    cloud = cloud_from_arrays([[0.1, -0.2, 0.3]], 0.01)
    inc = cloud.inclusions[0]
    on = random_sphere_points(rng, 100, inc.center, inc.radius)
    far = inc.center + random_sphere_points(rng, 100, np.zeros(3), 1.0) * rng.uniform(
        0.02, 0.5, 100)[:, None]
    g_ext = np.abs(np.asarray(exterior_green(inc, on, far))).max()
    cap = np.abs(np.asarray(capacitary_potential(inc, on)) - 1.0).max()
    elapsed = time.perf_counter() - t0
    print(f"\nball {g_ball:.2e} exterior {g_ext:.2e} capacitary {cap:.2e} in {elapsed:.3f}s")
    assert g_ball < 1e-12 and g_ext < 1e-12 and cap < 1e-12
    assert elapsed < 1.0


def test_criterion_2_system_correctness():
    t0 = time.perf_counter()
    cloud = generate_cloud(CloudSpec("jittered-lattice", radius=1e-3, spacing=0.25, n_per_axis=4,
                                     jitter_fraction=0.2, seed=3))
    assert len(cloud) == 64
    system = solve_system(assemble_system(cloud, FREE, SOURCE), separation_parameters(cloud))
    vmax = np.abs(system.Vf).max()
    residual = system.residual()
    cmat = interaction_matrix(system)
    elapsed = time.perf_counter() - t0

    r, a = 0.5, 0.01
    pair = cloud_from_arrays([[-r / 2, 0, 0], [r / 2, 0, 0]], a)
    centered = SourceTerm((Bump((0.0, 0.0, 0.0), 0.6, 1.0, 4),))
    pair_system = assemble_system(pair, FREE, centered)
    v = pair_system.Vf[0]
    assert pair_system.Vf[1] == v
    C = solve_coefficients(pair_system)
    hand = np.abs(C - (-v / (1 + a / r))).max() / abs(v)
    print(f"\nresidual {residual:.2e} hand {hand:.2e} asymmetry {cmat.asymmetry:.2e} "
          f"in {elapsed:.3f}s")
    assert residual <= 1e-10 * max(1.0, vmax)
    assert hand < 1e-12
    assert cmat.asymmetry < 1e-10
    assert elapsed < 1.0


def test_criterion_3_lemma1_certificate():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    held = 0
    for k in range(50):
        n = int(rng.integers(2, 33))
        cloud = generate_cloud(CloudSpec("random", radius=1e-3, spacing=0.3, n=n, seed=100 + k))
        d = separation_parameters(cloud).d
        radii = rng.uniform(0.2, 1.0, n) * 0.5 * LEMMA1_FACTOR * d
        cloud = cloud.with_radii(radii)
        params = separation_parameters(cloud)
        assert cloud.radii.max() < 0.5 * LEMMA1_FACTOR * params.d
        f = SourceTerm((Bump(tuple(rng.uniform(-0.3, 0.3, 3)), 0.4, 1.0, 4),))
        system = solve_system(assemble_system(cloud, FREE, f), params)
        cert = certificates(system, system.C, interaction_matrix(system), params)
        held += cert.lemma1_holds
    elapsed = time.perf_counter() - t0
    print(f"\nlemma 1 held on {held}/50 clouds in {elapsed:.2f}s")
    assert held == 50
    assert elapsed < 30.0


def test_criterion_4_single_inclusion_reduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    cloud = cloud_from_arrays([[0.1, -0.2, 0.0]], 0.01)
    inc = cloud.inclusions[0]
    model = build_model(cloud, FREE)

    def exterior(n, lo, hi):
        dirs = random_sphere_points(rng, n, np.zeros(3), 1.0)
        return inc.center + dirs * (inc.radius * rng.uniform(lo, hi, n))[:, None]

    x, y = exterior(100, 1.05, 30.0), exterior(100, 1.05, 30.0)
    exact = np.asarray(exterior_green(inc, x, y))
    asym = np.abs(np.asarray(approximate_green(model, x, y)) - exact).max()
    oracle = np.abs(np.asarray(oracle_green(cloud, FREE, x, y)) - exact).max()
    elapsed = time.perf_counter() - t0
    print(f"\napproximate {asym:.2e} oracle {oracle:.2e} in {elapsed:.2f}s")
    assert asym < 1e-12
    assert oracle < 1e-8
    assert elapsed < 10.0


def test_criterion_5_solution_epsilon_rate(u_study):
    result, elapsed = u_study
    _report("u", result)
    assert all(r.trusted for r in result.rows)
    assert max(r.oracle_residual for r in result.rows) < 1e-8
    assert 0.8 <= result.fitted_slope <= 1.3
    assert elapsed < 300.0


def test_criterion_6_green_epsilon_rate(green_study):
    result, elapsed = green_study
    _report("green", result)
    assert all(r.trusted for r in result.rows)
    assert 0.8 <= result.fitted_slope <= 1.3
    assert elapsed < 600.0


def test_criterion_7_energy_epsilon_rate(energy_study):
    result, elapsed = energy_study
    _report("energy", result)
    assert all(r.trusted for r in result.rows)
    print(f"energy study took {elapsed:.1f}s")
    assert elapsed < 900.0
    assert 1.7 <= result.fitted_slope <= 2.4


def test_criterion_8_freespace_consistency(green_study):
    result, _ = green_study
    spec = result.spec
    pairs = _green_pairs(spec, np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(3)[1]))
    k6 = result.bound_constants["green"]
    identity, ratios = 0.0, []
    for row, value in zip(result.rows, spec.values):
        cloud = sweep_cloud(spec.base_cloud, spec.sweep, value)
        model = build_model(cloud, FREE)
        x, y = pairs(cloud, FREE)
        diag = np.asarray(diagonal_interaction_term(model, x, y))
        gap = np.asarray(approximate_green(model, x, y)) - np.asarray(
            approximate_green_freespace(model, x, y))
        identity = max(identity, float(np.abs(gap - diag).max()))
        assert_allclose(np.abs(diag).max(), row.diagnostics["diagonal_term_sup"], rtol=1e-12)
        ratios.append(np.abs(diag).max() / (k6 * row.epsilon * row.d ** -2))
    print(f"\nidentity defect {identity:.2e}; diag / envelope = "
          + ", ".join(f"{r:.2f}" for r in ratios))
    assert identity < 1e-12
    assert max(ratios) <= 1.0


def test_criterion_9_determinism(u_study, green_study):
    for cached, quantity in ((u_study[0], "u"), (green_study[0], "green")):
        assert _csv(run_study(_spec(quantity))) == _csv(cached)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
