import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mesoscale.errors import StepTooLarge
from mesoscale.experiments import (
    CSV_COLUMNS,
    SamplePlan,
    SampleSpec,
    StudySpec,
    emit_report,
    empty_result,
    estimate_energy,
    fit_slope,
    monotone_in_epsilon,
    run_study,
    sweep_cloud,
)
from mesoscale.fields import build_model, correction_field
from mesoscale.geometry import AmbientDomain, CloudSpec, cloud_from_arrays
from mesoscale.kernels import unperturbed_gradient
from mesoscale.oracle import oracle_solve, solve_u

FREE = AmbientDomain.free_space()
BASE = CloudSpec("lattice", radius=1e-3, spacing=0.5, n_per_axis=2)


def small_spec(bump_source, **kw):
    args = dict(sweep="epsilon", values=(8e-4, 1.6e-3), base_cloud=BASE, source=bump_source,
                samples=SampleSpec(count=60, pairs=10), seed=5)
    args.update(kw)
    return StudySpec(**args)


def test_fit_slope_recovers_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = fit_slope(x, 3.0 * x ** 1.5)
    assert_allclose(fit.slope, 1.5, rtol=1e-12)
    assert fit.ci_low - 1e-12 <= 1.5 <= fit.ci_high + 1e-12
    noisy = fit_slope(x, 3.0 * x ** 1.5 * np.array([1.0, 1.1, 0.9, 1.05]))
    assert noisy.ci_low < noisy.slope < noisy.ci_high
    assert fit_slope([1.0], [2.0]) is None
    assert math.isnan(fit_slope([1.0, 2.0], [1.0, 2.0]).ci_low)


def test_spec_validation(bump_source):
    with pytest.raises(ValueError):
        small_spec(bump_source, values=(1e-3, 4e-4, 8e-4))
    with pytest.raises(ValueError):
        small_spec(bump_source, quantity="flux")
    with pytest.raises(ValueError):
        small_spec(None)
    spec = small_spec(bump_source)
    assert StudySpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_sweep_cloud_modes():
    assert_allclose(sweep_cloud(BASE, "epsilon", 2e-3).radii, 1e-3)
    assert_allclose(sweep_cloud(BASE, "d", 0.5).centers.max(), 0.5)
    assert len(sweep_cloud(BASE, "N", 27)) == 27
    assert len(sweep_cloud(BASE, "N", 0)) == 0
    with pytest.raises(ValueError):
        sweep_cloud(BASE, "N", 10)


def test_sample_plan_shared_across_sweep(lattice8):
    plan = SamplePlan.draw(np.random.default_rng(0), 20, 20)
    pts_a = plan.realize(lattice8, FREE)
    pts_b = plan.realize(lattice8.with_radii(2e-3), FREE)
    assert pts_a.shape == (40, 3)
    gap_a = np.linalg.norm(pts_a[:20, None] - lattice8.centers, axis=-1).min(axis=1) / 1e-3
    gap_b = np.linalg.norm(pts_b[:20, None] - lattice8.centers, axis=-1).min(axis=1) / 2e-3
    assert_allclose(gap_a, gap_b, rtol=1e-12)
    assert gap_a.min() >= 1.0 and gap_a.max() <= 2.0
    far = np.linalg.norm(pts_a[20:, None] - lattice8.centers, axis=-1).min(axis=1)
    assert far.min() > 2e-3


def test_u_study_rows_and_slope(bump_source):
    res = run_study(small_spec(bump_source))
    assert len(res.rows) == 2 and all(r.trusted for r in res.rows)
    assert 0.8 < res.fitted_slope < 1.3
    assert monotone_in_epsilon(res)
    assert res.bound_constants["uniform"] > 0


def test_empty_cloud_sweep(bump_source):
    spec = small_spec(bump_source, sweep="N", values=(0,))
    res = run_study(spec)
    assert res.rows[0].sup_error < 1e-10
    assert res.fitted_slope is None


def test_report_files_and_determinism(tmp_path, bump_source):
    spec = small_spec(bump_source, quantity="green")
    a = emit_report(run_study(spec), tmp_path / "a")
    b = emit_report(run_study(spec), tmp_path / "b")
    assert a["rows"].read_bytes() == b["rows"].read_bytes()
    assert a["summary"].read_bytes() == b["summary"].read_bytes()
    lines = a["rows"].read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    summary = json.loads(a["summary"].read_text())
    assert math.isfinite(summary["fitted_slope"])
    assert summary["excluded_rows"] == []


def test_threads_do_not_change_output(tmp_path, bump_source):
    spec = small_spec(bump_source)
    a = emit_report(run_study(spec), tmp_path / "a")
    b = emit_report(run_study(StudySpec.from_dict({**spec.to_dict(), "threads": 2})), tmp_path / "b")
    assert a["rows"].read_bytes() == b["rows"].read_bytes()


def test_empty_report(tmp_path, bump_source):
    files = emit_report(empty_result(small_spec(bump_source)), tmp_path)
    assert files["rows"].read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert json.loads(files["summary"].read_text())["fitted_slope"] is None


def _single(a=1e-3):
    return cloud_from_arrays([[0.3, 0.0, 0.0]], a)


def test_energy_step_too_large(bump_source):
    cloud = _single()
    model = build_model(cloud, FREE, bump_source)
    sol = solve_u(cloud, FREE, bump_source)
    with pytest.raises(StepTooLarge):
        estimate_energy(model, sol, 100, fd_step=0.5e-3)


def test_energy_single_sphere_dipole(bump_source):
    # the remainder is the dipole -a^3 g.(x-O)/r^3 up to curvature of v_f;
    # its gradient energy outside the ball is (8 pi / 3) a^3 |g|^2
    a = 1e-3
    cloud = _single(a)
    model = build_model(cloud, FREE, bump_source)
    sol = solve_u(cloud, FREE, bump_source)
    est = estimate_energy(model, sol, 20_000, seed=3)
    g = np.linalg.norm(unperturbed_gradient(FREE, bump_source, cloud.centers[0]))
    expected = math.sqrt(8 * math.pi / 3) * a ** 1.5 * g
    assert_allclose(est.value, expected, rtol=0.02)
    assert est.stderr < 0.01 * est.value


def test_energy_of_identical_fields(bump_source, lattice8):
    model = build_model(lattice8, FREE, bump_source)
    own = oracle_solve(lattice8, FREE, lambda p: correction_field(model, p, check=False))
    real = solve_u(lattice8, FREE, bump_source)
    zero = estimate_energy(model, own, 4000, seed=1).value
    ref = estimate_energy(model, real, 4000, seed=1).value
    assert zero < 1e-6 * ref


def test_energy_mc_self_consistency(bump_source, lattice8):
    model = build_model(lattice8, FREE, bump_source)
    sol = solve_u(lattice8, FREE, bump_source)
    small = estimate_energy(model, sol, 8000, seed=11)
    big = estimate_energy(model, sol, 16000, seed=11)
    assert abs(big.value - small.value) <= 2 * small.stderr / math.sqrt(2)
