"""Independent certification: closed loops, margins, sweeps, feasibility,
impulse responses."""

import math

import numpy as np
import numpy.testing as npt
import pytest

import hinfgcc as hg
from hinfgcc.verify import ClosedLoop

from conftest import (
    PUBLISHED_EX1,
    PUBLISHED_EX2,
    make_example1_plant,
    make_example2_plant,
    make_toy_plant,
)


class TestClosedLoop:
    def test_zero_gain_is_open_loop(self):
        plant = make_example1_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), np.zeros((1, 3)))
        npt.assert_array_equal(cl.ac, plant.A)
        npt.assert_array_equal(cl.cc, plant.C)

    def test_published_gain_stabilizes_aircraft(self):
        plant = make_example1_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), PUBLISHED_EX1["K_star"])
        assert hg.stability_margin(cl) < 0

    def test_scalar_toy_hand_arithmetic(self):
        plant = make_toy_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), [[1.0]])
        npt.assert_allclose(cl.ac, [[-2.0]])
        npt.assert_allclose(cl.cc, [[1.0], [-1.0]])

    def test_gain_shape_checked(self):
        plant = make_toy_plant()
        with pytest.raises(hg.DimensionError):
            hg.closed_loop(plant, (plant.A, plant.B2), np.zeros((2, 2)))


class TestStabilityMargin:
    def test_negative_identity(self):
        assert hg.stability_margin(ClosedLoop(-np.eye(3), np.eye(3), np.eye(3))) == pytest.approx(-1.0)

    def test_marginal_rotation(self):
        rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert hg.stability_margin(ClosedLoop(rot, np.eye(2), np.eye(2))) == pytest.approx(0.0, abs=1e-12)

    def test_all_256_vertices_stable_under_published_gain(self, example2):
        plant = make_example2_plant()
        margins = [
            hg.stability_margin(hg.closed_loop(plant, example2.vset[i], PUBLISHED_EX2["K_star"], i))
            for i in range(example2.vset.N)
        ]
        assert max(margins) < 0

    def test_open_loop_nominal_unstable(self):
        # the 2-state plant has a positive eigenvalue, so K = 0 must be flagged
        plant = make_example2_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), np.zeros((2, 2)))
        assert hg.stability_margin(cl) > 0


class TestHinfSweep:
    def test_aircraft_peak_matches_published_diagram(self):
        plant = make_example1_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), PUBLISHED_EX1["K_star"])
        sweep = hg.hinf_sweep(cl)
        peak_db = 20 * math.log10(sweep.peak)
        assert abs(peak_db - PUBLISHED_EX1["sweep_peak_db"]) <= 0.1
        assert sweep.peak == pytest.approx(PUBLISHED_EX1["sweep_peak"], abs=5e-4)

    def test_uncertain_example_lower_vertex_peak_matches_published_diagram(self, example2):
        # the published diagram corresponds to the all-lower-bounds extreme
        # system, which is vertex 0 in enumeration order
        plant = make_example2_plant()
        cl = hg.closed_loop(plant, example2.vset[0], PUBLISHED_EX2["K_star"], 0)
        sweep = hg.hinf_sweep(cl)
        peak_db = 20 * math.log10(sweep.peak)
        assert abs(peak_db - PUBLISHED_EX2["sweep_peak_db"]) <= 0.1

    def test_scalar_toy_closed_form(self):
        plant = make_toy_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), [[1.0]])
        sweep = hg.hinf_sweep(cl)
        # |H(jw)| = sqrt(2)/sqrt(w^2+4) peaks at low frequency
        assert sweep.peak == pytest.approx(math.sqrt(2) / 2, rel=1e-6)
        assert sweep.peak_frequency <= 2e-3

    def test_flat_first_order_curve(self):
        cl = ClosedLoop(-np.eye(2), np.eye(2), np.eye(2))
        sweep = hg.hinf_sweep(cl)
        expected = 1.0 / np.sqrt(1.0 + sweep.frequencies**2)
        npt.assert_allclose(sweep.sigma_max, expected, rtol=1e-9)
        assert sweep.sigma_max[0] == pytest.approx(1.0, abs=1e-5)
        assert sweep.peak <= 1.0 + 1e-12

    def test_grid_refinement_never_loses_the_peak(self):
        plant = make_example1_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), PUBLISHED_EX1["K_star"])
        coarse = hg.hinf_sweep(cl, npts=200)
        fine = hg.hinf_sweep(cl, npts=400)
        assert fine.peak >= coarse.peak * (1 - 1e-6)
        assert coarse.peak >= max(coarse.sigma_max)

    def test_unstable_loop_warns(self):
        cl = ClosedLoop(np.array([[1.0]]), np.eye(1), np.eye(1))
        with pytest.warns(UserWarning, match="not asymptotically stable"):
            hg.hinf_sweep(cl, npts=16)

    def test_singular_grid_point_skipped_with_warning(self):
        # marginal rotation: the pencil is exactly singular at omega = 1,
        # which the grid below hits on its first point
        rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
        cl = ClosedLoop(rot, np.eye(2), np.eye(2))
        with pytest.warns(UserWarning) as record:
            sweep = hg.hinf_sweep(cl, fmin=1.0, fmax=100.0, npts=64)
        messages = [str(w.message) for w in record]
        assert any("singular" in m for m in messages)
        assert any("not asymptotically stable" in m for m in messages)
        assert np.all(np.isfinite(sweep.sigma_max))
        assert sweep.frequencies.size == 63

    def test_bad_grid_rejected(self):
        cl = ClosedLoop(-np.eye(1), np.eye(1), np.eye(1))
        with pytest.raises(hg.DimensionError):
            hg.hinf_sweep(cl, fmin=1.0, fmax=0.1)


class TestCheckFeasibility:
    def test_toy_optimum_is_exactly_feasible(self, toy):
        w_star = np.array([[1.0, 1.0], [1.0, 2.0]])
        report = hg.check_feasibility(toy.ext, w_star, 2.0, tol=1e-6)
        assert report.passed
        assert report.worst_vertex.theta1_max_eig == pytest.approx(0.0, abs=1e-12)

    def test_zero_w_with_positive_mu_fails(self, example1):
        report = hg.check_feasibility(example1.ext, np.zeros((4, 4)), 1.0, tol=1e-6)
        assert not report.passed
        # the block reduces to B1 B1^T = I: max eigenvalue 1
        assert report.worst_vertex.theta1_max_eig == pytest.approx(1.0)

    def test_solver_output_cross_check(self, toy, toy_solution):
        report = hg.check_feasibility(toy.ext, toy_solution.W_star, toy_solution.mu_star, tol=1e-5)
        assert report.passed
        assert report.mu > 0

    def test_nonpositive_mu_fails_overall(self, toy):
        w_star = np.array([[1.0, 1.0], [1.0, 2.0]])
        report = hg.check_feasibility(toy.ext, w_star, 0.0, tol=1e-6)
        assert not report.passed

    def test_per_vertex_rows_cover_all_vertices(self, example2):
        report = hg.check_feasibility(example2.ext, np.eye(4), 0.1, tol=1e-6)
        assert len(report.per_vertex) == 256
        assert [row.vertex for row in report.per_vertex] == list(range(256))


class TestCertifiedAttenuation:
    def test_toy_certificate_is_exact(self, toy):
        w_star = np.array([[1.0, 1.0], [1.0, 2.0]])
        mu_c, gamma_c = hg.certified_attenuation(toy.ext, w_star)
        assert mu_c == pytest.approx(2.0, rel=1e-9)
        assert gamma_c == pytest.approx(1 / math.sqrt(2.0), rel=1e-9)

    def test_certificate_is_feasible(self, toy, toy_solution):
        mu_c, _ = hg.certified_attenuation(toy.ext, toy_solution.W_star)
        report = hg.check_feasibility(toy.ext, toy_solution.W_star, mu_c, tol=1e-9)
        assert all(v.feasible for v in report.per_vertex)

    def test_infeasible_w_returns_none(self, toy):
        # W = 0 forces the stability block to mu * B1 B1^T which is never <= 0
        assert hg.certified_attenuation(toy.ext, np.zeros((2, 2))) is None

    def test_feasible_pair_bounds_every_vertex_norm(self, toy):
        # feasibility at tol 1e-8 with mu > 0 implies the sweep peak of the
        # extracted gain stays below (1/sqrt(mu)) * 1.01
        w_star = np.array([[1.0, 1.0], [1.0, 2.0]])
        mu = 2.0
        report = hg.check_feasibility(toy.ext, w_star, mu, tol=1e-8)
        assert report.passed
        gain = hg.extract_gain(w_star, 1, 1)
        peak = hg.hinf_sweep(hg.closed_loop(toy.plant, toy.vset[0], gain)).peak
        assert peak <= (1.0 / math.sqrt(mu)) * 1.01


class TestImpulseResponse:
    def test_scalar_exponential(self):
        cl = ClosedLoop(np.array([[-1.0]]), np.eye(1), np.eye(1))
        resp = hg.impulse_response(cl, horizon=5.0, dt=1e-3)
        expected = np.exp(-resp.t)
        assert np.abs(resp.states[0, :, 0] - expected).max() <= 1e-6

    def test_channels_are_independent(self):
        cl = ClosedLoop(-np.eye(2), np.eye(2), np.eye(2))
        resp = hg.impulse_response(cl, horizon=2.0, dt=1e-3)
        for j in range(2):
            npt.assert_allclose(resp.states[j, :, j], np.exp(-resp.t), atol=1e-8)
            other = 1 - j
            npt.assert_allclose(resp.states[j, :, other], 0.0, atol=1e-12)

    def test_aircraft_loop_decays_past_slowest_mode(self):
        # decay-rate oracle: ||exp(A t)|| <= kappa(V) exp(margin t), so pick
        # the horizon where that envelope drops below 1e-3
        plant = make_example1_plant()
        cl = hg.closed_loop(plant, (plant.A, plant.B2), PUBLISHED_EX1["K_star"])
        margin = hg.stability_margin(cl)
        assert margin < 0
        _, vecs = np.linalg.eig(cl.ac)
        kappa = np.linalg.cond(vecs)
        horizon = math.log(1e3 * kappa) / abs(margin)
        resp = hg.impulse_response(cl, horizon=horizon, dt=1e-3)
        x0 = np.linalg.norm(resp.states[:, 0, :], axis=1)
        xT = np.linalg.norm(resp.states[:, -1, :], axis=1)
        assert np.all(xT <= 1e-3 * x0)

    def test_fourth_order_convergence(self):
        rng = np.random.default_rng(30)
        for _ in range(5):
            m = rng.standard_normal((3, 3))
            ac = -(m @ m.T) / 2.0 - 0.25 * np.eye(3)
            b1 = rng.standard_normal((3, 2))
            cl = ClosedLoop(ac, np.eye(3), b1)
            horizon, dt = 2.0, 0.05
            ref = hg.impulse_response(cl, horizon, dt=dt / 8)
            coarse = hg.impulse_response(cl, horizon, dt=dt)
            fine = hg.impulse_response(cl, horizon, dt=dt / 2)
            # compare against the dt/8 reference at shared sample times
            err_coarse = np.abs(coarse.states - ref.states[:, ::8, :]).max()
            err_fine = np.abs(fine.states - ref.states[:, ::4, :]).max()
            assert err_fine <= err_coarse / 8.0

    def test_bad_step_rejected(self):
        cl = ClosedLoop(-np.eye(1), np.eye(1), np.eye(1))
        with pytest.raises(hg.DimensionError):
            hg.impulse_response(cl, horizon=1.0, dt=0.0)
