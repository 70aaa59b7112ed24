import json
import math

import numpy as np
import pytest

from seqbounds.estimators import violation_rate
from seqbounds.processes import ar1_process, sample_marginal, simulate_sequence
from seqbounds.scenario import (AffineMap, Ball, Box, ConstraintPiece,
                                ScenarioProgramSpec, certify,
                                one_dim_threshold_program, plan_n_margin,
                                plan_n_vc, solve_margin_program, tau_lambda,
                                violation_bound)


def two_dim_program(margin=0.5):
    # f(x, theta) = x * theta_1 + theta_2, minimize theta_1 + theta_2
    piece = ConstraintPiece(psi=AffineMap([[1.0], [0.0]], [0.0, 1.0]),
                            eta=AffineMap([[0.0]], [0.0]))
    return ScenarioProgramSpec(objective=[1.0, 1.0], pieces=(piece,),
                               theta_set=Box([-5.0, -5.0], [5.0, 5.0]),
                               margin=margin, x_domain=Box([-2.0], [2.0]))


class TestPlanners:
    def test_plan_vc_frozen(self):
        assert plan_n_vc(0.1, 1e-6, 5) == 2258
        assert plan_n_vc(0.01, 1e-9, 10) == 52526

    def test_plan_margin_frozen(self):
        assert plan_n_margin(0.1, math.exp(-1.0), 1.0, 1.0) == 900
        assert plan_n_margin(0.05, 0.1, 0.5, 2.0) == 36233

    def test_monotone_in_epsilon(self):
        for delta in (0.1, 1e-3):
            for d in (1, 4, 9):
                assert plan_n_vc(0.05, delta, d) > plan_n_vc(0.1, delta, d)
        assert plan_n_margin(0.05, 0.1, 1.0, 1.0) > plan_n_margin(0.1, 0.1, 1.0, 1.0)

    def test_margin_large_gamma_limit(self):
        eps, delta = 0.1, 0.1
        limit = math.ceil(math.log(1.0 / delta) / eps ** 2)
        assert plan_n_margin(eps, delta, 1e12, 1.0) == limit

    def test_parameter_errors(self):
        with pytest.raises(ValueError):
            plan_n_vc(0.0, 0.1, 3)
        with pytest.raises(ValueError):
            plan_n_vc(0.1, 1.0, 3)
        with pytest.raises(ValueError):
            plan_n_margin(0.1, 0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            plan_n_margin(0.1, 0.1, 1.0, 0.0)


class TestViolationBound:
    def test_vc_frozen(self):
        assert violation_bound("vc", 2258, 1e-6, d_vc=5) == pytest.approx(
            0.07587275694233535, rel=1e-12)

    def test_margin_frozen(self):
        got = violation_bound("margin", 900, math.exp(-1.0), gamma=1.0,
                              tau_lambda_sum=1.0)
        assert got == pytest.approx(0.09023689270621825, rel=1e-12)

    def test_planner_consistency_vc_grid(self):
        for eps in (0.05, 0.1, 0.2):
            for delta in (0.1, 0.01, 1e-6):
                for d in range(1, 11):
                    n = plan_n_vc(eps, delta, d)
                    assert violation_bound("vc", n, delta, d_vc=d) <= eps

    def test_planner_consistency_margin_grid(self):
        for eps in (0.05, 0.1, 0.2):
            for delta in (0.1, 0.01, 1e-6):
                for gamma in (0.1, 0.5, 1.0):
                    n = plan_n_margin(eps, delta, gamma, 1.0)
                    got = violation_bound("margin", n, delta, gamma=gamma,
                                          tau_lambda_sum=1.0)
                    assert got <= eps

    def test_method_validation(self):
        with pytest.raises(ValueError):
            violation_bound("vc", 100, 0.1)
        with pytest.raises(ValueError):
            violation_bound("other", 100, 0.1, d_vc=1)


class TestTauLambda:
    def test_constant_psi(self):
        prog = one_dim_threshold_program()
        report = tau_lambda(prog)
        assert report.taus == (1.0,)
        assert report.method == "closed_form"

    def test_ball_lambda(self):
        prog = ScenarioProgramSpec(
            objective=[1.0], pieces=one_dim_threshold_program().pieces,
            theta_set=Ball(3.0), margin=0.5)
        assert tau_lambda(prog).lambdas == (3.0,)

    def test_affine_psi_on_interval(self):
        report = tau_lambda(two_dim_program())
        assert report.taus[0] == pytest.approx(math.sqrt(5.0))

    def test_box_lambda_is_farthest_corner(self):
        prog = ScenarioProgramSpec(
            objective=[1.0, 1.0], pieces=two_dim_program().pieces,
            theta_set=Box([-1.0, -3.0], [2.0, 1.0]), margin=0.5,
            x_domain=Box([-2.0], [2.0]))
        assert tau_lambda(prog).lambdas[0] == pytest.approx(math.sqrt(4 + 9))

    def test_unbounded_domain_rejected(self):
        prog = ScenarioProgramSpec(
            objective=[1.0, 1.0], pieces=two_dim_program().pieces,
            theta_set=Box([-5.0, -5.0], [5.0, 5.0]), margin=0.5, x_domain=None)
        with pytest.raises(ValueError, match="bounded"):
            tau_lambda(prog)


class TestSolver:
    def test_one_dim_analytic_optimum(self):
        prog = one_dim_threshold_program(theta_lo=-10, theta_hi=10, margin=0.1)
        res = solve_margin_program(prog, np.array([0.2, 0.5]))
        assert res.feasible
        assert res.theta[0] == pytest.approx(0.6, abs=1e-4)
        assert res.max_violation <= 0.0

    def test_one_dim_ball_set(self):
        prog = ScenarioProgramSpec(
            objective=[1.0], pieces=one_dim_threshold_program().pieces,
            theta_set=Ball(3.0), margin=0.1)
        res = solve_margin_program(prog, np.array([0.2, 0.5]))
        assert res.feasible
        assert res.theta[0] == pytest.approx(0.6, abs=1e-4)

    def test_two_dim_analytic_optimum(self):
        # theta_2 <= -gamma - |theta_1| on scenarios {1, -1}:
        # min theta_1 + theta_2 = (gamma - 5) - 5 at theta = (gamma - 5, -5)
        gamma = 0.5
        prog = two_dim_program(margin=gamma)
        res = solve_margin_program(prog, np.array([1.0, -1.0]))
        assert res.feasible
        assert res.theta[0] == pytest.approx(gamma - 5.0, abs=1e-4)
        assert res.theta[1] == pytest.approx(-5.0, abs=1e-4)

    def test_feasibility_mode_slack_point(self):
        prog = one_dim_threshold_program(margin=0.1)
        res = solve_margin_program(prog, np.array([-3.0, -2.5]),
                                   mode="feasibility")
        assert res.feasible
        assert res.max_violation <= 0.0

    def test_contradictory_scenarios_report_residual(self):
        up = ConstraintPiece(psi=AffineMap([[0.0]], [-1.0]),
                             eta=AffineMap([[1.0]], [0.0]))
        down = ConstraintPiece(psi=AffineMap([[0.0]], [1.0]),
                               eta=AffineMap([[-1.0]], [0.0]))
        prog = ScenarioProgramSpec(objective=[1.0], pieces=(up, down),
                                   theta_set=Box([-10.0], [10.0]), margin=0.1)
        res = solve_margin_program(prog, np.array([1.0]))
        assert not res.feasible
        # best achievable max f + gamma is exactly the margin
        assert res.max_violation == pytest.approx(0.1, abs=1e-6)

    def test_feasible_flag_is_posthoc(self):
        prog = one_dim_threshold_program(margin=0.1)
        res = solve_margin_program(prog, np.array([0.0]))
        vals = prog.constraint_values(np.array([0.0]), res.theta)
        assert res.feasible == bool(np.max(vals) <= -0.1)

    def test_empty_scenarios_rejected(self):
        with pytest.raises(ValueError):
            solve_margin_program(one_dim_threshold_program(), np.array([]))


class TestCertify:
    def test_margin_certificate(self):
        prog = one_dim_threshold_program(theta_lo=-10, theta_hi=10, margin=1.0)
        spec = ar1_process(0.8, 0.6)
        cert = certify(prog, spec, 0.15, 0.1, "margin", seed=99)
        assert cert.feasible
        assert cert.violation_bound <= 0.15
        assert cert.n_used == plan_n_margin(0.15, 0.1, 1.0, 10.0)
        # the certificate's point really satisfies the margin constraints
        path = simulate_sequence(spec, cert.n_used, 99)
        vals = prog.constraint_values(path.x, np.asarray(cert.theta_hat))
        assert np.max(vals) <= -1.0

    def test_vc_certificate(self):
        prog = one_dim_threshold_program(theta_lo=-10, theta_hi=10, margin=1.0)
        spec = ar1_process(0.8, 0.6)
        cert = certify(prog, spec, 0.15, 0.1, "vc", seed=101)
        assert cert.feasible
        assert cert.n_used == plan_n_vc(0.15, 0.1, 1)
        assert cert.violation_bound <= 0.15
        ghost = sample_marginal(spec, 10_000, 101)
        assert violation_rate(np.asarray(cert.theta_hat), prog, ghost) <= 0.15

    def test_infeasible_program_certificate(self):
        up = ConstraintPiece(psi=AffineMap([[0.0]], [-1.0]),
                             eta=AffineMap([[1.0]], [0.0]))
        down = ConstraintPiece(psi=AffineMap([[0.0]], [1.0]),
                               eta=AffineMap([[-1.0]], [0.0]))
        prog = ScenarioProgramSpec(objective=[1.0], pieces=(up, down),
                                   theta_set=Box([-10.0], [10.0]), margin=0.5,
                                   indicator_vc_dim=1)
        cert = certify(prog, ar1_process(0.5, 1.0), 0.2, 0.1, "vc", seed=4)
        assert not cert.feasible
        assert cert.violation_bound is None

    def test_parameter_errors(self):
        prog = one_dim_threshold_program()
        spec = ar1_process(0.5, 1.0)
        with pytest.raises(ValueError):
            certify(prog, spec, 1.5, 0.1, "margin", seed=1)
        with pytest.raises(ValueError):
            certify(prog, spec, 0.1, 0.1, "other", seed=1)
        bare = ScenarioProgramSpec(objective=[1.0], pieces=prog.pieces,
                                   theta_set=Box([-5.0], [5.0]), margin=1.0)
        with pytest.raises(ValueError, match="VC dimension"):
            certify(bare, spec, 0.1, 0.1, "vc", seed=1)


class TestSerialization:
    def test_program_json_roundtrip(self):
        prog = two_dim_program()
        back = ScenarioProgramSpec.from_json(prog.to_json())
        assert np.array_equal(back.objective, prog.objective)
        assert back.margin == prog.margin
        xs = np.array([[0.5], [-1.0]])
        theta = np.array([0.7, -0.3])
        assert np.allclose(back.constraint_values(xs, theta),
                           prog.constraint_values(xs, theta))

    def test_program_unknown_fields_rejected(self):
        d = one_dim_threshold_program().to_dict()
        d["surprise"] = 1
        with pytest.raises(ValueError):
            ScenarioProgramSpec.from_dict(d)

    def test_certificate_json(self):
        prog = one_dim_threshold_program(margin=1.0)
        cert = certify(prog, ar1_process(0.8, 0.6), 0.3, 0.2, "margin", seed=2)
        payload = json.loads(cert.to_json())
        assert payload["feasible"] is True
        assert payload["method"] == "margin"
        assert payload["n_used"] == cert.n_used
