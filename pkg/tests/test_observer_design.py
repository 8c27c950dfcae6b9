import json
import math

import numpy as np
import pytest

from parobs import profiles as pf
from parobs.errors import (
    DimensionMismatch,
    InfeasibleAtZero,
    KappaOutOfRange,
    NoFeasibleQ,
    NotHurwitz,
    PlacementImpossible,
    QInfeasible,
)
from parobs.observer_design import (
    OutputChannel,
    build_A,
    certificate_defects,
    coupling_constant_K,
    design_from_json,
    design_to_json,
    injection_kernels,
    lyapunov_certificate,
    make_design,
    max_diameter,
    place_gain,
    recompute_omega,
    select_Q,
    small_gain_predictor,
    small_gain_zoh,
)
from parobs.sturm_liouville import SLProblem, analytic_eigensystem, project


class TestBuildA:
    def test_worked_example_neumann(self):
        A = build_A([0.0], np.array([[-math.pi**2]]), np.array([[0.5]]))
        assert A[0, 0] == pytest.approx(-math.pi**2 / 2.0, rel=1e-15)

    def test_worked_example_boundary(self):
        p, q = 1.3, 2.0
        lam1 = p * math.pi**2 / 4.0 + q
        L = np.array([[math.pi * (4 * q - 7 * p * math.pi**2) / (16 * math.sqrt(2))]])
        C = np.array([[2.0 * math.sqrt(2.0) / math.pi]])
        A = build_A([lam1], L, C)
        assert A[0, 0] == pytest.approx(-9 * p * math.pi**2 / 8 - q / 2, rel=1e-14)

    def test_zero_gain_is_diagonal(self):
        A = build_A([1.0, 2.0], np.zeros((2, 1)), np.ones((1, 2)))
        np.testing.assert_allclose(A, np.diag([-1.0, -2.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_A([1.0, 2.0], np.zeros((3, 1)), np.ones((1, 2)))
        with pytest.raises(DimensionMismatch):
            build_A([1.0, 2.0], np.zeros((2, 1)), np.ones((1, 1)))


class TestInjectionKernels:
    def test_constant_kernel(self, nn_basis):
        samples, norms = injection_kernels(np.array([[-math.pi**2]]), nn_basis)
        np.testing.assert_allclose(samples[0], -math.pi**2, rtol=1e-15)
        assert norms[0] == pytest.approx(math.pi**2, rel=1e-15)

    def test_boundary_design_kernel(self, ex32_design):
        basis = ex32_design.basis
        samples, norms = injection_kernels(ex32_design.L, basis)
        expected = math.pi * (-7 * math.pi**2) / 16.0 * np.cos(math.pi * basis.grid / 2.0)
        np.testing.assert_allclose(samples[0], expected, rtol=1e-13)

    def test_zero_gain(self, nn_basis):
        samples, norms = injection_kernels(np.zeros((2, 1)), nn_basis)
        assert np.all(samples == 0.0)
        assert norms[0] == 0.0


class TestCouplingConstant:
    def test_vanishes_for_span_of_head_modes(self, ex31_design, ex32_design):
        assert ex31_design.K < 1e-12
        assert ex32_design.K < 1e-12

    def test_single_tail_mode_gives_one(self, nn_basis):
        coeffs = project(nn_basis.functions[1], nn_basis)  # c = phi_2, N = 1
        rep = coupling_constant_K(coeffs[None, :], N=1)
        assert rep.value == pytest.approx(1.0, rel=1e-12)


class TestLyapunovCertificate:
    def test_scalar_case_matches_worked_design(self):
        P, sigma = lyapunov_certificate(np.array([[-math.pi**2 / 2.0]]), sigma_fraction=1.0)
        np.testing.assert_allclose(P, [[1.0]])
        assert sigma == pytest.approx(math.pi**2 / 2.0)

    def test_postconditions_hold(self):
        A = np.array([[-1.0, 0.5], [0.0, -3.0]])
        P, sigma = lyapunov_certificate(A, sigma_fraction=0.5)
        d = certificate_defects(A, P, sigma)
        assert d["p_min"] >= 1.0 - 1e-10
        assert d["decay_slack"] <= 1e-10

    def test_diagonal_case(self):
        A = np.diag([-1.0, -3.0])
        P, sigma = lyapunov_certificate(A, sigma_fraction=0.5)
        assert sigma == pytest.approx(0.5)
        M = P @ A + A.T @ P + 2 * sigma * P
        assert np.max(np.linalg.eigvalsh(0.5 * (M + M.T))) <= 1e-10
        assert np.min(np.linalg.eigvalsh(P)) >= 1.0 - 1e-10

    def test_rejects_unstable(self):
        with pytest.raises(NotHurwitz):
            lyapunov_certificate(np.array([[0.2]]), 0.9)


class TestSmallGain:
    def test_predictor_formula_on_lattice(self, ex31_design):
        p = 1.0
        mu = ex31_design.mu
        for h in np.linspace(0.05, 0.6, 7):
            for w in np.linspace(0.0, 0.9, 7):
                rep = small_gain_predictor(ex31_design, h, w * mu)
                ref = math.exp(w * p * math.pi**2 * h / 2.0) / math.sqrt(6.0 * (1.0 - w))
                assert rep.omega == pytest.approx(ref, rel=1e-12)

    def test_predictor_h_independent_at_zero_kappa(self, ex31_design):
        vals = [small_gain_predictor(ex31_design, h, 0.0).omega for h in (0.1, 1.0, 10.0)]
        np.testing.assert_allclose(vals, 1.0 / math.sqrt(6.0), rtol=1e-12)

    def test_zoh_formula(self, ex31_design):
        rep = small_gain_zoh(ex31_design, 0.05, 0.0)
        assert rep.omega == pytest.approx((0.05 * math.pi**2 + 1.0) / math.sqrt(6.0), rel=1e-12)

    def test_zero_injection_design_gives_zero(self):
        # positive reaction keeps A = [-lambda_1] Hurwitz with zero gain
        problem = SLProblem(p=1.0, q=1.0, a0=0, b0=1, a1=0, b1=1)
        basis = analytic_eigensystem(problem, 10, 501)
        ch = OutputChannel(kernel=pf.constant(0.5), approximant=pf.constant(0.5))
        d = make_design(problem, basis, [ch], np.array([[0.0]]), N=1, Q=2.0,
                        P=np.array([[1.0]]), sigma=0.5)
        assert small_gain_predictor(d, 0.5, 0.0).omega == 0.0

    def test_kappa_out_of_range(self, ex31_design):
        with pytest.raises(KappaOutOfRange):
            small_gain_predictor(ex31_design, 0.5, ex31_design.mu)

    def test_infeasible_report_carries_inf_coefficients(self, ex31_design):
        rep = small_gain_zoh(ex31_design, 10.0, 0.0)
        assert not rep.feasible
        assert math.isinf(rep.coefficients.initial)


class TestMaxDiameter:
    def test_zoh_closed_form_root(self, ex31_design):
        h_star = max_diameter(ex31_design, 0.0, "zoh")
        assert h_star == pytest.approx((math.sqrt(6.0) - 1.0) / math.pi**2, rel=1e-10)

    def test_predictor_unbounded_at_zero_kappa(self, ex31_design):
        assert math.isinf(max_diameter(ex31_design, 0.0, "predictor"))

    def test_predictor_bounded_at_positive_kappa(self, ex31_design):
        kappa = 0.3 * ex31_design.mu
        h_star = max_diameter(ex31_design, kappa, "predictor")
        assert math.isfinite(h_star)
        assert small_gain_predictor(ex31_design, h_star * 0.999, kappa).feasible
        assert not small_gain_predictor(ex31_design, h_star * 1.001, kappa).feasible

    def test_infeasible_at_zero(self, nn_problem, nn_basis):
        # kernel far from its approximant: Omega(0+) > 1 already
        ch = OutputChannel(kernel=pf.polynomial([0.0, 10.0]), approximant=pf.constant(0.5))
        d = make_design(nn_problem, nn_basis, [ch], np.array([[-math.pi**2]]), N=1, Q=2.0,
                        sigma_fraction=1.0)
        with pytest.raises(InfeasibleAtZero):
            max_diameter(d, 0.0, "predictor")


class TestSelectQ:
    def test_tail_free_design_picks_two(self, ex31_design):
        q, omega = select_Q(ex31_design, [2.0, 3.0, 5.0, 10.0], h=0.3, kappa=0.0, variant="predictor")
        assert q == 2.0
        assert omega == pytest.approx(1.0 / math.sqrt(6.0), rel=1e-12)

    def test_g_tilde_formula_at_zero_coupling(self, ex31_design):
        # with no tail coupling, g~ = max(|P|/sigma, Q/(2 lambda_2)); larger Q only hurts
        base = ex31_design.g_tilde
        assert base == pytest.approx(
            max(ex31_design.P_norm / ex31_design.sigma, 1.0 / ex31_design.lam_next), rel=1e-12
        )
        grown = ex31_design.with_Q(50.0)
        assert grown.g_tilde >= base

    def test_no_feasible_q(self, nn_problem, nn_basis):
        ch = OutputChannel(kernel=pf.polynomial([0.0, 10.0]), approximant=pf.constant(0.5))
        d = make_design(nn_problem, nn_basis, [ch], np.array([[-math.pi**2]]), N=1, Q=2.0,
                        sigma_fraction=1.0)
        with pytest.raises(NoFeasibleQ):
            select_Q(d, [2.0, 4.0], h=0.5, kappa=0.0, variant="predictor")


class TestPlaceGain:
    def test_exact_for_single_mode(self):
        L = place_gain([0.0], [0.5], [-math.pi**2 / 2.0])
        assert L[0, 0] == pytest.approx(-math.pi**2, rel=1e-15)

    def test_sets_diagonal_for_two_modes(self):
        lam = [1.0, 4.0]
        c = [0.5, 0.25]
        targets = [-2.0, -5.0]
        L = place_gain(lam, c, targets)
        A = build_A(lam, L, np.array([c]))
        np.testing.assert_allclose(np.diag(A), targets, rtol=1e-14)

    def test_placement_impossible(self):
        with pytest.raises(PlacementImpossible):
            place_gain([1.0, 2.0], [0.5, 0.0], [-1.0, -2.0])


def _random_design(rng, with_tail=True):
    """Small random design on the Neumann basis with verified certificate."""
    problem = SLProblem(p=float(rng.uniform(0.5, 2.0)), q=0.0, a0=0, b0=1, a1=0, b1=1)
    basis = analytic_eigensystem(problem, 30, 601)
    N = int(rng.integers(1, 3))
    coeffs = rng.uniform(0.3, 1.0, size=N)
    tail = [0.0, float(rng.uniform(0.05, 0.3))] if with_tail else [0.0, 0.0]
    c = coeffs[0] * pf.constant(1.0)
    parts = [pf.constant(1.0), pf.cosine(math.sqrt(2.0), math.pi)]
    tails = [pf.cosine(math.sqrt(2.0), (N + k) * math.pi) for k in (1, 2)]
    c = coeffs[0] * parts[0]
    if N > 1:
        c = c + coeffs[1] * parts[1]
    for amp, prof in zip(tail, tails):
        c = c + amp * prof
    k = c + float(rng.uniform(0.02, 0.1)) * pf.polynomial([-0.5, 1.0])
    targets = -rng.uniform(1.0, 4.0, size=N) * problem.p
    L = place_gain(basis.eigenvalues[:N], project(c, basis, N), targets)
    return make_design(
        problem, basis, [OutputChannel(kernel=k, approximant=c)], L, N=N,
        sigma_fraction=0.9, lipschitz_R=float(rng.uniform(0.0, 0.05)),
    )


class TestCertificateProperties:
    def test_omega_monotone_in_h_and_kappa(self, rng):
        for _ in range(5):
            d = _random_design(rng)
            kappas = np.linspace(0.0, 0.9 * d.mu, 10)
            hs = np.linspace(0.01, 0.8, 10)
            for variant, fn in (("predictor", small_gain_predictor), ("zoh", small_gain_zoh)):
                grid_vals = np.array([[fn(d, h, k).omega for h in hs] for k in kappas])
                assert np.all(np.diff(grid_vals, axis=1) >= -1e-13), variant
                assert np.all(np.diff(grid_vals, axis=0) >= -1e-13), variant

    def test_zoh_dominates_predictor(self, rng):
        for _ in range(5):
            d = _random_design(rng)
            for h in (0.05, 0.3, 1.0):
                for k in (0.0, 0.5 * d.mu):
                    assert small_gain_zoh(d, h, k).omega >= small_gain_predictor(d, h, k).omega - 1e-14

    def test_certificate_soundness(self, rng, ex31_design, ex32_design):
        designs = [ex31_design, ex32_design] + [_random_design(rng) for _ in range(5)]
        for d in designs:
            defects = certificate_defects(d.A, d.P, d.sigma)
            assert defects["abscissa"] < 0.0
            assert defects["p_min"] >= 1.0 - 1e-10
            assert defects["decay_slack"] <= 1e-10
            # A is recomputable from the defining formula
            A2 = build_A(d.basis.eigenvalues[: d.N], d.L, d.c_coeffs)
            np.testing.assert_allclose(A2, d.A, rtol=0, atol=1e-13)

    def test_omega_recompute_determinism(self, rng):
        d = _random_design(rng)
        for variant, fn in (("predictor", small_gain_predictor), ("zoh", small_gain_zoh)):
            rep = fn(d, 0.21, 0.4 * d.mu)
            assert abs(recompute_omega(d, rep) - rep.omega) <= 1e-12

    def test_omega_monotone_under_p_scaling(self, rng):
        # tail-free designs: the head branch of g~ stays active, so growing P
        # can only grow gamma and hence Omega
        for _ in range(3):
            d = _random_design(rng, with_tail=False)
            omegas = []
            for alpha in (1.0, 2.0, 5.0):
                scaled = d.with_certificate(alpha * d.P, d.sigma)
                defects = certificate_defects(scaled.A, scaled.P, scaled.sigma)
                assert defects["decay_slack"] <= 1e-9 * max(1.0, defects["p_norm"])
                omegas.append(small_gain_predictor(scaled, 0.2, 0.0).omega)
            assert omegas[0] <= omegas[1] + 1e-13
            assert omegas[1] <= omegas[2] + 1e-13


class TestDesignValidation:
    def test_rejects_approximant_outside_domain(self, nn_problem, nn_basis):
        # x does not satisfy the Neumann conditions
        ch = OutputChannel(kernel=pf.constant(0.5), approximant=pf.polynomial([0.0, 1.0]))
        with pytest.raises(ValueError, match="Robin"):
            make_design(nn_problem, nn_basis, [ch], np.array([[-1.0]]), N=1)

    def test_q_constraint(self, ex31_design):
        with pytest.raises(QInfeasible):
            ex31_design.with_Q(1.5)


def test_design_json_roundtrip(tmp_path, ex31_design):
    doc = design_to_json(ex31_design)
    text = json.dumps(doc)
    rebuilt = design_from_json(json.loads(text))
    np.testing.assert_allclose(rebuilt.A, ex31_design.A, rtol=1e-14)
    assert rebuilt.sigma == pytest.approx(ex31_design.sigma)
    o1 = small_gain_predictor(ex31_design, 0.4, 0.1).omega
    o2 = small_gain_predictor(rebuilt, 0.4, 0.1).omega
    assert o1 == pytest.approx(o2, rel=1e-13)
