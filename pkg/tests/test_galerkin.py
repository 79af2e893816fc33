"""Assembly, least-squares fits, and the SPD solve chain.

Small systems are checked against Cramer's rule and characteristic-polynomial
roots; assembled matrices are checked against the form evaluations that
test_forms pins to hand-computed integrals.
"""

import numpy as np
import pytest

from galnn.forms import (
    ExactSolution,
    FormTerm,
    LoadSpec,
    SampleBundle,
    bilinear,
    build_problem,
    energy_norm,
    load,
    load_functional,
    residual_functional,
)
from galnn.galerkin import (
    LsqResult,
    assemble_gram,
    build_stacks,
    condition_number,
    functional_vector,
    galerkin_lsq,
    slot_bundle,
    solve_on_basis,
    spd_solve,
)
from galnn.network import ActivationSpec, ShallowNetwork, eval_stack, init_hidden
from tests.test_forms import custom_problem, random_net, unit_interval_rules


def unit_network(W, b, j, act):
    c = np.zeros(W.shape[1])
    c[j] = 1.0
    return ShallowNetwork(W, b, c, act)


class TestSpdSolve:
    def test_two_by_two_cramer(self):
        K = np.array([[2.0, 1.0], [1.0, 2.0]])
        F = np.array([5.0, 4.0])
        # Cramer: det = 3, c = ((5*2 - 4*1)/3, (2*4 - 1*5)/3)
        assert np.allclose(spd_solve(K, F), [2.0, 1.0], rtol=0, atol=1e-14)

    def test_barely_indefinite_gets_jitter(self):
        K = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-17]])
        F = np.array([1.0, 1.0])
        c = spd_solve(K, F)
        assert np.all(np.isfinite(c))
        assert np.linalg.norm(K @ c - F) < 1e-6

    def test_rank_deficient_truncates(self):
        v = np.array([3.0, 4.0])
        K = np.outer(v, v)
        y = np.array([0.2, -0.1])
        F = K @ y
        c = spd_solve(K, F)
        assert np.linalg.norm(K @ c - F) < 1e-12

    def test_zero_matrix(self):
        c = spd_solve(np.zeros((3, 3)), np.ones(3))
        assert np.all(c == 0.0)


class TestConditionNumber:
    def test_known_spectrum_under_rotation(self):
        # Householder reflection leaves eigenvalues of diag(1, 2, 4) alone
        v = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
        Q = np.eye(3) - 2.0 * np.outer(v, v)
        K = Q @ np.diag([1.0, 2.0, 4.0]) @ Q.T
        value, pd = condition_number(K)
        assert pd
        assert abs(value - 4.0) < 1e-12

    def test_against_characteristic_roots(self):
        rng = np.random.default_rng(23)
        A = rng.standard_normal((3, 3))
        K = A.T @ A + np.eye(3)
        tr = np.trace(K)
        minors = (
            K[0, 0] * K[1, 1] - K[0, 1] ** 2
            + K[0, 0] * K[2, 2] - K[0, 2] ** 2
            + K[1, 1] * K[2, 2] - K[1, 2] ** 2
        )
        lam = np.sort(np.roots([1.0, -tr, minors, -np.linalg.det(K)]).real)
        value, pd = condition_number(K)
        assert pd
        assert abs(value - lam[-1] / lam[0]) < 1e-8 * value

    def test_indefinite_flags_false(self):
        value, pd = condition_number(np.diag([1.0, -1.0]))
        assert value == np.inf and not pd

    def test_identity(self):
        assert condition_number(np.eye(4)) == (1.0, True)


class TestStacksAndAssembly:
    @pytest.mark.parametrize("name", ["string_1d", "beam_couple", "plate_2d"])
    def test_gram_matches_pairwise_bilinear(self, name):
        problem = build_problem(name)
        rng = np.random.default_rng(31)
        net = random_net(problem, rng, n=5)
        stacks = build_stacks(problem, net.weights, net.biases, net.activation)
        K = assemble_gram(problem, stacks)
        assert np.array_equal(K, K.T)
        bundles = [
            problem.sample_network(unit_network(net.weights, net.biases, j, net.activation))
            for j in range(5)
        ]
        for i in range(5):
            for j in range(5):
                direct = bilinear(problem, bundles[i], bundles[j])
                assert abs(K[i, j] - direct) < 1e-12 * (1.0 + abs(direct))

    @pytest.mark.parametrize("name", ["string_1d", "beam_couple", "plate_2d"])
    def test_functional_vector_matches_apply(self, name):
        problem = build_problem(name)
        rng = np.random.default_rng(37)
        net = random_net(problem, rng, n=4)
        func = residual_functional(problem, problem.zero_bundle())
        stacks = build_stacks(problem, net.weights, net.biases, net.activation)
        F = functional_vector(func, stacks)
        for j in range(4):
            bundle = problem.sample_network(
                unit_network(net.weights, net.biases, j, net.activation)
            )
            assert abs(F[j] - func.apply(bundle)) < 1e-12 * (1.0 + abs(F[j]))

    @pytest.mark.parametrize("name", ["beam_1d", "membrane_2d"])
    def test_slot_bundle_matches_eval_stack(self, name):
        problem = build_problem(name)
        rng = np.random.default_rng(41)
        net = random_net(problem, rng, n=6)
        stacks = build_stacks(problem, net.weights, net.biases, net.activation)
        slots = slot_bundle(problem, stacks, net.coefficients)
        direct = problem.sample_network(net)
        for role, order in problem.role_orders.items():
            f_slot, f_dir = slots.fields[role], direct.fields[role]
            assert np.allclose(f_slot.values, f_dir.values, rtol=1e-13, atol=1e-15)
            if order >= 1:
                assert np.allclose(f_slot.gradient, f_dir.gradient, rtol=1e-13, atol=1e-14)
            if order >= 2:
                assert np.allclose(f_slot.laplacian(), f_dir.laplacian(), rtol=1e-12, atol=1e-12)

    def test_param_grads_adds_one_order(self):
        problem = build_problem("string_1d")
        rng = np.random.default_rng(43)
        net = random_net(problem, rng, n=3)
        plain = build_stacks(problem, net.weights, net.biases, net.activation)
        deep = build_stacks(problem, net.weights, net.biases, net.activation, param_grads=True)
        assert len(plain.roles["interior"].s) == 2
        assert len(deep.roles["interior"].s) == 3

    def test_missing_role_in_stacks_raises(self):
        problem = build_problem("line_source_small")
        rng = np.random.default_rng(47)
        net = random_net(problem, rng, n=3)
        stacks = build_stacks(problem, net.weights, net.biases, net.activation, "validation")
        func = load_functional(problem, problem.training_rules)
        with pytest.raises(ValueError, match="interface"):
            functional_vector(func, stacks)


class TestGalerkinLsq:
    def test_eta_identities(self):
        # after K c = F: eta^2 = c . F, and eta equals both |||v||| and
        # <r, v>/|||v||| for the fitted v
        problem = build_problem("string_1d")
        rng = np.random.default_rng(53)
        net = random_net(problem, rng, n=12)
        func = residual_functional(problem, problem.zero_bundle())
        stacks = build_stacks(problem, net.weights, net.biases, net.activation)
        res = galerkin_lsq(problem, stacks, func)
        assert isinstance(res, LsqResult)
        v = slot_bundle(problem, stacks, res.coefficients)
        norm_v = energy_norm(problem, v)
        # the identity holds up to the solver error, which grows with the
        # conditioning of the unit Gram matrix
        cond, _ = condition_number(res.gram)
        tol = max(1e-12, 200.0 * np.finfo(float).eps * cond) * res.eta
        assert abs(res.eta - norm_v) < tol
        assert abs(func.apply(v) / norm_v - res.eta) < tol

    def test_lsq_maximizes_normalized_residual(self):
        problem = build_problem("string_1d")
        rng = np.random.default_rng(59)
        net = random_net(problem, rng, n=10)
        func = residual_functional(problem, problem.zero_bundle())
        stacks = build_stacks(problem, net.weights, net.biases, net.activation)
        res = galerkin_lsq(problem, stacks, func)
        for _ in range(10):
            c_other = rng.standard_normal(10)
            v = slot_bundle(problem, stacks, c_other)
            ratio = func.apply(v) / energy_norm(problem, v)
            assert ratio <= res.eta * (1.0 + 1e-10)

    def test_recovers_representable_target(self):
        # fitting a function that lies in the unit span returns its coefficients
        rules = unit_interval_rules(64)
        act = ActivationSpec("tanh", 2.0)
        W, b = init_hidden("uniform_bias_1d", 6, np.array([[0.0, 1.0]]))
        c_true = np.array([0.5, -1.0, 2.0, 0.25, -0.75, 1.5])
        target = ShallowNetwork(W, b, c_true, act)
        prob = custom_problem(
            [FormTerm("interior", "value", 1.0)],
            LoadSpec("density", density=lambda X: eval_stack(target, X, 0).values),
            rules,
        )
        func = load_functional(prob, rules)
        stacks = build_stacks(prob, W, b, act)
        res = galerkin_lsq(prob, stacks, func)
        assert np.allclose(res.coefficients, c_true, rtol=1e-8, atol=1e-10)


class TestSolveOnBasis:
    def test_orthogonal_modes_decouple(self):
        # sine modes are L2-orthogonal with norm 1/2, so K is diag(1/2) and
        # the coefficients are twice the loads
        prob = build_problem("l2_fit")
        rules = prob.training_rules
        bundles = []
        for k in (1, 3):
            es = ExactSolution(lambda X, k=k: np.sin(k * np.pi * X[:, 0]))
            bundles.append(
                SampleBundle(rules, {"interior": es.sample(rules["interior"].nodes, 0)})
            )
        c, K, F = solve_on_basis(prob, bundles)
        assert np.allclose(K, np.diag([0.5, 0.5]), rtol=0, atol=1e-14)
        assert np.allclose(F, [0.5, 1.0 / 6.0], rtol=1e-13, atol=1e-15)
        assert np.allclose(c, [1.0, 1.0 / 3.0], rtol=1e-12, atol=1e-14)

    def test_gram_matches_bilinear_and_load(self):
        problem = build_problem("membrane_2d")
        rng = np.random.default_rng(61)
        bundles = [problem.sample_network(random_net(problem, rng, n=7)) for _ in range(3)]
        c, K, F = solve_on_basis(problem, bundles)
        for i in range(3):
            assert abs(F[i] - load(problem, bundles[i])) < 1e-12 * (1.0 + abs(F[i]))
            for j in range(3):
                direct = bilinear(problem, bundles[i], bundles[j])
                assert abs(K[i, j] - direct) < 1e-12 * (1.0 + abs(direct))
        assert np.linalg.norm(K @ c - F) < 1e-10 * np.linalg.norm(F)
