"""
Tests for the outer-loop drivers: trust region, cubic regularization,
Gauss-Newton, heavy-ball SGD and L-BFGS.
"""

import numpy as np
import pytest

from curvopt._common import default_eval_every, sample_count
from curvopt.errors import ConfigError
from curvopt.optimizers import (
    ARCConfig,
    GNConfig,
    HessianSource,
    LBFGSConfig,
    SGDConfig,
    StopReason,
    TRConfig,
    agreement_ratio,
    curvature_pair_ok,
    heavy_ball_step,
    run_arc,
    run_gauss_newton,
    run_lbfgs,
    run_sgd_momentum,
    run_tr,
    two_loop_direction,
    update_radius,
    update_sigma,
)
from curvopt.oracle import PropagationLedger
from curvopt.problems import QuadraticProblem, isotropic_quadratic, saddle_problem

from .helpers import make_nls

DEFAULTS = dict(eta1=1e-4, eta2=0.8, gamma1=1.2, gamma2=2.0)


class TestUpdateRules:
    def test_radius_grows_on_very_successful_step(self):
        """rho >= eta2 doubles the radius."""
        assert update_radius(1.0, 1.0, **DEFAULTS) == 2.0

    def test_radius_grows_moderately(self):
        """eta1 <= rho < eta2 grows the radius by gamma1."""
        assert update_radius(1.0, 0.5, **DEFAULTS) == pytest.approx(1.2)

    def test_radius_shrinks_on_failure(self):
        """rho < eta1, including -inf, halves the radius."""
        assert update_radius(1.0, -3.0, **DEFAULTS) == 0.5
        assert update_radius(1.0, float("-inf"), **DEFAULTS) == 0.5

    def test_sigma_shrinks_on_success(self):
        """A very successful step halves sigma."""
        assert update_sigma(1e-4, 1.0, **DEFAULTS) == pytest.approx(5e-5)

    def test_sigma_grows_on_failure(self):
        """A failed step doubles sigma."""
        assert update_sigma(1.0, 0.0, **DEFAULTS) == 2.0

    def test_agreement_ratio(self):
        """rho is actual over predicted decrease."""
        assert agreement_ratio(1.0, 0.5, -0.5) == 1.0

    def test_agreement_ratio_non_finite_trial(self):
        """A non-finite trial loss gives rho = -inf."""
        assert agreement_ratio(1.0, float("nan"), -0.5) == float("-inf")

    def test_agreement_ratio_vanishing_prediction(self):
        """A predicted decrease below 1e-14 gives rho = -inf."""
        assert agreement_ratio(1.0, 0.9, -1e-16) == float("-inf")


class TestTrustRegion:
    def test_escapes_saddle_from_near_stationary_start(self):
        """TR leaves a near-saddle start along the negative-curvature direction."""
        trace = run_tr(saddle_problem(), TRConfig(delta0=1.0, max_iters=10), [0.0, 1e-12])
        first = trace[0]
        assert first.accepted
        assert first.rho == pytest.approx(1.0)
        assert trace[1].radius_or_sigma == 2.0
        assert min(r.train_loss for r in trace) <= -1.0

    def test_escapes_exact_saddle_with_ritz_direction(self):
        """At an exact saddle the Ritz step is taken in the first iteration."""
        trace = run_tr(saddle_problem(), TRConfig(delta0=1.0, max_iters=5), [0.0, 0.0])
        assert trace[0].accepted
        assert trace[0].train_loss == pytest.approx(-0.5)
        assert trace.stop_reason is StopReason.MAX_ITERS

    def test_converges_on_quadratic(self):
        """TR converges on a quadratic in a few iterations."""
        problem = isotropic_quadratic(2)
        trace = run_tr(problem, TRConfig(delta0=10.0), [10.0, 10.0])
        assert len(trace) <= 3
        assert trace.stop_reason is StopReason.CONVERGED
        assert np.linalg.norm(problem.grad(trace.final_x)) <= 1e-8
        assert trace[1].radius_or_sigma == 20.0

    def test_terminal_record_shape(self):
        """The converged record has no rho, no step and is not accepted."""
        trace = run_tr(isotropic_quadratic(2), TRConfig(delta0=10.0), [10.0, 10.0])
        last = trace[-1]
        assert last.rho is None
        assert last.accepted is False
        assert last.step_norm == 0.0

    def test_radius_sequence_replays_from_rho(self):
        """Each radius follows from the previous radius and rho."""
        cfg = TRConfig(delta0=0.3, max_iters=25)
        trace = run_tr(make_nls(80, 6, seed=11), cfg, np.zeros(6))
        for prev, cur in zip(trace, trace[1:]):
            if prev.rho is None:
                continue
            expected = update_radius(prev.radius_or_sigma, prev.rho, cfg.eta1, cfg.eta2, cfg.gamma1, cfg.gamma2)
            assert cur.radius_or_sigma == expected

    def test_accepted_losses_never_increase(self):
        """Losses never increase and rejected steps keep the loss."""
        trace = run_tr(make_nls(80, 6, seed=12), TRConfig(delta0=5.0, max_iters=25), np.ones(6))
        losses = [trace.initial_loss] + [r.train_loss for r in trace]
        assert all(b <= a for a, b in zip(losses, losses[1:]))
        for prev, cur in zip(losses, trace):
            if cur.accepted is False:
                assert cur.train_loss == prev

    def test_budget_stop(self):
        """The run stops at the first iteration that reaches the budget."""
        problem = make_nls(50, 5, seed=13)
        trace = run_tr(problem, TRConfig(delta0=0.01, max_props=500, eps_g=1e-12), np.zeros(5))
        assert trace.stop_reason is StopReason.BUDGET
        assert trace[-1].cumulative_propagations >= 500
        assert trace[-2].cumulative_propagations < 500

    def test_lanczos_subproblem_method(self):
        """The Lanczos TR solver drives convergence too."""
        problem = isotropic_quadratic(3)
        trace = run_tr(problem, TRConfig(delta0=100.0, subproblem_method="lanczos"), np.ones(3))
        assert trace.stop_reason is StopReason.CONVERGED

    def test_records_are_streamed(self):
        """on_record sees every record in order."""
        seen = []
        trace = run_tr(isotropic_quadratic(2), TRConfig(delta0=10.0), [1.0, 1.0], on_record=seen.append)
        assert seen == list(trace)

    def test_evaluator_fills_error_columns(self):
        """Evaluator results fill the error columns of each record."""
        trace = run_tr(
            isotropic_quadratic(2), TRConfig(delta0=10.0), [1.0, 1.0],
            evaluator=lambda x: (0.25, 0.5),
        )
        assert all(r.train_error == 0.25 and r.test_error == 0.5 for r in trace)


class TestPropagationAccounting:
    """Driver ledger totals follow the per-iteration cost model."""

    def test_uniform_sampling_charges(self):
        """Each uniform-sampling iteration charges 2(n + |S| r)."""
        problem = make_nls(120, 6, seed=21)
        ledger = PropagationLedger()
        cfg = TRConfig(delta0=1.0, hessian_source="uniform", sample_ratio=0.1, max_iters=8)
        trace = run_tr(problem, cfg, np.zeros(6), seed=3, ledger=ledger)
        assert ledger.total == sum(ledger.iteration_charges)
        for record, charge in zip(trace, ledger.iteration_charges):
            assert record.batch_size == 12
            assert charge == 2 * (120 + record.batch_size * record.subproblem_hvps)
        assert trace[-1].cumulative_propagations == ledger.total

    def test_full_hessian_batch_size(self):
        """The full Hessian batch has size n."""
        problem = make_nls(30, 4, seed=22)
        trace = run_tr(problem, TRConfig(max_iters=3), np.zeros(4))
        assert all(r.batch_size == 30 for r in trace)

    def test_nonuniform_refresh_is_overhead(self):
        """The non-uniform refresh is charged n as overhead every iteration."""
        problem = make_nls(100, 5, seed=23)
        ledger = PropagationLedger()
        cfg = TRConfig(hessian_source="nonuniform", sample_ratio=0.05, max_iters=5, eps_g=1e-14)
        trace = run_tr(problem, cfg, np.zeros(5), seed=1, ledger=ledger)
        assert ledger.overhead_charges == [100] * len(trace)
        assert ledger.total == sum(ledger.iteration_charges) + sum(ledger.overhead_charges)

    def test_props_strictly_increase(self):
        """Cumulative propagations strictly increase."""
        trace = run_arc(make_nls(60, 5, seed=24), ARCConfig(max_iters=10), np.zeros(5))
        props = trace.props
        assert all(b > a for a, b in zip(props, props[1:]))

    def test_same_seed_same_trace(self):
        """A fixed seed reproduces the trace."""
        cfg = TRConfig(hessian_source="uniform", sample_ratio=0.2, max_iters=6)
        a = run_tr(make_nls(50, 4, seed=25), cfg, np.zeros(4), seed=9)
        b = run_tr(make_nls(50, 4, seed=25), cfg, np.zeros(4), seed=9)
        assert [r.train_loss for r in a] == [r.train_loss for r in b]
        assert a.props == b.props


class TestCubicRegularization:
    def test_tiny_sigma_behaves_like_newton(self):
        """A negligible sigma takes the Newton step."""
        trace = run_arc(isotropic_quadratic(2), ARCConfig(sigma0=1e-12, max_iters=1), [1.0, 1.0])
        assert trace[0].rho == pytest.approx(1.0, rel=1e-6)
        np.testing.assert_allclose(trace.final_x, [0.0, 0.0], atol=1e-6)

    def test_sigma_sequence_replays_from_rho(self):
        """Each sigma follows from the previous sigma and rho."""
        cfg = ARCConfig(sigma0=10.0, max_iters=20)
        trace = run_arc(make_nls(80, 6, seed=31), cfg, np.zeros(6))
        for prev, cur in zip(trace, trace[1:]):
            if prev.rho is None:
                continue
            expected = update_sigma(prev.radius_or_sigma, prev.rho, cfg.eta1, cfg.eta2, cfg.gamma1, cfg.gamma2)
            assert cur.radius_or_sigma == expected

    def test_escapes_saddle(self):
        """ARC leaves an exact saddle."""
        trace = run_arc(saddle_problem(), ARCConfig(sigma0=1.0, max_iters=10), [0.0, 0.0])
        assert min(r.train_loss for r in trace) < -0.1

    def test_accepted_losses_never_increase(self):
        """ARC losses never increase."""
        trace = run_arc(make_nls(80, 6, seed=32), ARCConfig(sigma0=1e-3, max_iters=20), np.ones(6))
        losses = [trace.initial_loss] + [r.train_loss for r in trace]
        assert all(b <= a for a, b in zip(losses, losses[1:]))


class TestGaussNewton:
    def test_stops_at_saddle_where_trust_region_escapes(self):
        """Gauss-Newton converges at the saddle that TR escapes."""
        problem = saddle_problem()
        gn = run_gauss_newton(problem, GNConfig(delta0=1.0, max_iters=10), [1.0, 0.0])
        assert gn.stop_reason is StopReason.CONVERGED
        assert abs(problem.loss(gn.final_x)) <= 1e-12

        tr = run_tr(problem, TRConfig(delta0=1.0, max_iters=10), [1.0, 0.0])
        assert min(r.train_loss for r in tr) <= -1.0

    def test_requires_ggn_product(self):
        """A problem without Gauss-Newton products is rejected."""
        class NoGGN(QuadraticProblem):
            @property
            def supports_ggn(self):
                return False

        with pytest.raises(TypeError):
            run_gauss_newton(NoGGN([1.0]), GNConfig(), [1.0])

    def test_nonuniform_needs_per_sample_curvature(self):
        """Non-uniform sampling needs per-sample curvature scalars."""
        with pytest.raises(ConfigError):
            run_tr(isotropic_quadratic(2), TRConfig(hessian_source="nonuniform"), [1.0, 1.0])

    def test_decreases_nls_loss(self):
        """Gauss-Newton decreases the NLS loss."""
        problem = make_nls(80, 6, seed=41)
        trace = run_gauss_newton(problem, GNConfig(delta0=1.0, max_iters=15), np.zeros(6))
        assert trace[-1].train_loss < trace.initial_loss


class TestHeavyBall:
    def test_first_step_is_plain_gradient_step(self):
        """The first momentum step equals a gradient step."""
        problem = isotropic_quadratic(2)
        x0 = np.array([1.0, -2.0])
        trace = run_sgd_momentum(problem, SGDConfig(alpha=0.1, beta=0.9, max_iters=1), x0)
        np.testing.assert_allclose(trace.final_x, x0 - 0.1 * problem.grad(x0))

    def test_velocity_limit_for_constant_gradient(self):
        """Under a constant gradient the velocity tends to g/(1 - beta)."""
        x, v, g = np.zeros(2), np.zeros(2), np.array([1.0, -0.5])
        for _ in range(500):
            x, v = heavy_ball_step(x, v, g, 0.01, 0.9)
        np.testing.assert_allclose(v, 10 * g, rtol=1e-10)

    def test_zero_momentum_is_plain_sgd(self):
        """beta = 0 contracts by (1 - alpha) per step on the identity quadratic."""
        problem = isotropic_quadratic(2)
        trace = run_sgd_momentum(problem, SGDConfig(alpha=0.1, beta=0.0, max_iters=20), [1.0, 2.0])
        np.testing.assert_allclose(trace.final_x, 0.9**20 * np.array([1.0, 2.0]), rtol=1e-12)

    @pytest.mark.parametrize("alpha,beta", [(0.1, 0.0), (0.01, 0.9)])
    def test_converges_to_saddle_on_stable_manifold(self, alpha, beta):
        """Starting on the stable manifold, SGD converges to the saddle."""
        problem = saddle_problem()
        trace = run_sgd_momentum(problem, SGDConfig(alpha=alpha, beta=beta, max_iters=1000), [1.0, 0.0])
        assert trace.final_x[1] == 0.0
        assert abs(problem.loss(trace.final_x)) < 1e-6

    def test_stays_at_saddle_where_trust_region_escapes(self):
        """SGD stalls near the saddle where TR escapes."""
        problem = saddle_problem()
        x0 = [1e-12, 0.0]
        sgd = run_sgd_momentum(problem, SGDConfig(alpha=0.1, beta=0.9, max_iters=100), x0)
        assert abs(problem.loss(sgd.final_x)) <= 1e-6
        tr = run_tr(problem, TRConfig(delta0=1.0, max_iters=10), x0)
        assert min(r.train_loss for r in tr) <= -1.0

    def test_momentum_amplifies_unstable_direction(self):
        """A tiny offset along the unstable direction grows under momentum."""
        problem = saddle_problem()
        sgd = run_sgd_momentum(problem, SGDConfig(alpha=0.1, beta=0.9, max_iters=10), [0.0, 1e-12])
        assert -1.0 < problem.loss(sgd.final_x) < 0.0

    def test_charges_two_per_sample(self):
        """Each SGD iteration charges 2|S|."""
        ledger = PropagationLedger()
        problem = QuadraticProblem([1.0, 2.0], n_samples=200)
        run_sgd_momentum(problem, SGDConfig(batch_ratio=0.05, max_iters=7), [1.0, 1.0], ledger=ledger)
        assert ledger.iteration_charges == [20] * 7

    def test_divergence_is_reported(self):
        """A too-large step size stops the run as diverged."""
        problem = isotropic_quadratic(1)
        trace = run_sgd_momentum(
            problem, SGDConfig(alpha=3.0, beta=0.0, max_iters=5000, eval_every=1), [1.0]
        )
        assert trace.stop_reason is StopReason.DIVERGED
        assert len(trace) < 5000

    def test_loss_only_at_evaluation_cadence(self):
        """The full loss is computed every k iterations and on the last one."""
        trace = run_sgd_momentum(
            isotropic_quadratic(2), SGDConfig(max_iters=10, eval_every=4), [1.0, 1.0]
        )
        evaluated = [r.iter for r in trace if r.train_loss is not None]
        assert evaluated == [3, 7, 9]


class _CountingEvaluator:
    def __init__(self, cost: int):
        self.cost = cost
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return 0.0, 0.0


class TestEvaluationCadence:
    def test_share_stays_under_five_percent_at_a9a_sizes(self):
        """Loss pass plus train and test error passes cost under 5% of the SGD charges."""
        n_train, n_test = 32561, 16281
        size = sample_count(n_train, 0.01)
        cost = 2 * n_train + n_test
        k = default_eval_every(cost, size)
        assert cost / (k * 2 * size) < 0.05
        assert cost / ((k - 1) * 2 * size) >= 0.05

    def test_evaluator_cost_lengthens_default_cadence(self):
        """The default cadence counts the evaluator's declared passes as well as the loss pass."""
        problem = QuadraticProblem([1.0, 2.0], n_samples=200)
        cfg = SGDConfig(batch_ratio=0.05, max_iters=400)

        bare = run_sgd_momentum(problem, cfg, [1.0, 1.0])
        evaluator = _CountingEvaluator(cost=100)
        with_errors = run_sgd_momentum(problem, cfg, [1.0, 1.0], evaluator=evaluator)

        # |S| = 10: cadence 201 for the loss alone, 301 with 100 more passes
        assert [r.iter for r in bare if r.train_loss is not None] == [200, 399]
        assert [r.iter for r in with_errors if r.train_loss is not None] == [300, 399]
        assert evaluator.calls == 2

    def test_evaluator_without_cost_counts_one_training_pass(self):
        """A plain callable evaluator is priced as one pass over the training set."""
        problem = QuadraticProblem([1.0, 2.0], n_samples=200)
        trace = run_sgd_momentum(
            problem, SGDConfig(batch_ratio=0.05, max_iters=400), [1.0, 1.0], evaluator=lambda x: (None, None)
        )
        assert [r.iter for r in trace if r.train_loss is not None] == [399]


class TestLBFGS:
    def test_empty_history_is_steepest_descent(self):
        """No curvature pairs gives -g."""
        g = np.array([1.0, -2.0])
        np.testing.assert_array_equal(two_loop_direction(g, []), -g)

    def test_exact_pairs_recover_newton_direction(self):
        """Pairs spanning a diagonal quadratic recover the Newton direction."""
        pairs = [
            (np.array([1.0, 0.0]), np.array([1.0, 0.0])),
            (np.array([0.0, 1.0]), np.array([0.0, 4.0])),
        ]
        d = two_loop_direction(np.array([1.0, 1.0]), pairs)
        np.testing.assert_allclose(d, [-1.0, -0.25], atol=1e-8)

    def test_curvature_pair_filter(self):
        """Pairs with non-positive s.y are rejected."""
        s = np.array([1.0, 2.0])
        assert curvature_pair_ok(s, s)
        assert not curvature_pair_ok(s, -s)
        assert not curvature_pair_ok(s, np.array([2.0, -1.0]))

    def test_converges_on_quadratic(self):
        """L-BFGS converges and charges 2n per iteration."""
        problem = QuadraticProblem([1.0, 4.0])
        ledger = PropagationLedger()
        trace = run_lbfgs(problem, LBFGSConfig(), [1.0, 1.0], ledger=ledger)
        assert trace.stop_reason is StopReason.CONVERGED
        assert np.linalg.norm(problem.grad(trace.final_x)) <= 1e-5
        assert ledger.iteration_charges == [2] * len(trace)

    def test_losses_decrease(self):
        """Armijo steps never increase the loss."""
        trace = run_lbfgs(make_nls(60, 5, seed=51), LBFGSConfig(max_iters=20), np.zeros(5))
        losses = [trace.initial_loss] + [r.train_loss for r in trace]
        assert all(b <= a for a, b in zip(losses, losses[1:]))


class TestConfigValidation:
    def test_every_violation_is_reported(self):
        """All violations are reported together."""
        with pytest.raises(ConfigError) as excinfo:
            TRConfig(delta0=-1.0, eta1=0.9, eta2=0.5, sample_ratio=2.0)
        assert len(excinfo.value.errors) == 3

    def test_hessian_source_is_coerced(self):
        """Strings are coerced to HessianSource."""
        assert TRConfig(hessian_source="uniform").hessian_source is HessianSource.UNIFORM

    def test_invalid_hessian_source(self):
        """An unknown Hessian source names the field."""
        with pytest.raises(ConfigError, match="hessian_source"):
            ARCConfig(hessian_source="diagonal")

    def test_invalid_gammas(self):
        """gamma1 must exceed 1."""
        with pytest.raises(ConfigError):
            ARCConfig(gamma1=0.5)

    def test_sgd_beta_range(self):
        """beta must lie in [0, 1)."""
        with pytest.raises(ConfigError):
            SGDConfig(beta=1.0)

    def test_lbfgs_history(self):
        """History length and c1 are validated."""
        with pytest.raises(ConfigError):
            LBFGSConfig(history=0, c1=2.0)

    def test_replace_revalidates(self):
        """replace() validates the new values."""
        with pytest.raises(ConfigError):
            TRConfig().replace(delta0=0.0)
