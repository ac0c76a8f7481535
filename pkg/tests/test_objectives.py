"""Objective values, marginal gains, and the mixture against brute-force oracles."""

from __future__ import annotations

import numpy as np
import pytest

from haystack_select import (
    ConfigurationError,
    GroundSimilarity,
    KernelConfig,
    NumericalError,
    ObjectiveSpec,
    SelectionProblem,
    build_query_kernel,
    flvmi_value,
    gcmi_value,
    greedy_select,
    logdetmi_value,
    marginal_gain,
)

import oracles
from conftest import make_matrix, make_problem, make_queryset

ALL_KINDS = ["gcmi", "flvmi", "logdet", "mixture"]


class TestObjectiveSpec:
    def test_defaults(self):
        spec = ObjectiveSpec(kind="gcmi")
        assert spec.lam == 1.0 and spec.eta == 1.0 and spec.weights is None

    def test_bad_kind(self):
        with pytest.raises(ConfigurationError):
            ObjectiveSpec(kind="entropy")

    @pytest.mark.parametrize("field,value", [("lam", 0.0), ("lam", -1.0), ("eta", 0.0), ("eta", -0.5)])
    def test_positive_scalars(self, field, value):
        with pytest.raises(ConfigurationError):
            ObjectiveSpec(kind="gcmi", **{field: value})

    def test_weights_only_for_mixture(self):
        with pytest.raises(ConfigurationError):
            ObjectiveSpec(kind="gcmi", weights=(1.0, 0.0, 0.0))

    def test_mixture_requires_weights(self):
        with pytest.raises(ConfigurationError):
            ObjectiveSpec(kind="mixture")

    def test_weights_normalized(self):
        spec = ObjectiveSpec(kind="mixture", weights=(2.0, 1.0, 1.0))
        assert spec.weights == (0.5, 0.25, 0.25)
        assert abs(sum(spec.weights) - 1.0) <= 1e-9

    @pytest.mark.parametrize("weights", [(1.0, -0.1, 0.1), (0.0, 0.0, 0.0), (1.0, 1.0)])
    def test_bad_weights(self, weights):
        with pytest.raises(ConfigurationError):
            ObjectiveSpec(kind="mixture", weights=weights)


class TestGcmi:
    def test_value_matches_oracle(self, rng):
        for _ in range(10):
            ground = make_matrix(oracles.unit_rows(rng, 15, 8))
            queries = make_queryset(oracles.unit_rows(rng, 3, 8))
            kernel = build_query_kernel(ground, queries, KernelConfig(transform="shifted"))
            selected = list(rng.choice(15, size=5, replace=False))
            got = gcmi_value(selected, kernel, lam=1.3)
            expected = oracles.brute_gcmi(selected, ground.data, queries.embeddings, 1.3, "shifted")
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_empty_selection_is_zero(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 5, 4))
        queries = make_queryset(oracles.unit_rows(rng, 2, 4))
        kernel = build_query_kernel(ground, queries, KernelConfig())
        assert gcmi_value([], kernel) == 0.0

    def test_gain_is_modular(self, rng):
        problem = make_problem(rng, "gcmi", n=12, q=3)
        state = problem.new_state()
        before = state.gains(np.arange(12)).copy()
        state.accept(4)
        after = state.gains(np.delete(np.arange(12), 4))
        np.testing.assert_allclose(after, np.delete(before, 4), atol=1e-12)

    def test_state_value_matches_scratch(self, rng):
        problem = make_problem(rng, "gcmi", n=20, q=2, lam=2.5)
        state = problem.new_state()
        for i in (3, 11, 0):
            state.accept(i)
        assert state.value == pytest.approx(problem.value([3, 11, 0]), rel=1e-9)

    def test_argmax_invariant_under_shift(self, rng):
        # the shift is order-preserving, so raw and shifted pick the same items
        ground = make_matrix(oracles.unit_rows(rng, 30, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        spec = ObjectiveSpec(kind="gcmi")
        picks = {}
        for transform in ("raw", "shifted"):
            problem = SelectionProblem(ground, queries, spec, kernel=KernelConfig(transform=transform))
            picks[transform] = greedy_select(problem, k=6).selected
        assert picks["raw"] == picks["shifted"]

    def test_duplicate_selection_rejected(self, rng):
        kernel = build_query_kernel(
            make_matrix(oracles.unit_rows(rng, 5, 4)),
            make_queryset(oracles.unit_rows(rng, 1, 4)),
            KernelConfig(),
        )
        with pytest.raises(ValueError):
            gcmi_value([1, 1], kernel)


class TestFlvmi:
    def test_value_matches_loop_on_shared_sims(self, rng):
        # feed both paths the same similarity matrix: the min/max logic must agree exactly
        n = 18
        sims = oracles.sim_matrix_loop(
            oracles.unit_rows(rng, n, 6), oracles.unit_rows(rng, n, 6), "shifted"
        )
        np.fill_diagonal(sims, 1.0)
        query_max = np.abs(rng.standard_normal(n)) / 2.0
        selected = [2, 7, 11]
        got = flvmi_value(selected, sims, query_max, eta=0.8)
        expected = 0.0
        for v in range(n):
            best = max(float(sims[v, i]) for i in selected)
            expected += min(best, 0.8 * float(query_max[v]))
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_end_to_end_matches_embedding_oracle(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 12, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        provider = GroundSimilarity(ground, KernelConfig(transform="shifted"))
        kernel = build_query_kernel(ground, queries, KernelConfig(transform="shifted"))
        selected = [0, 5, 9]
        got = flvmi_value(selected, provider, kernel.s_vq.max(axis=1), eta=0.9)
        expected = oracles.brute_flvmi(selected, ground.data, queries.embeddings, 0.9, "shifted")
        # float32 staging of the ground kernel dominates the difference
        assert got == pytest.approx(expected, abs=1e-3)

    def test_empty_selection_is_zero(self, rng):
        provider = GroundSimilarity(make_matrix(oracles.unit_rows(rng, 6, 4)), KernelConfig())
        assert flvmi_value([], provider, np.full(6, 0.5), eta=1.0) == 0.0

    def test_negative_similarity_rejected(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32)
        ground = make_matrix(rows)
        provider = GroundSimilarity(ground, KernelConfig(transform="raw"))
        with pytest.raises(ConfigurationError, match="shifted"):
            flvmi_value([1], provider, np.full(2, 0.5), eta=1.0)
        with pytest.raises(ConfigurationError, match="shifted"):
            flvmi_value([0], provider, np.array([-0.1, 0.5]), eta=1.0)

    def test_raw_transform_problem_rejected(self, rng):
        rows = np.concatenate([oracles.unit_rows(rng, 7, 6), -oracles.unit_rows(rng, 1, 6)])
        ground = make_matrix(rows)
        queries = make_queryset(rows[-1:].copy())
        with pytest.raises(ConfigurationError, match="shifted"):
            SelectionProblem(
                ground, queries, ObjectiveSpec(kind="flvmi"), kernel=KernelConfig(transform="raw")
            )

    def test_value_bounded_by_ceiling(self, rng):
        problem = make_problem(rng, "flvmi", n=25, q=3, eta=0.7)
        result = greedy_select(problem, k=25)
        kernel = build_query_kernel(problem.ground, problem.queries, KernelConfig(transform="shifted"))
        assert result.final_value <= 0.7 * kernel.s_vq.max(axis=1).sum() + 1e-9

    def test_state_value_matches_scratch(self, rng):
        problem = make_problem(rng, "flvmi", n=30, q=2)
        state = problem.new_state()
        chosen = [5, 17, 2, 29]
        for i in chosen:
            state.accept(i)
        assert state.value == pytest.approx(problem.value(chosen), rel=1e-9, abs=1e-12)

    def test_gains_chunking_consistent(self, rng):
        import haystack_select.objectives as objmod

        problem = make_problem(rng, "flvmi", n=40, q=2)
        state = problem.new_state()
        state.accept(3)
        whole = state.gains(np.arange(40))
        original = objmod._GAIN_CHUNK_ELEMENTS
        objmod._GAIN_CHUNK_ELEMENTS = 7  # force many tiny chunks
        try:
            chunked = problem.new_state()
            chunked.accept(3)
            np.testing.assert_allclose(chunked.gains(np.arange(40)), whole, atol=1e-12)
        finally:
            objmod._GAIN_CHUNK_ELEMENTS = original


class TestLogDet:
    def test_value_matches_joint_form_oracle(self, rng):
        for _ in range(8):
            ground = make_matrix(oracles.unit_rows(rng, 10, 16))
            queries = make_queryset(oracles.unit_rows(rng, 3, 16))
            selected = list(rng.choice(10, size=4, replace=False))
            got = logdetmi_value(selected, ground, queries, eta=0.9)
            expected = oracles.brute_logdetmi(
                selected, ground.data, queries.embeddings, eta=0.9, jitter=1e-6, transform="raw"
            )
            assert got == pytest.approx(expected, rel=1e-8, abs=1e-10)

    def test_empty_selection_is_zero(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 5, 8))
        queries = make_queryset(oracles.unit_rows(rng, 1, 8))
        assert logdetmi_value([], ground, queries) == 0.0

    def test_incremental_matches_scratch_each_step(self, rng):
        problem = make_problem(rng, "logdet", n=24, d=12, q=2, eta=0.9)
        state = problem.new_state()
        order = [7, 1, 19, 4, 13, 0]
        for step, i in enumerate(order, start=1):
            state.accept(i)
            scratch = problem.value(order[:step])
            assert state.value == pytest.approx(scratch, rel=1e-9, abs=1e-9)

    def test_gains_nonnegative(self, rng):
        problem = make_problem(rng, "logdet", n=15, q=2, eta=1.0)
        state = problem.new_state()
        for i in (3, 8):
            gains = state.gains(np.arange(15))
            assert gains.min() >= -1e-10
            state.accept(i)

    def test_large_eta_rejected(self, rng):
        # a query identical to a ground row makes the deficit diagonal go negative
        rows = oracles.unit_rows(rng, 6, 8)
        ground = make_matrix(rows)
        queries = make_queryset(rows[:1].copy())
        spec = ObjectiveSpec(kind="logdet", eta=3.0)
        with pytest.raises(NumericalError, match="jitter|eta"):
            SelectionProblem(ground, queries, spec).new_state()

    def test_shifted_transform_override(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 8, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        spec = ObjectiveSpec(kind="logdet", eta=0.8)
        problem = SelectionProblem(ground, queries, spec, kernel=KernelConfig(transform="shifted"))
        result = greedy_select(problem, k=3)
        expected = oracles.brute_logdetmi(
            result.selected, ground.data, queries.embeddings, eta=0.8, jitter=1e-6, transform="shifted"
        )
        assert result.final_value == pytest.approx(expected, rel=1e-8, abs=1e-10)


class TestMixture:
    @pytest.mark.parametrize(
        "weights,kind",
        [((1.0, 0.0, 0.0), "gcmi"), ((0.0, 1.0, 0.0), "flvmi"), ((0.0, 0.0, 1.0), "logdet")],
    )
    def test_degenerate_weights_reduce_exactly(self, rng, weights, kind):
        ground = make_matrix(oracles.unit_rows(rng, 14, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        mixture = SelectionProblem(
            ground, queries, ObjectiveSpec(kind="mixture", eta=0.9, weights=weights)
        )
        pure = SelectionProblem(ground, queries, ObjectiveSpec(kind=kind, eta=0.9))
        mixture_result = greedy_select(mixture, k=5)
        pure_result = greedy_select(pure, k=5)
        assert mixture_result.selected == pure_result.selected
        state = mixture.new_state()
        for i in (2, 9):
            state.accept(i)
        # a single active component renormalizes to weight 1, so values match too
        (component,) = mixture.mixture_components()
        assert component.kind == kind
        assert component.effective_weight == 1.0
        assert state.value == pytest.approx(pure.value([2, 9]), rel=1e-9, abs=1e-12)

    def test_gains_are_weighted_component_sums(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 12, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        spec = ObjectiveSpec(kind="mixture", eta=0.9, weights=(0.7, 0.2, 0.1))
        problem = SelectionProblem(ground, queries, spec)
        components = problem.mixture_components()
        assert [c.kind for c in components] == ["gcmi", "flvmi", "logdet"]
        assert sum(c.effective_weight for c in components) == pytest.approx(1.0, abs=1e-12)

        state = problem.new_state()
        pure_states = {
            kind: SelectionProblem(ground, queries, ObjectiveSpec(kind=kind, eta=0.9)).new_state()
            for kind in ("gcmi", "flvmi", "logdet")
        }
        for step_item in (None, 4, 10):
            if step_item is not None:
                state.accept(step_item)
                for s in pure_states.values():
                    s.accept(step_item)
            gains = state.gains(np.arange(12))
            expected = np.zeros(12)
            for comp in components:
                expected += comp.effective_weight * pure_states[comp.kind].gains(np.arange(12))
            np.testing.assert_allclose(gains, expected, atol=1e-10)

    def test_positive_scaling_leaves_selection_unchanged(self, rng):
        ground = make_matrix(oracles.unit_rows(rng, 16, 8))
        queries = make_queryset(oracles.unit_rows(rng, 2, 8))
        base = ObjectiveSpec(kind="mixture", eta=0.9, weights=(0.7, 0.2, 0.1))
        scaled = ObjectiveSpec(kind="mixture", eta=0.9, weights=(7.0, 2.0, 1.0))
        assert base.weights == pytest.approx(scaled.weights, abs=1e-15)
        a = greedy_select(SelectionProblem(ground, queries, base), k=6)
        b = greedy_select(SelectionProblem(ground, queries, scaled), k=6)
        assert a.selected == b.selected
        assert a.final_value == pytest.approx(b.final_value, rel=1e-12)

    def test_state_value_matches_scratch(self, rng):
        problem = make_problem(rng, "mixture", n=14, q=2)
        state = problem.new_state()
        chosen = [1, 8, 13]
        for i in chosen:
            state.accept(i)
        assert state.value == pytest.approx(problem.value(chosen), rel=1e-6)

    def test_scale_fallback_for_flat_components(self, rng):
        # identical ground rows give every component a zero singleton-gain range
        row = oracles.unit_rows(rng, 1, 6)
        ground = make_matrix(np.repeat(row, 5, axis=0))
        queries = make_queryset(oracles.unit_rows(rng, 1, 6))
        spec = ObjectiveSpec(kind="mixture", eta=0.9, weights=(0.5, 0.5, 0.0))
        problem = SelectionProblem(ground, queries, spec)
        for comp in problem.mixture_components():
            assert comp.scale == 1.0


class TestMarginalGain:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_value_difference(self, rng, kind):
        problem = make_problem(rng, kind, n=10, q=2)
        state = problem.new_state()
        state.accept(2)
        state.accept(7)
        for i in (0, 5, 9):
            gain = marginal_gain(state, i)
            expected = problem.value([2, 7, i]) - problem.value([2, 7])
            assert gain == pytest.approx(expected, rel=1e-6, abs=1e-8)

    def test_already_selected_rejected(self, rng):
        problem = make_problem(rng, "gcmi", n=6, q=1)
        state = problem.new_state()
        state.accept(3)
        with pytest.raises(ValueError, match="already"):
            marginal_gain(state, 3)


class TestStructuralProperties:
    @pytest.mark.parametrize("kind", ["gcmi", "flvmi"])
    def test_submodular_and_monotone_spot_checks(self, rng, kind):
        for _ in range(5):
            problem = make_problem(rng, kind, n=10, d=8, q=2, eta=0.9)
            items = rng.permutation(10)
            a_set, b_extra, probe = list(items[:2]), list(items[2:4]), int(items[4])
            small = problem.new_state()
            for i in a_set:
                small.accept(i)
            large = problem.new_state()
            for i in a_set + b_extra:
                large.accept(i)
            gain_small = small.gain(probe)
            gain_large = large.gain(probe)
            assert gain_small >= gain_large - 1e-8
            assert gain_large >= -1e-8

    @pytest.mark.parametrize("kind", ["logdet", "mixture"])
    def test_monotone_even_where_not_submodular(self, rng, kind):
        # eta <= 1 keeps the joint kernel PSD, so gains stay non-negative
        for _ in range(5):
            problem = make_problem(rng, kind, n=10, d=8, q=2, eta=1.0)
            state = problem.new_state()
            for i in rng.permutation(10)[:6]:
                gains = state.gains(np.arange(10))
                assert gains.min() >= -1e-8
                state.accept(int(i))

    def test_logdet_complementary_evidence_breaks_diminishing_returns(self):
        """Two orthogonal items that jointly explain one query gain MORE
        together: the log-det mutual information is not submodular. This
        pins the known counterexample so the behavior is documented, not
        accidental."""
        ground = make_matrix(np.eye(2, 3, dtype=np.float32))
        q = np.array([[1.0, 1.0, 0.0]], dtype=np.float32) / np.sqrt(2.0)
        queries = make_queryset(q)
        problem = SelectionProblem(ground, queries, ObjectiveSpec(kind="logdet", eta=1.0))
        empty = problem.new_state()
        gain_alone = empty.gain(1)
        after_first = problem.new_state()
        after_first.accept(0)
        gain_with_context = after_first.gain(1)
        assert gain_with_context > gain_alone + 1.0
        # the oracle agrees: this is the formula, not the incremental path
        oracle_alone = oracles.brute_logdetmi([1], ground.data, q, 1.0, 1e-6, "raw")
        oracle_pair = oracles.brute_logdetmi([0, 1], ground.data, q, 1.0, 1e-6, "raw")
        oracle_first = oracles.brute_logdetmi([0], ground.data, q, 1.0, 1e-6, "raw")
        assert oracle_pair - oracle_first > oracle_alone + 1.0
