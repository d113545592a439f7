"""Valid-set collection, prediction, and the two uncertainty readouts."""

import numpy as np
import pytest
from cdrm import kde
from cdrm.errors import EmptyValidSetError, InvalidInputError, UnpreparedModelError
from cdrm.inference import (
    DEDUP_RANGE_FRACTION,
    ValidSet,
    aleatoric,
    collect_valid,
    default_dedup_tol,
    default_inference_config,
    epistemic,
    infer,
    predict,
)
from cdrm.langevin import ChainTrace, LangevinConfig
from cdrm.model import CdrmModel
from cdrm.nnet import MlpNetwork


def ramp_model(with_kde=True):
    """Linear field sigmoid(4 * s_next - 1): monotone in the next state."""
    net = MlpNetwork(
        layer_dims=[2, 1],
        weights=[np.array([[0.0, 4.0]])],
        biases=[np.array([-1.0])],
    )
    m = CdrmModel(net=net, input_bounds=np.tile([-1.0, 1.0], (2, 1)), dims=(1, 0, 1))
    if with_kde:
        states = np.linspace(-1, 1, 64)[:, None]
        m = CdrmModel(
            net=net,
            input_bounds=m.input_bounds,
            dims=m.dims,
            kde_stats=kde.fit(states, seed=0),
        )
    return m


class TestValidSet:
    def test_insert_and_len(self):
        vs = ValidSet(0.1)
        assert vs.insert(np.array([0.5]), 0.9)
        assert vs.insert(np.array([0.8]), 0.7)
        assert len(vs) == 2
        assert vs.max_score() == 0.9

    def test_exact_duplicate_discarded_even_at_zero_tol(self):
        vs = ValidSet(0.0)
        assert vs.insert(np.array([0.5, 0.25]), 0.9)
        assert not vs.insert(np.array([0.5, 0.25]), 0.99)
        assert len(vs) == 1
        # zero tolerance keeps genuinely distinct points
        assert vs.insert(np.array([0.5, 0.25 + 1e-12]), 0.1)

    def test_first_seen_member_wins_regardless_of_score(self):
        vs = ValidSet(0.1)
        vs.insert(np.array([0.5]), 0.2)
        assert not vs.insert(np.array([0.55]), 0.999)
        assert vs.samples[0][0] == 0.5
        assert vs.scores == [0.2]

    def test_boundary_distance_counts_as_duplicate(self):
        vs = ValidSet(0.1)
        vs.insert(np.array([0.0]), 0.5)
        assert not vs.insert(np.array([0.1]), 0.5)  # |d| == tol
        assert vs.insert(np.array([0.100000001]), 0.5)

    def test_componentwise_tolerance_vector(self):
        vs = ValidSet(np.array([0.1, 0.0]))
        vs.insert(np.array([0.0, 0.0]), 0.5)
        # inside tol on dim 0 but distinct on the zero-tol dim 1
        assert vs.insert(np.array([0.05, 1e-9]), 0.5)
        assert not vs.insert(np.array([0.05, 0.0]), 0.5)

    def test_negative_tolerance_rejected(self):
        with pytest.raises(InvalidInputError):
            ValidSet(-0.1)

    def test_tolerance_width_mismatch_rejected(self):
        vs = ValidSet(np.array([0.1, 0.1, 0.1]))
        with pytest.raises(InvalidInputError):
            vs.insert(np.array([0.0, 0.0]), 0.5)

    def test_empty_max_score_raises(self):
        with pytest.raises(EmptyValidSetError):
            ValidSet(0.1).max_score()

    def test_matches_brute_force_greedy_dedup(self):
        # cell-hash shortcut must agree with the O(n^2) definition exactly
        rng = np.random.default_rng(0)
        for trial in range(40):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(5, 80))
            tol = rng.uniform(0.01, 0.5, size=d)
            pts = rng.uniform(-1, 1, size=(n, d))
            scores = rng.uniform(0, 1, size=n)

            kept = []
            for i in range(n):
                if not any(np.all(np.abs(pts[i] - pts[j]) <= tol) for j in kept):
                    kept.append(i)

            vs = ValidSet(tol)
            for i in range(n):
                vs.insert(pts[i], scores[i])
            assert len(vs) == len(kept), f"trial {trial}"
            np.testing.assert_array_equal(np.stack(vs.samples), pts[kept])
            np.testing.assert_array_equal(vs.scores, scores[kept])


def hand_trace():
    """Three-batch trace over a 2-D joint space with next-state dim 1."""
    samples = [
        np.array([[0.0, 0.10], [0.0, 0.90]]),  # init batch: must be ignored
        np.array([[0.0, 0.30], [0.0, 0.50]]),
        np.array([[0.0, 0.52], [0.0, 0.70]]),
    ]
    scores = [
        np.array([0.99, 0.99]),
        np.array([0.40, 0.80]),
        np.array([0.90, 0.60]),
    ]
    per_step_max = np.array([0.80, 0.90])
    return ChainTrace(samples, scores, per_step_max, np.array([1]))


class TestCollectValid:
    def test_hand_trace_membership_and_order(self):
        valid = collect_valid(hand_trace(), alpha=0.5, dedup_tol=0.05)
        # init batch skipped; 0.30 below threshold; 0.52 deduped against the
        # earlier 0.50 despite its higher score
        members = [float(s[0]) for s in valid.samples]
        assert members == [0.50, 0.70]
        assert valid.scores == [0.80, 0.60]

    def test_threshold_is_strict(self):
        trace = hand_trace()
        trace.scores[1][0] = 0.5  # exactly alpha: excluded
        valid = collect_valid(trace, alpha=0.5, dedup_tol=0.0)
        assert len(valid) == 3

    def test_high_alpha_gives_empty_set(self):
        valid = collect_valid(hand_trace(), alpha=0.95, dedup_tol=0.05)
        assert len(valid) == 0

    def test_projection_keeps_only_free_dims(self):
        valid = collect_valid(hand_trace(), alpha=0.5, dedup_tol=0.05)
        assert valid.samples[0].shape == (1,)


class TestSummaries:
    def test_predict_takes_argmax_earliest_tie(self):
        vs = ValidSet(0.0)
        vs.insert(np.array([1.0]), 0.7)
        vs.insert(np.array([2.0]), 0.9)
        vs.insert(np.array([3.0]), 0.9)
        assert predict(vs)[0] == 2.0

    def test_predict_empty_raises(self):
        with pytest.raises(EmptyValidSetError):
            predict(ValidSet(0.1))

    def test_aleatoric_is_root_total_variance(self):
        vs = ValidSet(0.0)
        for v in ([0.0, 0.0], [2.0, 2.0]):
            vs.insert(np.array(v), 0.5)
        # per-dim population variance 1.0 each, trace 2.0
        assert aleatoric(vs) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_aleatoric_single_member_is_zero(self):
        vs = ValidSet(0.0)
        vs.insert(np.array([0.7]), 0.5)
        assert aleatoric(vs) == 0.0

    def test_aleatoric_empty_raises(self):
        with pytest.raises(EmptyValidSetError):
            aleatoric(ValidSet(0.1))

    def test_epistemic_formula(self):
        vs = ValidSet(0.0)
        vs.insert(np.array([0.5]), 0.6)
        psm = np.array([0.5, 0.7, 0.6])
        expected = (0.4 + (1 - 0.6) * psm.std()) / 2
        assert epistemic(vs, psm, 0.4) == pytest.approx(expected, rel=1e-12)

    def test_epistemic_empty_is_exactly_one(self):
        assert epistemic(ValidSet(0.1), np.array([0.1, 0.2]), 0.9) == 1.0

    def test_epistemic_stable_chain_reduces_to_half_base(self):
        vs = ValidSet(0.0)
        vs.insert(np.array([0.5]), 0.99)
        assert epistemic(vs, np.array([0.8, 0.8, 0.8]), 0.3) == pytest.approx(0.15)


class TestDefaults:
    def test_inference_config_frees_next_state_block(self):
        m = ramp_model(with_kde=False)
        cfg = default_inference_config(m)
        np.testing.assert_array_equal(cfg.free_dims, [1])
        np.testing.assert_array_equal(cfg.bounds, [[-1.0, 1.0]])
        assert cfg.direction == "ascent"

    def test_dedup_tol_scales_with_bounds_span(self):
        m = ramp_model(with_kde=False)
        np.testing.assert_allclose(default_dedup_tol(m), [2.0 * DEDUP_RANGE_FRACTION])


def small_chain(steps=25, n=48):
    return LangevinConfig(
        n_samples=n,
        steps=steps,
        step_size=0.1,
        noise_scale=0.01,
        direction="ascent",
        free_dims=np.array([1]),
        bounds=np.array([[-1.0, 1.0]]),
    )


class TestInfer:
    def test_requires_fitted_density(self):
        m = ramp_model(with_kde=False)
        with pytest.raises(UnpreparedModelError):
            infer(m, [0.0], [], cfg=small_chain())

    def test_query_dims_validated(self):
        m = ramp_model()
        with pytest.raises(InvalidInputError):
            infer(m, [0.0, 0.1], [], cfg=small_chain())
        with pytest.raises(InvalidInputError):
            infer(m, [0.0], [0.5], cfg=small_chain())

    def test_non_finite_query_rejected(self):
        m = ramp_model()
        with pytest.raises(InvalidInputError):
            infer(m, [np.nan], [], cfg=small_chain())

    def test_ramp_field_predicts_top_of_range(self):
        m = ramp_model()
        res = infer(m, [0.0], [], cfg=small_chain(), alpha=0.5, seed=3)
        assert res.prediction is not None and res.prediction.shape == (1,)
        # ascent on a monotone field piles up at the upper bound
        assert res.prediction[0] > 0.9
        assert res.au is not None and res.au > 0.0
        assert 0.0 <= res.eu <= 1.0
        assert res.valid_count > 0
        assert res.per_step_max.shape == (25,)

    def test_deterministic_for_fixed_seed(self):
        m = ramp_model()
        a = infer(m, [0.0], [], cfg=small_chain(), seed=11)
        b = infer(m, [0.0], [], cfg=small_chain(), seed=11)
        np.testing.assert_array_equal(a.prediction, b.prediction)
        assert a.eu == b.eu and a.au == b.au and a.valid_count == b.valid_count

    def test_seed_changes_chain(self):
        m = ramp_model()
        a = infer(m, [0.0], [], cfg=small_chain(), seed=1)
        b = infer(m, [0.0], [], cfg=small_chain(), seed=2)
        assert not np.array_equal(a.per_step_max, b.per_step_max)

    def test_unreachable_alpha_yields_empty_result(self):
        m = ramp_model()
        res = infer(m, [0.0], [], cfg=small_chain(), alpha=1.0, seed=3)
        assert res.prediction is None
        assert res.au is None
        assert res.eu == 1.0
        assert res.valid_count == 0

    def test_empty_action_block_accepted_as_empty_array(self):
        m = ramp_model()
        res = infer(m, [0.0], np.empty(0), cfg=small_chain(), seed=5)
        assert res.prediction is not None
