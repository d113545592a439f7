"""Dense bin-grid baseline: counting, queries, and the memory report."""

import numpy as np
import pytest
from cdrm.binref import BinGrid, bin_infer, build, memory_report, query
from cdrm.data import TransitionDataset
from cdrm.errors import InvalidInputError, OutOfBoundsError


def dataset_1d(tuples, bounds=None):
    tuples = np.asarray(tuples, dtype=np.float64)
    bounds = bounds if bounds is not None else np.tile([0.0, 1.0], (2, 1))
    return TransitionDataset(tuples, (1, 0, 1), np.asarray(bounds, dtype=np.float64))


class TestBuild:
    def test_counts_match_histogramdd(self):
        # np.histogramdd bins half-open with a closed top edge, the same
        # convention; it is an independent implementation to count against
        rng = np.random.default_rng(1)
        tuples = rng.uniform(0.0, 1.0, size=(500, 2))
        tuples[:5] = [[0.0, 1.0]] * 5  # exercise both edges
        ds = dataset_1d(tuples)
        for b in (1, 3, 7):
            grid = build(ds, b)
            ref, _ = np.histogramdd(tuples, bins=(b, b), range=[(0, 1), (0, 1)])
            np.testing.assert_array_equal(grid.counts, ref.astype(np.int64))

    def test_total_count_is_dataset_size(self):
        rng = np.random.default_rng(2)
        ds = dataset_1d(rng.uniform(0, 1, size=(64, 2)))
        assert build(ds, 5).counts.sum() == 64

    def test_empty_dataset_builds_zero_grid(self):
        ds = dataset_1d(np.empty((0, 2)))
        grid = build(ds, 4)
        assert grid.counts.sum() == 0
        assert grid.counts.shape == (4, 4)

    def test_bad_b_rejected(self):
        ds = dataset_1d([[0.5, 0.5]])
        with pytest.raises(InvalidInputError):
            build(ds, 0)

    def test_bounds_shape_checked(self):
        ds = dataset_1d([[0.5, 0.5]])
        with pytest.raises(InvalidInputError):
            build(ds, 4, bounds=np.zeros((3, 2)))

    def test_tuple_outside_explicit_bounds_named(self):
        ds = dataset_1d([[0.5, 0.5], [0.9, 0.9]])
        with pytest.raises(OutOfBoundsError) as exc_info:
            build(ds, 4, bounds=np.tile([0.0, 0.8], (2, 1)))
        assert "1" in str(exc_info.value)

    def test_flags_view(self):
        ds = dataset_1d([[0.1, 0.1], [0.9, 0.9]])
        grid = build(ds, 2)
        np.testing.assert_array_equal(grid.flags, [[True, False], [False, True]])

    def test_widths(self):
        ds = dataset_1d([[0.5, 0.5]], bounds=[[0.0, 2.0], [0.0, 4.0]])
        np.testing.assert_allclose(build(ds, 4).widths, [0.5, 1.0])


class TestQuery:
    def test_centers_of_occupied_cells_in_index_order(self):
        # b=4 over [0,1]: cells at 0.125, 0.375, 0.625, 0.875
        ds = dataset_1d([[0.1, 0.7], [0.1, 0.1], [0.1, 0.65]])
        grid = build(ds, 4)
        centers = query(grid, [0.1], [])
        assert [c[0] for c in centers] == pytest.approx([0.125, 0.625])

    def test_unseen_input_gives_empty_list(self):
        ds = dataset_1d([[0.1, 0.1]])
        grid = build(ds, 4)
        assert query(grid, [0.9], []) == []

    def test_top_edge_query_falls_in_last_cell(self):
        ds = dataset_1d([[0.99, 0.5]])
        grid = build(ds, 4)
        assert len(query(grid, [1.0], [])) == 1

    def test_out_of_bounds_query_rejected(self):
        grid = build(dataset_1d([[0.5, 0.5]]), 4)
        with pytest.raises(OutOfBoundsError):
            query(grid, [1.5], [])

    def test_wrong_dims_rejected(self):
        grid = build(dataset_1d([[0.5, 0.5]]), 4)
        with pytest.raises(InvalidInputError):
            query(grid, [0.5, 0.5], [])

    def test_action_dims_route_into_cell(self):
        tuples = np.array([[0.1, 0.1, 0.9], [0.1, 0.9, 0.1]])
        ds = TransitionDataset(tuples, (1, 1, 1), np.tile([0.0, 1.0], (3, 1)))
        grid = build(ds, 2)
        lo = query(grid, [0.1], [0.1])
        hi = query(grid, [0.1], [0.9])
        assert [c[0] for c in lo] == pytest.approx([0.75])
        assert [c[0] for c in hi] == pytest.approx([0.25])


class TestBinInfer:
    def test_empty_cell_reports_full_epistemic(self):
        grid = build(dataset_1d([[0.1, 0.1]]), 4)
        res = bin_infer(grid, [0.9], [])
        assert res.prediction is None
        assert res.eu == 1.0
        assert res.au is None
        assert res.valid_count == 0

    def test_most_populated_cell_wins(self):
        ds = dataset_1d([[0.1, 0.7], [0.1, 0.72], [0.1, 0.1]])
        grid = build(ds, 4)
        res = bin_infer(grid, [0.1], [])
        assert res.prediction[0] == pytest.approx(0.625)
        assert res.eu == 0.0
        assert res.valid_count == 2

    def test_tie_goes_to_lowest_index_cell(self):
        ds = dataset_1d([[0.1, 0.7], [0.1, 0.1]])
        grid = build(ds, 4)
        assert bin_infer(grid, [0.1], []).prediction[0] == pytest.approx(0.125)

    def test_spread_is_root_total_variance_of_centers(self):
        ds = dataset_1d([[0.1, 0.1], [0.1, 0.9]])
        grid = build(ds, 4)
        res = bin_infer(grid, [0.1], [])
        centers = np.array([0.125, 0.875])
        assert res.au == pytest.approx(np.sqrt(centers.var()), rel=1e-12)

    def test_single_occupied_cell_zero_spread(self):
        grid = build(dataset_1d([[0.1, 0.5]]), 4)
        assert bin_infer(grid, [0.1], []).au == 0.0


class TestMemoryReport:
    def test_joint_and_cubic_forms_coincide_for_unit_dims(self):
        rep = memory_report(1, 1, 10)
        assert rep.joint_cells == 1000
        assert rep.cubic_scaling_cells == 1000
        assert not rep.saturated

    def test_joint_counts_all_dimensions(self):
        rep = memory_report(2, 1, 4, d_next=2)
        assert rep.joint_cells == 4**5
        assert rep.cubic_scaling_cells == 2 * 2 * 1 * 64

    def test_next_state_defaults_to_state_width(self):
        assert memory_report(2, 0, 3).joint_cells == 3**4

    def test_saturation_clamps(self):
        rep = memory_report(5, 5, 100)
        assert rep.saturated
        assert rep.joint_cells == 2**63 - 1

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            memory_report(0, 1, 10)
        with pytest.raises(InvalidInputError):
            memory_report(1, -1, 10)
        with pytest.raises(InvalidInputError):
            memory_report(1, 1, 0)
