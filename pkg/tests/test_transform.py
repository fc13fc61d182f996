import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betaspace import rng
from betaspace.errors import InvalidBeta, NonIncreasingLengths, NonPositiveEffectiveLength, OutOfRangeInput
from betaspace.transform import (
    TubeSet,
    ascending_pattern,
    beta_to_sym,
    beta_to_unit,
    build_beta_transform,
    check_constraints,
    count_pattern_violations,
    descending_pattern,
    descending_pattern_counterexample,
    feasible_mask,
    inverse_beta_transform,
    sym_to_beta,
    unit_to_beta,
    vertex_images,
)

increments = st.lists(st.floats(0.5, 200.0), min_size=1, max_size=7)


def tubes_from(incs) -> TubeSet:
    return TubeSet(tuple(np.cumsum(incs)))


def det_by_cofactors(A: np.ndarray) -> float:
    if len(A) == 1:
        return float(A[0, 0])
    return sum((-1) ** j * A[0, j] * det_by_cofactors(np.delete(A[1:], j, axis=1))
               for j in range(len(A)) if A[0, j] != 0)


class TestBuild:
    def test_matrix_for_reference_lengths(self, tubes3):
        t = build_beta_transform(tubes3)
        assert np.array_equal(t.matrix, [[-100, 0, 0], [-100, -50, 0], [-100, -50, -50]])
        assert t.determinant == -250000.0

    def test_margins_shift_lengths(self):
        t = build_beta_transform(TubeSet((100, 150, 200), (5, 5, 5)), use_margins=True)
        assert t.lengths.tolist() == [85.0, 140.0, 195.0]
        assert t.matrix[0, 0] == -85.0
        assert t.uses_margins

    def test_inverse_closed_form(self, tubes3):
        inv = inverse_beta_transform(build_beta_transform(tubes3))
        assert np.allclose(inv, [[-0.01, 0, 0], [0.02, -0.02, 0], [0, 0.02, -0.02]], rtol=0, atol=1e-15)

    def test_single_tube(self):
        t = build_beta_transform(TubeSet((100.0,)))
        assert t.inverse.tolist() == [[-0.01]]
        assert t.determinant == -100.0

    def test_arrays_are_read_only(self, tubes3):
        t = build_beta_transform(tubes3)
        with pytest.raises(ValueError):
            t.matrix[0, 0] = 1.0

    @pytest.mark.parametrize("lengths", [(100, 100, 200), (150, 100), (0, 10), (-5, 10)])
    def test_rejects_non_increasing(self, lengths):
        with pytest.raises(NonIncreasingLengths):
            TubeSet(lengths)

    def test_rejects_non_positive_effective_length(self):
        with pytest.raises(NonPositiveEffectiveLength):
            TubeSet((10, 150, 200), (5, 5, 5))

    @given(increments)
    def test_inverse_and_determinant_properties(self, incs):
        tubes = tubes_from(incs)
        t = build_beta_transform(tubes)
        n = tubes.n
        assert np.allclose(t.matrix @ t.inverse, np.eye(n), rtol=0, atol=1e-12)
        assert np.count_nonzero(t.inverse) == 2 * n - 1
        assert np.array_equal(np.tril(t.matrix), t.matrix)
        assert np.array_equal(t.matrix.sum(axis=1), -np.array(tubes.lengths))
        ref = det_by_cofactors(t.matrix) if n <= 5 else np.linalg.det(t.matrix)
        assert t.determinant == pytest.approx(ref, rel=1e-9)


class TestMaps:
    @pytest.mark.parametrize("u, beta", [
        ((0, 0, 0), (0, 0, 0)),
        ((1, 1, 1), (-100, -150, -200)),
        ((0.5, 0.5, 0.5), (-50, -75, -100)),
    ])
    def test_unit_examples(self, tubes3, u, beta):
        t = build_beta_transform(tubes3)
        assert np.allclose(unit_to_beta(t, u), beta, rtol=0, atol=1e-12)
        assert np.allclose(beta_to_unit(t, beta), u, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("s, beta", [
        ((-1, -1, -1), (0, 0, 0)),
        ((1, 1, 1), (-100, -150, -200)),
        ((0, 0, 0), (-50, -75, -100)),
    ])
    def test_sym_examples(self, tubes3, s, beta):
        t = build_beta_transform(tubes3)
        assert np.allclose(sym_to_beta(t, s), beta, rtol=0, atol=1e-12)
        assert np.allclose(beta_to_sym(t, beta), s, rtol=0, atol=1e-12)

    def test_out_of_range_rejected(self, tubes3):
        t = build_beta_transform(tubes3)
        with pytest.raises(OutOfRangeInput):
            unit_to_beta(t, (0.5, 1.1, 0.0))
        with pytest.raises(OutOfRangeInput):
            sym_to_beta(t, (-1.5, 0, 0))
        with pytest.raises(InvalidBeta):
            beta_to_unit(t, (-50, -40, -100))

    @given(increments, st.integers(0, 2**32))
    @settings(max_examples=50)
    def test_round_trips(self, incs, seed):
        t = build_beta_transform(tubes_from(incs))
        u = rng.uniform_block(seed, 0, 20, t.n)
        beta = unit_to_beta(t, u)
        scale = float(t.lengths[-1])
        assert np.allclose(unit_to_beta(t, beta_to_unit(t, beta)), beta, rtol=0, atol=1e-12 * scale)
        assert np.allclose(sym_to_beta(t, beta_to_sym(t, beta)), beta, rtol=0, atol=1e-12 * scale)
        assert np.allclose(beta_to_unit(t, beta), u, rtol=0, atol=1e-12)

    def test_image_is_always_feasible(self, tubes3):
        t = build_beta_transform(tubes3)
        u = rng.uniform_block(11, 0, 100_000, 3)
        assert feasible_mask(t.lengths, unit_to_beta(t, u), 1e-9).all()

    @given(increments)
    def test_vertices_are_tight(self, incs):
        t = build_beta_transform(tubes_from(incs))
        v = vertex_images(t)
        for k in range(v.shape[1]):
            rep = check_constraints(t.tubes, v[:, k])
            assert rep.valid
            tight = np.sum(np.isclose(rep.slack_order, 0, atol=1e-9)) + np.sum(
                np.isclose(rep.slack_length, 0, atol=1e-9))
            assert tight >= t.n


class TestConstraints:
    def test_midpoint_slacks(self, tubes3):
        rep = check_constraints(tubes3, (-50, -75, -100))
        assert rep.valid
        assert rep.slack_order.tolist() == [50, 25, 25]
        assert rep.slack_length.tolist() == [50, 25, 25]
        assert rep.min_slack == 25

    def test_order_chain_violation(self, tubes3):
        rep = check_constraints(tubes3, (-50, -40, -100))
        assert not rep.valid
        assert rep.slack_order[1] == -10
        assert (1, 2) in rep.violated()  # L_3 + beta_3 = 100 < 110 also breaks chain 2
        assert rep.worst_violation == 10

    def test_length_chain_violation(self, tubes3):
        rep = check_constraints(tubes3, (-10, -15, -120))
        assert not rep.valid
        assert (2, 3) in rep.violated()
        assert rep.slack_length[2] == pytest.approx(80 - 135)

    def test_tolerance(self, tubes3):
        assert check_constraints(tubes3, (1e-10, 0, 0)).valid
        assert not check_constraints(tubes3, (1e-8, 0, 0)).valid

    def test_margins(self):
        tubes = TubeSet((100, 150, 200), (5, 5, 5))
        assert check_constraints(tubes, (-100, -150, -200)).valid
        assert not check_constraints(tubes, (-100, -150, -200), use_margins=True).valid


class TestPatterns:
    def test_descending_hand_example(self):
        beta = descending_pattern((100, 200), np.array([1.0, 0.1]))
        assert beta.tolist() == pytest.approx([80.0, -20.0])
        assert not check_constraints(TubeSet((100, 200)), beta).valid

    def test_ascending_equals_matrix_map(self, tubes3):
        t = build_beta_transform(tubes3)
        u = rng.uniform_block(2, 0, 1000, 3)
        assert np.allclose(ascending_pattern(tubes3, u), t.matrix @ u, rtol=0, atol=1e-12)

    def test_counterexample_found(self, tubes3):
        u, beta = descending_pattern_counterexample(tubes3, seed=0)
        assert np.allclose(descending_pattern(tubes3, u), beta)
        assert check_constraints(tubes3, beta).slack_order.min() < 0

    def test_ascending_never_violates(self, tubes3):
        assert count_pattern_violations(tubes3, "ascending", 200_000, seed=4) == 0
