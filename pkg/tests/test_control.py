import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betaspace import control as c
from betaspace.errors import DimensionMismatch, NonPositiveGain, NumericalOverflow
from betaspace.transform import TubeSet, build_beta_transform

gain_lists = st.lists(st.floats(0.05, 20.0), min_size=3, max_size=3)
length_incs = st.lists(st.floats(1.0, 200.0), min_size=3, max_size=3)


def transform_for(incs):
    return build_beta_transform(TubeSet(tuple(np.cumsum(incs))))


class TestBuild:
    def test_single_axis(self):
        ss = c.build_closed_loop(c.PIGains((1.0,), (1.0,)))
        assert ss.A.tolist() == [[-2, 1], [-1, 0]]
        assert ss.B.tolist() == [[1], [1]]
        assert ss.C.tolist() == [[1, 0]]
        assert ss.D.tolist() == [[0]]

    def test_three_axes(self):
        ss = c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1)))
        assert np.array_equal(ss.A[:3, :3], np.diag([-2.0, -3.0, -4.0]))
        assert np.array_equal(ss.A[3:, :3], -np.eye(3))

    @pytest.mark.parametrize("kp, ki", [((0, 1), (1, 1)), ((1, 1), (1, -2))])
    def test_gains_must_be_positive(self, kp, ki):
        with pytest.raises(NonPositiveGain):
            c.PIGains(kp, ki)

    @given(gain_lists, gain_lists)
    def test_positive_gains_are_stable(self, kp, ki):
        assert c.is_stable(c.build_closed_loop(c.PIGains(kp, ki)).A)


class TestTransform:
    def test_identity_transform_leaves_system(self):
        ss = c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1)))
        ident = build_beta_transform(TubeSet((1.0, 2.0, 3.0)))
        object.__setattr__(ident, "matrix", np.eye(3))
        object.__setattr__(ident, "inverse", np.eye(3))
        sh = c.transform_state_space(ss, ident)
        assert np.array_equal(sh.A, ss.A) and np.array_equal(sh.B, ss.B)
        assert sh.coordinates == c.TRANSFORMED

    def test_reference_blocks(self, tubes3):
        sh = c.transform_state_space(c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1))),
                                     build_beta_transform(tubes3))
        assert np.allclose(sh.A[:3, :3], [[-2, 0, 0], [1, -3, 0], [1, 1, -4]], atol=1e-12)
        assert np.allclose(sh.A[:3, 3:], [[3, 0, 0], [1, 2, 0], [1, 1, 1]], atol=1e-12)
        assert np.array_equal(sh.B[3:], np.eye(3))

    def test_conjugate_diagonal_examples(self):
        assert c.conjugate_diagonal([-2, -3, -4]).tolist() == [[-2, 0, 0], [1, -3, 0], [1, 1, -4]]
        assert np.array_equal(c.conjugate_diagonal([5, 5, 5]), np.diag([5.0, 5, 5]))

    @given(gain_lists, gain_lists, length_incs, length_incs)
    @settings(max_examples=50)
    def test_closed_forms_spectrum_and_length_independence(self, kp, ki, inc1, inc2):
        gains = c.PIGains(kp, ki)
        ss = c.build_closed_loop(gains)
        s1 = c.transform_state_space(ss, transform_for(inc1))
        s2 = c.transform_state_space(ss, transform_for(inc2))
        ul, ur, bu = c.closed_form_transformed_blocks(gains)
        for sh in (s1, s2):
            assert np.allclose(sh.A[:3, :3], ul, rtol=0, atol=1e-10)
            assert np.allclose(sh.A[:3, 3:], ur, rtol=0, atol=1e-10)
            assert np.allclose(sh.A[3:, :3], -np.eye(3), rtol=0, atol=1e-10)
            assert np.allclose(sh.B[:3], bu, rtol=0, atol=1e-10)
            assert np.array_equal(sh.C, ss.C) and np.array_equal(sh.D, ss.D)
        assert np.allclose(s1.A, s2.A, rtol=0, atol=1e-10)
        # equal gains give double roots, which move by ~sqrt(eps) under rounding;
        # the characteristic polynomial is the well-conditioned invariant
        scale = max(1.0, np.abs(np.poly(ss.A)).max())
        assert np.allclose(np.poly(s1.A), np.poly(ss.A), rtol=0, atol=1e-9 * scale)
        assert c.spectrum_distance(c.eigenvalues(ss.A), c.eigenvalues(s1.A)) < 1e-6

    def test_dimension_mismatch(self, tubes3):
        ss = c.build_closed_loop(c.PIGains((1, 2), (2, 1)))
        with pytest.raises(DimensionMismatch):
            c.transform_state_space(ss, build_beta_transform(tubes3))


class TestEigenvalues:
    def test_examples(self):
        assert np.allclose(c.eigenvalues(np.diag([-1.0, -2.0])), [-2, -1])
        assert np.allclose(c.eigenvalues([[0, 1], [-1, 0]]), [-1j, 1j])

    def test_similarity_invariance_random(self, tubes3):
        g = np.random.default_rng(3)
        t = build_beta_transform(tubes3)
        for _ in range(10):
            A = g.normal(size=(3, 3))
            ev = c.eigenvalues(A)
            ev2 = c.eigenvalues(t.matrix @ A @ t.inverse)
            assert c.spectrum_distance(ev, ev2) < 1e-9

    def test_not_square(self):
        with pytest.raises(DimensionMismatch):
            c.eigenvalues(np.zeros((2, 3)))


class TestOrdering:
    def test_pass_fixture(self):
        assert c.gain_ordering_check(c.PIGains((1, 2, 3), (3, 2, 1))).passed

    def test_reversed(self):
        rep = c.gain_ordering_check(c.PIGains((3, 2, 1), (3, 2, 1)))
        assert not rep.passed and rep.kp_violations == (1, 2) and rep.ki_violations == ()

    def test_equal_gains_pass(self):
        assert c.gain_ordering_check(c.PIGains((2, 2, 2), (1, 1, 1))).passed

    def test_ki_violation(self):
        rep = c.gain_ordering_check(c.PIGains((1, 2, 3), (1, 2, 1)))
        assert rep.ki_violations == (1,)


class TestSimulate:
    def test_zoh_matches_expm_for_scalar(self):
        ss = c.build_closed_loop(c.PIGains((1.0,), (1.0,)))
        Ad, Bd = c.discretize(ss, 0.1)
        # Ad for A with repeated eigenvalue -1: e^{-t}(I + t(A + I))
        t = 0.1
        assert np.allclose(Ad, np.exp(-t) * (np.eye(2) + t * (ss.A + np.eye(2))), atol=1e-14)
        assert np.allclose(Bd, np.linalg.solve(ss.A, (Ad - np.eye(2)) @ ss.B), atol=1e-14)

    def test_zero_reference_stays_zero(self, tubes3):
        ss = c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1)))
        tr = c.simulate(ss, c.constant([0, 0, 0]), 0.01, 5.0, tubes=tubes3)
        assert not tr.states.any()
        assert tr.violation_count == 0

    @pytest.mark.parametrize("transformed", [False, True])
    def test_steady_state_tracks_reference(self, tubes3, transformed):
        t = build_beta_transform(tubes3)
        ss = c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1)))
        if transformed:
            ss = c.transform_state_space(ss, t)
        ref = [-30.0, -60.0, -90.0]
        tr = c.simulate(ss, c.constant(ref), 0.01, 100.0, tubes=tubes3, saturate_unit=transformed)
        assert np.allclose(tr.beta[-1], ref, atol=1e-6)
        assert np.all(np.diff(tr.t) > 0)

    def test_violation_fixture(self):
        tubes = TubeSet(c.VIOLATION_LENGTHS)
        t = build_beta_transform(tubes)
        assert (c.step_response_overshoot(c.VIOLATION_GAINS) > 1.0).all()
        ss = c.build_closed_loop(c.VIOLATION_GAINS)
        vanilla = c.simulate(ss, c.constant(c.VIOLATION_REFERENCE), 0.01, 20.0, tubes=tubes)
        assert vanilla.violation_count >= 1
        boxed = c.simulate(c.transform_state_space(ss, t), c.constant(c.VIOLATION_REFERENCE), 0.01, 20.0,
                           saturate_unit=True)
        assert boxed.violation_count == 0

    def test_overflow_bound(self, tubes3):
        ss = c.build_closed_loop(c.PIGains((1, 1, 1), (1, 1, 1)))
        unstable = c.StateSpace(-ss.A, ss.B, ss.C, ss.D)
        with pytest.raises(NumericalOverflow) as info:
            c.simulate(unstable, c.constant([-1, -2, -3]), 0.1, 500.0, tubes=tubes3)
        assert info.value.step > 0

    def test_shipped_gains_stay_bounded(self, tubes3):
        from betaspace.config import load_robot

        for name in ("robot_a", "robot_b"):
            cfg = load_robot(name)
            for g in cfg.gains.values():
                ss = c.build_closed_loop(c.PIGains(g.kp, g.ki))
                tr = c.simulate(ss, c.constant(build_beta_transform(cfg.tubes).matrix @ np.full(3, 0.5)),
                                0.01, 100.0, tubes=cfg.tubes)
                assert np.isfinite(tr.states).all()

    def test_bad_time_grid(self, tubes3):
        ss = c.build_closed_loop(c.PIGains((1,), (1,)))
        with pytest.raises(ValueError):
            c.simulate(ss, c.constant([0]), 0.0, 1.0, tubes=TubeSet((1.0,)))
        with pytest.raises(ValueError):
            c.simulate(ss, c.constant([0]), 0.1, 0.05, tubes=TubeSet((1.0,)))

    def test_csv_export(self, tmp_path, tubes3):
        ss = c.build_closed_loop(c.PIGains((1, 2, 3), (3, 2, 1)))
        tr = c.simulate(ss, c.constant([-1, -2, -3]), 0.1, 1.0, tubes=tubes3)
        c.write_trajectory_csv(tr, tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,beta_1,beta_2,beta_3,violated,worst_violation"
        assert len(lines) == 12
