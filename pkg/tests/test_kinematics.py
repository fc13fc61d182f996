import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from betaspace import rng
from betaspace.errors import InvalidConfiguration
from betaspace.kinematics import (
    SERIES_THRESHOLD,
    Configuration,
    CTCRModel,
    PlanarCCSegment,
    TubeSpec,
    _arc_terms,
    cc_planar_tip,
    cc_toy_points,
    ctcr_tip,
    ctcr_tips,
    sample_rotations,
    toy_disk_points,
    toy_square_points,
)
from betaspace.transform import build_beta_transform

MODEL = CTCRModel((
    TubeSpec(50.0, 50.0, 0.010, 5.0),
    TubeSpec(90.0, 60.0, 0.015, 2.0),
    TubeSpec(120.0, 80.0, 0.020, 1.0),
))


def curvature_at(model: CTCRModel, alphas, betas, s: float) -> np.ndarray:
    """Stiffness-weighted curvature vector at arc length ``s``, from first principles."""
    num, den = np.zeros(2), 0.0
    for tube, a, b in zip(model.tubes, alphas, betas):
        if s < b + tube.length:  # tube present
            den += tube.stiffness
            if s >= b + tube.length_straight:
                num += tube.stiffness * tube.precurvature * np.array([np.cos(a), np.sin(a)])
    return num / den if den else num


def integrate_tip(model, alphas, betas) -> np.ndarray:
    """Integrate p' = R e3, R' = R [u]x with body rates u = (-k_y, k_x, 0)."""
    total = max(t.length + b for t, b in zip(model.tubes, betas))
    cuts = sorted({0.0, total, *[min(max(b + t.length_straight, 0), total) for t, b in zip(model.tubes, betas)],
                   *[t.length + b for t, b in zip(model.tubes, betas)]})
    y = np.concatenate([np.zeros(3), np.eye(3).ravel()])
    for s0, s1 in zip(cuts[:-1], cuts[1:]):
        if s1 - s0 <= 0:
            continue
        kx, ky = curvature_at(model, alphas, betas, 0.5 * (s0 + s1))
        u = np.array([-ky, kx, 0.0])
        hat = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])

        def rhs(_s, z):
            R = z[3:].reshape(3, 3)
            return np.concatenate([R[:, 2], (R @ hat).ravel()])

        y = solve_ivp(rhs, (s0, s1), y, rtol=1e-11, atol=1e-11).y[:, -1]
    return y[:3]


class TestPlanar:
    @pytest.mark.parametrize("kappa, ell, tip", [
        (0.0, 100.0, (0.0, 100.0)),
        (np.pi / 200, 100.0, (200 / np.pi, 200 / np.pi)),
        (2 * np.pi / 100, 100.0, (0.0, 0.0)),
    ])
    def test_examples(self, kappa, ell, tip):
        assert np.allclose(cc_planar_tip(PlanarCCSegment(ell, kappa)), tip, atol=1e-10)

    @pytest.mark.parametrize("ell", [1.0, 100.0])
    def test_series_continuous_at_switch(self, ell):
        for theta in (0.5 * SERIES_THRESHOLD, 0.999 * SERIES_THRESHOLD, 1.001 * SERIES_THRESHOLD):
            k = theta / ell
            series = np.array([k * ell**2 / 2 - k**3 * ell**4 / 24, ell - k**2 * ell**3 / 6])
            exact = np.array([2 * np.sin(theta / 2) ** 2 / k, np.sin(theta) / k])
            assert np.allclose(series, exact, rtol=0, atol=1e-10)
            lat, ax = _arc_terms(k, ell)
            assert abs(lat - series[0]) < 1e-10 and abs(ax - series[1]) < 1e-10

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            cc_planar_tip(PlanarCCSegment(-1.0, 0.1))


class TestToys:
    def test_square_inside_unit_square(self):
        p = toy_square_points(10_000, seed=3)
        assert p.shape == (10_000, 2) and p.min() >= 0 and p.max() < 1

    def test_disk_radius_quantiles(self):
        r_sqrt = np.hypot(*toy_disk_points(10_000, 1, sqrt_transform=True).T)
        r_lin = np.hypot(*toy_disk_points(10_000, 1, sqrt_transform=False).T)
        assert abs(np.mean(r_sqrt <= 0.5) - 0.25) < 0.01
        assert abs(np.mean(r_lin <= 0.5) - 0.5) < 0.01

    def test_cc_toy_bounds(self):
        p = cc_toy_points(5000, 0)
        assert (np.hypot(*p.T) <= 100.0 + 1e-9).all()


class TestCTCR:
    def test_straight_tubes(self):
        model = CTCRModel(tuple(TubeSpec(t.length_straight, t.length_curved, 0.0, t.stiffness) for t in MODEL.tubes))
        q = Configuration((0.3, 1.0, 2.0), (-10.0, -20.0, -30.0))
        assert np.allclose(ctcr_tip(model, q), (0, 0, 170.0), atol=1e-12)

    def test_single_tube_matches_planar(self):
        model = CTCRModel((TubeSpec(0.0, 100.0, 0.01, 1.0),))
        tip = ctcr_tip(model, Configuration((0.0,), (0.0,)))
        planar = cc_planar_tip(PlanarCCSegment(100.0, 0.01))
        assert np.allclose(tip, (planar[0], 0.0, planar[1]), atol=1e-12)

    def test_opposed_equal_tubes_cancel(self):
        model = CTCRModel((TubeSpec(50, 50, 0.01, 1.0), TubeSpec(50, 100, 0.01, 1.0)))
        tip = ctcr_tip(model, Configuration((0.0, np.pi), (0.0, 0.0)))
        # overlap [50, 100] is straight; only [100, 150] of tube 2 bends, towards -x
        expected = (-(1 - np.cos(0.5)) / 0.01, 0.0, 100 + np.sin(0.5) / 0.01)
        assert np.allclose(tip, expected, atol=1e-9)
        assert np.allclose(tip, integrate_tip(model, (0.0, np.pi), (0.0, 0.0)), atol=1e-6)

    def test_matches_numeric_integration(self):
        t = build_beta_transform(MODEL.tubeset)
        for k in range(8):
            u = rng.uniform_block(21, k, 1, 3)[:, 0]
            alphas = sample_rotations(3, 1, 21 + k)[:, 0]
            betas = t.matrix @ u
            tip = ctcr_tip(MODEL, Configuration(tuple(alphas), tuple(betas)))
            assert np.allclose(tip, integrate_tip(MODEL, alphas, betas), atol=1e-6)

    def test_invalid_configuration(self):
        with pytest.raises(InvalidConfiguration):
            ctcr_tip(MODEL, Configuration((0, 0, 0), (-50.0, -40.0, -100.0)))

    def test_model_validation(self):
        with pytest.raises(ValueError):
            CTCRModel((TubeSpec(10, 10, 0.1, 0.0),))
        with pytest.raises(ValueError):
            CTCRModel((TubeSpec(100, 10, 0.1, 1.0), TubeSpec(50, 10, 0.1, 1.0)))

    @given(st.integers(0, 10_000), st.floats(-np.pi, np.pi))
    @settings(max_examples=30, deadline=None)
    def test_rotational_symmetry_and_length_bound(self, seed, delta):
        t = build_beta_transform(MODEL.tubeset)
        betas = t.matrix @ rng.uniform_block(seed, 0, 16, 3)
        alphas = sample_rotations(3, 16, seed)
        p = ctcr_tips(MODEL, alphas, betas)
        q = ctcr_tips(MODEL, alphas + delta, betas)
        assert np.allclose(np.hypot(p[:, 0], p[:, 1]), np.hypot(q[:, 0], q[:, 1]), atol=1e-9)
        assert np.allclose(p[:, 2], q[:, 2], atol=1e-9)
        reach = np.array([tb.length for tb in MODEL.tubes])[-1] + betas[-1]
        assert (np.linalg.norm(p, axis=1) <= reach + 1e-9).all()
