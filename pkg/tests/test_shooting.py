import math

import numpy as np
import pytest

from morseforge.errors import InvalidStart, StepTooLarge
from morseforge.orbit import FLAT, SPHERICAL, CurveState, OrbitPoint
from morseforge.quantities import mean_curvature_residual
from morseforge.shooting import (ProfileCurve, bisector_crossings, central_mirror, cone_distance,
                                 edge_start_expansion, equator_curve, football_meridian,
                                 integrate_profile, profile_from_edge, shoot_alencar,
                                 symmetry_defect)


def test_flat_edge_start_series():
    d = 1e-4
    st = edge_start_expansion(1.0, FLAT, d)
    assert abs(st.point.c1 - 1.0) < 10 * d * d and abs(st.point.c2 - d) < d ** 3
    assert abs(st.tangent[0]) < 10 * d and abs(st.tangent[1] - 1.0) < 1e-6


def test_edge_start_rejects_poles():
    with pytest.raises(InvalidStart):
        edge_start_expansion(0.0, SPHERICAL, 1e-4)


def test_cone_start_stays_on_cone():
    st = CurveState(OrbitPoint(1.0, 1.0), (1 / math.sqrt(2), 1 / math.sqrt(2)))
    c = integrate_profile(st, FLAT, 1e-3, 10.0)
    assert np.max(cone_distance(c)) < 1e-9


def test_football_meridian_is_exact():
    c = football_meridian(h=1e-4)
    assert np.all(c.c[:, 1] == math.pi / 4)
    assert bisector_crossings(c) == 0
    assert mean_curvature_residual(c) < 1e-8


def test_equator_curve_stays_at_right_angle():
    c = equator_curve(h=1e-4)
    assert np.max(np.abs(c.c[:, 0] - math.pi / 2)) < 1e-10
    assert bisector_crossings(c) == 1
    assert c.meta["start"]["type"] == "edge" and c.meta["end"]["type"] == "edge"


def test_step_outside_range():
    with pytest.raises(ValueError):
        profile_from_edge(1.0, FLAT, 0.1, 10.0)


def test_output_step_does_not_change_the_curve():
    # RK4 substeps are capped by the local orbit scale, so coarse output steps
    # sample the same solution
    ref = profile_from_edge(1.0, FLAT, 2e-5, 5.0)
    k = int(round(4.0 / 2e-5))
    for h in (1e-2, 5e-3):
        c = profile_from_edge(1.0, FLAT, h, 5.0)
        j = int(round(4.0 / h))
        assert np.linalg.norm(c.X[j] - ref.X[k]) < 1e-10


@pytest.fixture(scope="module")
def alencar_long():
    return shoot_alencar(h=1e-3, s_max=320.0)


class TestAlencar:
    @pytest.fixture
    def curve(self, alencar_long):
        return alencar_long

    def test_approaches_cone(self, curve):
        d = cone_distance(curve)
        assert d[np.searchsorted(curve.s, 20.0)] < d[np.searchsorted(curve.s, 5.0)]

    def test_crossings_grow_with_length(self, curve):
        short = shoot_alencar(h=1e-3, s_max=40.0)
        assert short.meta["cone_crossings"] >= 1
        assert curve.meta["cone_crossings"] > short.meta["cone_crossings"]

    def test_blow_down_near_cone(self, curve):
        r = np.linalg.norm(curve.X, axis=1)
        lam = math.exp(5.0)
        sel = (r >= lam) & (r <= 2 * lam)
        assert sel.any()
        assert np.max(cone_distance(curve)[sel] / r[sel]) < 0.05


def test_central_mirror_is_an_involution():
    X = football_meridian(h=1e-2).X
    np.testing.assert_allclose(central_mirror(central_mirror(X)), X, atol=1e-15)


@pytest.mark.parametrize("i", [0, 1, 2, 3])
def test_hsiang_branches(hsiang, i):
    hp = hsiang[i]
    assert hp.curve.meta["crossings"] == 2 * i + 1
    assert hp.symmetry_defect < 1e-8
    assert mean_curvature_residual(hp.curve) < 1e-6


def test_hsiang_start_radii(hsiang):
    assert abs(hsiang[0].r0 - math.pi / 2) < 1e-12
    assert 0 < hsiang[1].r0 < math.pi / 2
    assert hsiang[2].r0 < hsiang[1].r0


def test_mirrored_profile_is_centrally_symmetric(hsiang):
    assert symmetry_defect(hsiang[2].curve) < 1e-10


def test_csv_round_trip(tmp_path, hsiang):
    c = hsiang[1].curve
    c.to_csv(tmp_path / "c.csv")
    back = ProfileCurve.from_csv(tmp_path / "c.csv")
    assert np.array_equal(back.c, c.c) and np.array_equal(back.t, c.t)
    assert back.meta["start"] == c.meta["start"] and back.meta["end"] == c.meta["end"]
