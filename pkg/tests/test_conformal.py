import logging

import numpy as np
import pytest

from brownbeads import (HullUnion, PolylineHull, Semidisk, VerticalSlit, avoid_probability,
                        compose, estimate_cap0, estimate_cap1, estimate_caps, f_transform,
                        hull_map, prefix_caps, sample_excursion, transformed_clock)
from brownbeads.conformal import _diameter, hull_geometry
from brownbeads.sim import Path


# exact values, each checked against a number computed another way ---------

@pytest.mark.parametrize("A", [VerticalSlit(0.0, 1.0), VerticalSlit(-2.0, 0.3), Semidisk(1.0, 1.0),
                               Semidisk(0.0, 2.5)])
def test_hcap_is_the_laurent_coefficient(A):
    M = hull_map(A)
    # f(z) = z + hcap / z + O(1/z^2) after recentring, so z (f(z) - z) -> hcap
    for y in (1e3, 1e4):
        z = complex(A.x0, y)
        w = z - A.x0
        assert (w * (M(z) - z)).real == pytest.approx(M.hcap(), rel=1e-5)


def _boundary_image_length(A, m=20001):
    M = hull_map(A)
    if isinstance(A, VerticalSlit):
        t = np.linspace(0, A.h, m)[:-1]
        side = [A.x0 + d + 1j * t for d in (-1e-13, 1e-13)]
    else:
        th = np.linspace(1e-9, np.pi - 1e-9, m)
        side = [A.x0 + (A.r + 1e-12) * np.exp(1j * th)]
    re = np.concatenate([M(z).real for z in side])
    return re.max() - re.min()


def test_cap0_from_image_interval():
    # harmonic measure from infinity is the image interval length over pi
    assert _boundary_image_length(VerticalSlit(0.0, 1.0)) / np.pi == pytest.approx(2 / np.pi, rel=1e-5)
    assert _boundary_image_length(Semidisk(0.0, 1.0)) / np.pi == pytest.approx(4 / np.pi, rel=1e-5)


def test_avoid_probability_exact_values():
    assert avoid_probability(Semidisk(2.0, 1.0)) == pytest.approx(0.75, abs=1e-15)
    assert avoid_probability(VerticalSlit(1.0, 1.0)) == pytest.approx(2 ** -0.5, abs=1e-15)
    with pytest.raises(ValueError):
        avoid_probability(Semidisk(0.5, 1.0))


def test_derivative_matches_finite_difference():
    M = compose([hull_map(VerticalSlit(0.5, 1.0)), hull_map(Semidisk(-1.0, 0.7))])
    rng = np.random.default_rng(0)
    z = rng.uniform(-4, 4, 50) + 1j * rng.uniform(2.5, 6, 50)
    h = 1e-6
    fd = (M(z + h) - M(z - h)) / (2 * h)
    assert np.allclose(M.deriv(z), fd, rtol=1e-6)


def test_compose_hcaps_add_and_order_matters():
    a, b = hull_map(VerticalSlit(0.0, 1.0)), hull_map(Semidisk(3.0, 1.0))
    ab, ba = compose([a, b]), compose([b, a])
    assert ab.hcap() == ba.hcap() == pytest.approx(1.5)
    z = np.complex128(1 + 2j)
    assert ab(z) != ba(z)
    with pytest.raises(ValueError):
        compose([])


def test_map_rejects_points_on_hull():
    M = hull_map(VerticalSlit(0.0, 1.0))
    with pytest.raises(ValueError):
        M(np.complex128(0.5j))
    with pytest.raises(ValueError):
        hull_map(Semidisk(0.0, 1.0))(np.complex128(0.3 + 0.3j))
    with pytest.raises(TypeError):
        hull_map(PolylineHull([(0, 0), (1, 1)]))


def test_map_sends_real_line_outside_hull_to_real_line():
    M = hull_map(VerticalSlit(0.0, 1.0))
    x = np.array([-5.0, -0.1, 0.1, 3.0]) + 0j
    assert np.allclose(M(x).imag, 0.0)


# Monte Carlo estimators ---------------------------------------------------

def test_semicircle_estimator_is_unbiased():
    c0, c1 = estimate_caps(VerticalSlit(0.0, 1.0), 20_000, stream=1, method="semicircle")
    assert abs(c1.value - 0.5) < 3 * c1.stderr
    assert abs(c0.value - 2 / np.pi) < 3 * c0.stderr
    c0, c1 = estimate_caps(Semidisk(0.0, 1.0), 20_000, stream=2, method="semicircle")
    assert abs(c1.value - 1.0) < 3 * c1.stderr
    assert abs(c0.value - 4 / np.pi) < 3 * c0.stderr


def test_point_estimator_defaults_and_records():
    c = estimate_cap1(VerticalSlit(0.0, 1.0), 4000, stream=3)
    assert c.y_start == pytest.approx(10 * (1.0 + 0.0))
    assert c.eps_boundary == pytest.approx(1e-4)
    rec = c.to_record()
    assert rec["estimator"] == "point:cap1" and rec["n_walkers"] == 4000
    assert estimate_cap0(VerticalSlit(0.0, 1.0), 4000, stream=3).kind == "cap0"
    with pytest.raises(ValueError):
        estimate_cap1(VerticalSlit(0.0, 1.0), 100, y_start=2.0)
    with pytest.raises(ValueError):
        estimate_cap1(VerticalSlit(0.0, 1.0), 100, method="bogus")


def test_estimates_are_deterministic():
    a = estimate_caps(Semidisk(1.0, 0.5), 5000, stream=7)
    b = estimate_caps(Semidisk(1.0, 0.5), 5000, stream=7)
    assert a == b


def test_step_cap_counts_escapes(caplog):
    with caplog.at_level(logging.WARNING, logger="brownbeads"):
        c = estimate_cap1(VerticalSlit(0.0, 1.0), 500, stream=1, max_steps=2)
    assert c.n_escaped > 0 and "exceeded" in caplog.text


def test_prefix_caps_increase_and_pair():
    p = sample_excursion(3000, 1e-3, 5)
    ks = [500, 1000, 2000, 3000]
    pc = prefix_caps(p, ks, 4000, 9)
    v = pc.values
    assert np.all(np.diff(v) > -3 * pc.stderr[1:])
    d, se = pc.increment(1, 2)
    assert se < np.hypot(pc.stderr[1], pc.stderr[2])
    # prefix estimate agrees with a direct estimate of the same hull
    _, direct = estimate_caps(PolylineHull(p.points[:2001]), 8000, stream=10, method="semicircle")
    assert abs(direct.value - v[2]) < 3 * np.hypot(direct.stderr, pc.stderr[2])
    with pytest.raises(ValueError):
        prefix_caps(p, [10, 5])


def test_union_between_largest_part_and_sum():
    A, B = VerticalSlit(0.0, 1.0), Semidisk(5.0, 1.0)
    _, cu = estimate_caps(HullUnion([A, B]), 20_000, stream=11, method="semicircle")
    assert cu.value <= 1.5 + 3 * cu.stderr and cu.value >= 1.0 - 3 * cu.stderr


def test_hull_geometry():
    diam, d0, c, R = hull_geometry(VerticalSlit(3.0, 4.0))
    assert (diam, d0, c, R) == (4.0, 3.0, 3.0, 4.0)
    assert _diameter(np.array([[0, 0], [1, 0], [2, 0], [3, 0], [4, 0]])) == 4.0
    assert _diameter(np.array([[0, 0], [0, 0]])) == 0.0


# f-transforms -------------------------------------------------------------

def test_transformed_clock_rules_agree():
    M = hull_map(Semidisk(5.0, 1.0))
    p = Path(np.column_stack([np.linspace(0, 2, 401), np.linspace(0, 3, 401)]), 0.01)
    s_mid = transformed_clock(M, p, "midpoint")
    s_trap = transformed_clock(M, p, "trapezoid")
    assert s_mid[0] == 0 and np.all(np.diff(s_mid) > 0)
    assert s_mid[-1] == pytest.approx(s_trap[-1], rel=1e-4)
    with pytest.raises(ValueError):
        transformed_clock(M, p, "simpson")


def test_f_transform_of_far_path_is_nearly_identity():
    M = hull_map(VerticalSlit(1000.0, 0.1))
    p = sample_excursion(2000, 1e-3, 4)
    q = f_transform(M, p)
    m = min(q.n, p.n)
    assert np.allclose(q.points[:m], p.points[:m], atol=1e-5)
    assert q.scheme == "f-transform:midpoint"


def test_f_transform_rejects_paths_through_hull():
    M = hull_map(VerticalSlit(0.5, 10.0))
    p = Path([(0, 0), (0.2, 1), (1.0, 1.5)], 0.1)
    with pytest.raises(ValueError):
        f_transform(M, p)
