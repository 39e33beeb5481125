import numpy as np
import pytest

from brownbeads.sim import (Path, make_stream, sample_bes3, sample_bm, sample_excursion,
                            sample_excursion_until_height, scale_path)


def test_empty_walks():
    assert sample_bm(0, 0.1, 1).tolist() == [0.0]
    assert sample_bes3(0, 0.1, 1).tolist() == [0.0]
    p = sample_excursion(0, 0.1, 1)
    assert p.n == 0 and p.points.tolist() == [[0.0, 0.0]]


@pytest.mark.parametrize("f", [sample_bm, sample_bes3])
def test_bad_dt_rejected(f):
    with pytest.raises(ValueError):
        f(10, 0.0, 1)
    with pytest.raises(ValueError):
        f(10, -1.0, 1)


def test_bm_variance_at_one():
    rng = make_stream(11)
    ends = np.array([sample_bm(100, 0.01, rng)[-1] for _ in range(10_000)])
    assert abs(ends.var() - 1.0) < 0.05


def test_bm_long_walk_variance():
    # the n = 1e5, dt = 1e-3 case, replicas read off at t = 1
    rng = make_stream(12)
    w = sample_bm(100_000, 1e-3, rng)
    assert w.shape == (100_001,)
    vals = np.array([sample_bm(1000, 1e-3, rng)[-1] for _ in range(10_000)])
    assert abs(vals.var() - 1.0) < 0.05


def test_bes3_second_moment_matches_bruteforce():
    rng = make_stream(13)
    y = np.array([sample_bes3(50, 0.02, rng)[-1] for _ in range(10_000)])
    assert abs((y**2).mean() - 3.0) < 0.15
    # independent oracle: the norm of a brute-force 3-d walk
    g = make_stream(14).normal(0, np.sqrt(0.02), (10_000, 50, 3)).sum(axis=1)
    assert abs((g**2).sum(axis=1).mean() - 3.0) < 0.15


def test_bes3_positive():
    rng = make_stream(15)
    for _ in range(1000):
        y = sample_bes3(20, 1e-3, rng)
        assert y[0] == 0 and np.all(y[1:] > 0)


def test_excursion_coordinates_uncorrelated():
    rng = make_stream(16)
    xy = np.array([sample_excursion(20, 0.05, rng).points[-1] for _ in range(10_000)])
    r = np.corrcoef(xy[:, 0], xy[:, 1])[0, 1]
    assert abs(r) < 3 / np.sqrt(10_000)


def test_excursion_max_height_against_oracle():
    rng = make_stream(17)
    tops = np.array([sample_excursion(1000, 1e-3, rng).y.max() for _ in range(2000)])
    g = np.cumsum(make_stream(18).normal(0, np.sqrt(1e-3), (2000, 1000, 3)), axis=1)
    ref = np.sqrt((g**2).sum(axis=2)).max(axis=1)
    assert np.median(tops) == pytest.approx(np.median(ref), rel=0.05)
    assert (tops > 5).mean() < 0.001 and (ref > 5).mean() < 0.001


def test_path_invariants_and_immutability():
    p = sample_excursion(100, 0.01, 3)
    assert len(p) == p.n + 1 == 101
    assert p.points[0].tolist() == [0.0, 0.0] and np.all(p.y[1:] > 0)
    with pytest.raises(ValueError):
        p.points[0, 0] = 1.0
    with pytest.raises(Exception):
        p.dt = 2.0
    assert p.meta == {"seed": 3, "scheme": "exact-grid", "n": 100, "truncated": False}


def test_determinism():
    a, b = sample_excursion(500, 1e-3, 99), sample_excursion(500, 1e-3, 99)
    assert a == b and a.points.tobytes() == b.points.tobytes()
    assert sample_excursion(500, 1e-3, 98) != a


def test_streams_are_keyed():
    a = make_stream(5, 0, 1).random(4)
    assert np.array_equal(a, make_stream(5, 0, 1).random(4))
    assert not np.array_equal(a, make_stream(5, 1, 0).random(4))
    with pytest.raises(ValueError):
        make_stream(-1)


def test_until_height():
    p = sample_excursion_until_height(1e-9, 1e-3, 1)
    assert p.n <= 1 and not p.truncated
    p = sample_excursion_until_height(50, 1e-2, 2)
    assert p.y[-1] >= 50 and np.all(p.y[:-1] < 50) and not p.truncated
    assert sample_excursion_until_height(50, 1e-2, 2) == p
    q = sample_excursion_until_height(50, 1e-2, 3, n_cap=100)
    assert q.truncated and q.n == 100


def test_until_height_terminates_with_finite_mean_time():
    # BES(3) hitting time of y has mean y^2 / 3
    rng = make_stream(20)
    T = [sample_excursion_until_height(5.0, 1e-3, rng).n * 1e-3 for _ in range(100)]
    assert np.mean(T) == pytest.approx(25 / 3, rel=0.3)


def test_scale_path():
    p = sample_excursion(200, 0.01, 4)
    assert scale_path(p, 1.0) == p
    q = scale_path(p, 2.0)
    assert np.array_equal(q.points, p.points * 2) and q.dt == p.dt * 4
    s = Path([[0, 0], [0, 1]], 1.0)
    assert scale_path(s, 2.0).points.tolist() == [[0, 0], [0, 2]]
    with pytest.raises(ValueError):
        scale_path(p, 0.0)


def test_scale_path_composes_exactly():
    p = sample_excursion(200, 0.01, 5)
    for a, b in [(3.0, 0.7), (0.1, 10.0), (1.3, 1.7)]:
        lhs, rhs = scale_path(scale_path(p, a), b), scale_path(p, a * b)
        assert np.array_equal(lhs.points, rhs.points) and lhs.dt == rhs.dt
