import time

import numpy as np
import pytest

from brownbeads.cut import (SegmentGrid, find_cuttimes, find_cuttimes_continued, has_cuttime_in,
                            naive_cuttimes)
from brownbeads.sim import Path, sample_excursion, scale_path

L_PATH = Path([(0, 0), (0, 1), (1, 1)], 1.0)
CROSSING = Path([(0, 0), (0, 2), (1, 2), (1, 1), (-1, 1)], 1.0)
STRAIGHT = Path([(0, k) for k in range(6)], 1.0)


@pytest.mark.parametrize("f", [find_cuttimes, naive_cuttimes])
def test_spec_examples(f):
    assert list(f(L_PATH)) == [1]
    assert list(f(CROSSING)) == []
    assert list(f(STRAIGHT)) == [1, 2, 3, 4]


def test_short_paths_have_no_cuts():
    assert len(find_cuttimes(Path([(0, 0), (1, 1)], 1.0))) == 0
    assert len(find_cuttimes(Path([(0, 0)], 1.0))) == 0


def test_hand_cases():
    # touching at a vertex of the past kills everything after it
    p = [(0, 0), (2, 0.5), (2, 2), (0, 2), (1, 0.25), (1, 3)]
    assert list(find_cuttimes(p)) == list(naive_cuttimes(p))
    # returning exactly to an earlier vertex: past and future still only
    # share that point, so both visits stay cut vertices
    q = [(0, 0), (0, 1), (1, 1), (1, 2), (0, 1), (0, 3)]
    assert list(find_cuttimes(q)) == list(naive_cuttimes(q)) == [1, 4]
    # but a later visit to it kills the vertex between the two visits
    r = [(0, 0), (0, 1), (1, 1), (1, 2), (0, 1), (-1, 1), (-1, 3)]
    assert 2 not in find_cuttimes(r) and 3 not in find_cuttimes(r)
    assert list(find_cuttimes(r)) == list(naive_cuttimes(r))


def test_zero_length_steps_are_ignored():
    p = [(0, 0), (0, 1), (0, 1), (1, 1), (1, 2)]
    assert list(find_cuttimes(p)) == list(naive_cuttimes(p)) == [1, 2, 3]


def test_oracle_on_lattice_walks():
    # integer lattices produce overlaps, repeated vertices and touchings
    rng = np.random.default_rng(1)
    for _ in range(3000):
        n = int(rng.integers(2, 14))
        pts = np.vstack([[0, 0], np.cumsum(rng.integers(-2, 3, (n, 2)), axis=0)]).astype(float)
        assert find_cuttimes(pts) == naive_cuttimes(pts)


def test_oracle_on_excursions():
    for s in range(20):
        p = sample_excursion(1500, 1e-3, 100 + s)
        assert find_cuttimes(p) == naive_cuttimes(p)


def test_naive_limit():
    with pytest.raises(ValueError):
        naive_cuttimes(sample_excursion(50, 1e-3, 1), limit=10)


def test_concatenation_only_removes():
    p = sample_excursion(3000, 1e-3, 7)
    full = set(find_cuttimes(p))
    for m in (500, 1500, 2500):
        pre = set(find_cuttimes(p.points[: m + 1]))
        assert {k for k in full if k < m} <= pre


def test_scale_invariance():
    p = sample_excursion(2000, 1e-3, 8)
    c = find_cuttimes(p)
    for r in (1e-3, 0.37, 5.0, 1e4):
        assert find_cuttimes(scale_path(p, r)) == c


def test_grid_registers_all_cells():
    p = sample_excursion(500, 1e-3, 9)
    g = SegmentGrid(p)
    assert g.nx * g.ny <= 4 * p.n + 64
    for i in range(p.n):
        if not g.valid[i]:
            continue
        a, b = p.points[i], p.points[i + 1]
        lo = np.floor((np.minimum(a, b) - [g.x0, g.y0]) / g.cell).astype(int)
        hi = np.floor((np.maximum(a, b) - [g.x0, g.y0]) / g.cell).astype(int)
        hi = np.minimum(hi, [g.nx - 1, g.ny - 1])
        for cx in range(lo[0], hi[0] + 1):
            for cy in range(lo[1], hi[1] + 1):
                c = cx * g.ny + cy
                assert i in g.items[g.start[c]:g.start[c + 1]]


def test_min_hit_matches_bruteforce():
    p = sample_excursion(400, 1e-2, 10)
    g = SegmentGrid(p)
    rng = np.random.default_rng(3)
    lo, hi = p.points.min(axis=0), p.points.max(axis=0)
    for _ in range(200):
        q0, q1 = rng.uniform(lo, hi), rng.uniform(lo, hi)
        expect = -1
        for i in range(p.n):
            if _meet(p.points[i], p.points[i + 1], q0, q1):
                expect = i
                break
        assert g.min_hit(q0, q1, p.n) == expect


def _meet(a, b, c, d):
    def o(p, q, r):
        return np.sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    return o(a, b, c) * o(a, b, d) <= 0 and o(c, d, a) * o(c, d, b) <= 0


def test_has_cuttime_in():
    assert has_cuttime_in(STRAIGHT, 0.5, 3.5)
    assert not has_cuttime_in(CROSSING, 1.0, 3.0)
    assert not has_cuttime_in(STRAIGHT, 1.2, 1.8)
    with pytest.raises(ValueError):
        has_cuttime_in(STRAIGHT, 2.0, 1.0)
    with pytest.raises(ValueError):
        has_cuttime_in(STRAIGHT, 0.0, 99.0)


def test_continuation_only_removes():
    p = sample_excursion(3000, 1e-3, 11)
    c, reached = find_cuttimes_continued(p, 100.0, 5)
    assert reached and set(c) <= set(find_cuttimes(p))
    assert find_cuttimes_continued(p, 100.0, 5)[0] == c


def test_million_steps_fast():
    p = sample_excursion(10**6, 1e-6, 12)
    find_cuttimes(p.points[:1000])  # compile
    t = time.perf_counter()
    c = find_cuttimes(p)
    assert time.perf_counter() - t < 30
    assert np.all(np.diff(c.indices) > 0)
