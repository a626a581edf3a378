import numpy as np
import pytest
from hypothesis import given, strategies as st

from lprcodec.scheduler import (ContextModelSpec, Schedule, build_schedule, check_schedule,
                                context_offsets, image_schedule, num_steps, raster_schedule,
                                tile, wavefront_step)


def full_causal(k):
    h = k // 2
    return {(dr, dc) for dr in range(-h, 1) for dc in range(-h, h + 1) if dr < 0 or dc < 0}


def test_mask_sizes():
    m5, m4, m3 = (set(context_offsets(7, j)) for j in (5, 4, 3))
    assert m5 == full_causal(7) and len(m5) == 24
    assert m4 == m5 - {(-1, 3)} and len(m4) == 23
    assert m3 == m5 - {(-1, 3), (-1, 2)} and len(m3) == 22
    assert set(context_offsets(7, 1)) == {(dr, dc) for dr in range(-3, 1) for dc in range(-3, 0)}


def test_spec_validation():
    for k, j in ((4, 1), (1, 1), (7, 0), (7, 6), (3, 4)):
        with pytest.raises(ValueError):
            ContextModelSpec(k, j)


def test_step_formula():
    assert wavefront_step(3, 4, 1) == 4
    assert wavefront_step(3, 4, 2) == 7
    assert num_steps(9, 9, 5) == 41


@pytest.mark.parametrize("j,n", [(5, 41), (4, 33), (3, 25), (2, 17), (1, 9)])
def test_p9_step_counts(j, n):
    s = build_schedule(9, ContextModelSpec(7, j))
    assert len(s) == n == j * 9 - j + 1
    assert check_schedule(s)


def test_smallest_column_schedule():
    s = build_schedule(2, ContextModelSpec(3, 1), strict=False)
    assert s.groups == (((0, 0), (1, 0)), ((0, 1), (1, 1)))
    with pytest.raises(ValueError):
        build_schedule(2, ContextModelSpec(3, 1))


def test_checker_rejects_bad_orders():
    spec = ContextModelSpec(7, 5)
    # the j=3 wavefront is too steep for the full raster-causal mask
    loose = build_schedule(9, ContextModelSpec(7, 3))
    assert not check_schedule(Schedule(9, spec, loose.groups))
    assert check_schedule(raster_schedule(9, spec))
    dup = raster_schedule(3, spec).groups
    assert not check_schedule(Schedule(3, spec, dup + dup[:1]))
    assert not check_schedule(Schedule(3, spec, dup[:-1]))


@given(st.integers(1, 40), st.integers(1, 40), st.sampled_from([3, 5, 7]), st.data())
def test_edge_patches_valid(h, w, k, data):
    j = data.draw(st.integers(1, (k + 3) // 2))
    s = build_schedule(max(h, w), ContextModelSpec(k, j), h, w, strict=False)
    assert len(s) == num_steps(h, w, j)
    assert check_schedule(s, h, w)


def test_tiling_examples():
    assert len(tile(128, 128, 64)) == 4
    t = tile(65, 64, 64)
    assert len(t) == 2 and (t[1].height, t[1].width) == (1, 64)


@given(st.integers(1, 70), st.integers(1, 70), st.integers(1, 33))
def test_tiling_partition(H, W, P):
    cover = np.zeros((H, W), int)
    for p in tile(H, W, P):
        assert 1 <= p.height <= P and 1 <= p.width <= P
        cover[p.row:p.row + p.height, p.col:p.col + p.width] += 1
    assert (cover == 1).all()


@given(st.integers(1, 40), st.integers(1, 40), st.integers(5, 17), st.integers(1, 5))
def test_image_schedule_order(H, W, P, j):
    spec = ContextModelSpec(7, j)
    s = image_schedule(H, W, P, spec)
    seen = np.concatenate(s.steps)
    assert sorted(seen.tolist()) == list(range(H * W))
    rows, cols = np.divmod(np.arange(H * W), W)
    t_of = np.empty(H * W, int)
    for t, idx in enumerate(s.steps):
        t_of[idx] = t
        key = list(zip(s.patch_of[idx].tolist(), s.local_row[idx].tolist()))
        assert key == sorted(key)
    # every in-patch context neighbour sits in an earlier step
    for i in range(H * W):
        r, c = rows[i], cols[i]
        for dr, dc in spec.offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < H and 0 <= cc < W and rr // P == r // P and cc // P == c // P:
                assert t_of[rr * W + cc] < t_of[i]
