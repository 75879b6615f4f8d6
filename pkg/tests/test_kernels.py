import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from areaforge import kernels

IMPLS = kernels.implementations()


def polygon_soup(rng, n_faces):
    sizes = rng.integers(3, 7, size=n_faces)
    ptr = np.concatenate([[0], np.cumsum(sizes)])
    n_pts = int(sizes.sum()) + 5
    idx = rng.integers(0, n_pts, size=int(ptr[-1]))
    xy = rng.normal(size=(n_pts, 2))
    return xy, ptr, idx


def test_python_backend_always_present():
    assert "python" in IMPLS
    assert kernels.BACKEND in IMPLS


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40))
def test_face_area_backends_agree(seed, n):
    xy, ptr, idx = polygon_soup(np.random.default_rng(seed), n)
    ref = kernels.face_areas(xy, ptr, idx, impl=IMPLS["python"])
    for impl in IMPLS.values():
        assert np.allclose(kernels.face_areas(xy, ptr, idx, impl=impl), ref, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40))
def test_jacobian_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    xy, ptr, idx = polygon_soup(rng, n)
    col = np.where(rng.random(len(xy)) < 0.8, 2 * np.arange(len(xy)), -1)
    ref = kernels.area_jacobian(xy, ptr, idx, col, impl=IMPLS["python"])
    for impl in IMPLS.values():
        got = kernels.area_jacobian(xy, ptr, idx, col, impl=impl)
        dense = lambda r: np.bincount(r[0] * 1000 + r[1], weights=r[2], minlength=len(ptr) * 1000)  # noqa: E731
        assert np.allclose(dense(got), dense(ref), atol=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    xy, ptr, idx = polygon_soup(rng, 5)
    col = 2 * np.arange(len(xy))
    r, c, v = kernels.area_jacobian(xy, ptr, idx, col)
    J = np.zeros((len(ptr) - 1, 2 * len(xy)))
    np.add.at(J, (r, c), v)
    h = 1e-6
    for k in range(2 * len(xy)):
        d = np.zeros_like(xy)
        d.flat[k] = h
        fd = (kernels.face_areas(xy + d, ptr, idx) - kernels.face_areas(xy - d, ptr, idx)) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-6)


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_crossing_pairs_square_with_diagonals(name):
    xy = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 0], [0, 2], [1, 3]])
    pairs = kernels.crossing_pairs(xy, edges, impl=IMPLS[name])
    assert sorted(map(tuple, np.asarray(pairs).reshape(-1, 2).tolist())) == [(4, 5)]
