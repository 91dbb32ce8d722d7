import numpy as np
import pytest

from nearstat.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoOrthogonalDirectionError,
)
from nearstat.vectorspace import (
    OrthonormalFrame,
    as_vector,
    derive_stream,
    extend_orthonormal,
    frame_tolerance,
    inner,
    norm,
    normalize,
    orthonormal_basis_of,
    sample_ball,
    sample_ball_batch,
    sample_sphere,
    sample_sphere_batch,
)


def test_as_vector_coerces_and_rejects():
    v = as_vector([1, 2, 3])
    assert v.dtype == float and v.shape == (3,)
    with pytest.raises(DegenerateInputError):
        as_vector(np.zeros((2, 2)))
    with pytest.raises(DegenerateInputError):
        as_vector([1.0, np.nan])


def test_norm_inner_normalize():
    assert norm([3.0, 4.0]) == 5.0
    assert inner([1.0, 2.0], [3.0, -1.0]) == 1.0
    u = normalize([0.0, 2.0])
    assert np.array_equal(u, [0.0, 1.0])
    with pytest.raises(DegenerateInputError):
        normalize(np.zeros(4))


def test_frame_append_checks_unit_and_orthogonal():
    fr = OrthonormalFrame(3)
    fr.append([1.0, 0.0, 0.0])
    with pytest.raises(DegenerateInputError):
        fr.append([2.0, 0.0, 0.0])
    with pytest.raises(DegenerateInputError):
        fr.append([1.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        fr.append([1.0, 0.0])
    fr.append([0.0, 1.0, 0.0])
    assert len(fr) == 2
    assert fr.matrix().shape == (2, 3)


def test_project_out_removes_span_component():
    fr = OrthonormalFrame(4)
    fr.append([1.0, 0.0, 0.0, 0.0])
    fr.append([0.0, 1.0, 0.0, 0.0])
    r = fr.project_out(np.array([2.0, -3.0, 1.0, 0.5]))
    assert np.allclose(r, [0.0, 0.0, 1.0, 0.5], atol=1e-15)


def test_orthonormal_basis_of_drops_dependent_vectors():
    rng = np.random.default_rng(7)
    vs = [rng.normal(size=5) for _ in range(3)]
    vs.append(vs[0] + vs[1])  # dependent, must be skipped
    fr = orthonormal_basis_of(vs, 5)
    assert len(fr) == 3
    Q = fr.matrix()
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-12)


def test_extend_orthonormal_prefers_canonical_axes():
    d = 6
    u = extend_orthonormal(None, dim=d)
    assert np.array_equal(u, np.eye(d)[0])
    u2 = extend_orthonormal(None, avoid=[np.eye(d)[0]], dim=d)
    assert np.array_equal(u2, np.eye(d)[1])


def test_extend_orthonormal_is_deterministic():
    rng = np.random.default_rng(3)
    avoid = [rng.normal(size=8) for _ in range(3)]
    a = extend_orthonormal(None, avoid=avoid, dim=8)
    b = extend_orthonormal(None, avoid=avoid, dim=8)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("d", [3, 5, 9])
def test_extend_orthonormal_orthogonality_property(d):
    rng = np.random.default_rng(100 + d)
    for trial in range(50):
        k = int(rng.integers(0, d - 1))
        fr = orthonormal_basis_of([rng.normal(size=d) for _ in range(k)], d)
        n_avoid = int(rng.integers(0, min(3, d - k)))
        avoid = [rng.normal(size=d) for _ in range(n_avoid)]
        u = extend_orthonormal(fr, avoid=avoid, dim=d)
        assert abs(np.linalg.norm(u) - 1.0) <= 1e-12
        tol = frame_tolerance(d)
        for v in fr.vectors:
            assert abs(u @ v) <= tol
        for v in avoid:
            nv = np.linalg.norm(v)
            if nv > 0:
                assert abs(u @ (v / nv)) <= tol


def test_extend_orthonormal_full_frame_raises():
    fr = orthonormal_basis_of(list(np.eye(3)), 3)
    with pytest.raises((DegenerateInputError, NoOrthogonalDirectionError)):
        extend_orthonormal(fr)


def test_derive_stream_reproducible_and_role_separated():
    a = derive_stream(42, "algorithm").standard_normal(4)
    b = derive_stream(42, "algorithm").standard_normal(4)
    c = derive_stream(42, "adversary").standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # huge and zero seeds both map into the accepted entropy range
    derive_stream(2**70 + 5, "certifier").random()
    derive_stream(0, "certifier").random()


def test_sphere_and_ball_sampling_radii():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = sample_sphere(5, 2.5, rng)
        assert abs(np.linalg.norm(x) - 2.5) <= 1e-12
        y = sample_ball(5, 0.7, rng)
        assert np.linalg.norm(y) <= 0.7 + 1e-12
    X = sample_sphere_batch(3, 1.0, 1000, rng)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
    Y = sample_ball_batch(3, 1.0, 1000, rng)
    assert np.linalg.norm(Y, axis=1).max() <= 1.0 + 1e-12


def test_ball_sampling_is_not_concentrated_at_center():
    # radii of a uniform ball draw in dim d follow r**d; the median is 2**(-1/d)
    rng = np.random.default_rng(2)
    r = np.linalg.norm(sample_ball_batch(4, 1.0, 4000, rng), axis=1)
    assert abs(np.median(r) - 2.0 ** (-1.0 / 4.0)) < 0.02


def test_sampling_rejects_bad_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(DegenerateInputError):
        sample_sphere(0, 1.0, rng)
    with pytest.raises(DegenerateInputError):
        sample_sphere(3, -1.0, rng)
