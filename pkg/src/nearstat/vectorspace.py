"""Deterministic vector-space utilities: inner products, orthonormal frames, sampling.

Vectors are plain 1-d ``numpy`` arrays of float64.  Randomness flows through
counter-based Philox generators so that every consumer can derive its own
named stream from a single master seed and replay results exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np

from nearstat.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoOrthogonalDirectionError,
)

# Residual below which a candidate direction counts as already spanned.
CANDIDATE_RESIDUAL_TOL = 1e-6


def as_vector(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float64 array of dimension >= 1."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DegenerateInputError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateInputError("vector has non-finite entries")
    return v


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def inner(a, b) -> float:
    """Euclidean inner product of two vectors of equal dimension."""
    a = as_vector(a)
    b = as_vector(b)
    check_same_dim(a, b)
    return float(a @ b)


def norm(a) -> float:
    return float(np.linalg.norm(as_vector(a)))


def normalize(v) -> np.ndarray:
    """Return ``v / ||v||``; the zero vector is rejected."""
    v = as_vector(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return v / n


def frame_tolerance(dim: int) -> float:
    return 1e-10 * np.sqrt(dim)


class OrthonormalFrame:
    """A growing list of mutually orthonormal vectors in a fixed dimension."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DegenerateInputError("frame dimension must be >= 1")
        self.dim = int(dim)
        self._vectors: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def vectors(self) -> list[np.ndarray]:
        return list(self._vectors)

    def matrix(self) -> np.ndarray:
        """Frame vectors stacked as rows, shape ``(len(self), dim)``."""
        if not self._vectors:
            return np.zeros((0, self.dim))
        return np.stack(self._vectors)

    def append(self, v) -> None:
        """Add a vector after checking unit norm and orthogonality to the frame."""
        v = as_vector(v)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(f"expected dimension {self.dim}, got {v.shape}")
        tol = frame_tolerance(self.dim)
        if abs(np.linalg.norm(v) - 1.0) > tol:
            raise DegenerateInputError("frame vector is not unit norm")
        for u in self._vectors:
            if abs(u @ v) > tol:
                raise DegenerateInputError("frame vector breaks orthogonality")
        self._vectors.append(v.copy())

    def project_out(self, v: np.ndarray) -> np.ndarray:
        """Component of ``v`` orthogonal to the frame (one reorthogonalization pass)."""
        r = v.astype(float, copy=True)
        for _ in range(2):
            for u in self._vectors:
                r -= (u @ r) * u
        return r


def orthonormal_basis_of(vectors, dim: int, drop_tol: float = 1e-12) -> OrthonormalFrame:
    """Build an orthonormal basis of ``span(vectors)`` by modified Gram-Schmidt.

    Vectors whose residual against the growing basis falls below ``drop_tol``
    times ``max(1, ||v||)`` contribute nothing and are skipped.
    """
    frame = OrthonormalFrame(dim)
    for v in vectors:
        v = as_vector(v)
        if v.shape != (dim,):
            raise DimensionMismatchError(f"expected dimension {dim}, got {v.shape}")
        r = frame.project_out(v)
        if np.linalg.norm(r) > drop_tol * max(1.0, np.linalg.norm(v)):
            frame._vectors.append(r / np.linalg.norm(r))
    return frame


def extend_orthonormal(frame: OrthonormalFrame | None, avoid=(), dim: int | None = None) -> np.ndarray:
    """Deterministically pick a unit vector orthogonal to a frame and an avoid set.

    Candidates are the standard basis vectors in index order; the first whose
    residual against span(frame + avoid) exceeds ``CANDIDATE_RESIDUAL_TOL`` is
    orthonormalized and returned.  Requires strictly fewer constraints than the
    ambient dimension.
    """
    if frame is None:
        if dim is None:
            raise DegenerateInputError("need a frame or an explicit dimension")
        frame = OrthonormalFrame(dim)
    d = frame.dim
    avoid = [as_vector(a) for a in avoid]
    for a in avoid:
        if a.shape != (d,):
            raise DimensionMismatchError(f"avoid vector has dimension {a.shape}, expected {d}")
    if len(frame) + len(avoid) >= d:
        raise DegenerateInputError(
            f"constraint count {len(frame) + len(avoid)} >= dimension {d}"
        )
    constraints = OrthonormalFrame(d)
    constraints._vectors = frame.vectors
    for a in avoid:
        r = constraints.project_out(a)
        rn = np.linalg.norm(r)
        if rn > 1e-12 * max(1.0, np.linalg.norm(a)):
            constraints._vectors.append(r / rn)
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        r = constraints.project_out(e)
        rn = np.linalg.norm(r)
        if rn > CANDIDATE_RESIDUAL_TOL:
            u = r / rn
            tol = frame_tolerance(d)
            worst = max((abs(c @ u) for c in constraints._vectors), default=0.0)
            if worst > tol:
                raise NoOrthogonalDirectionError(
                    f"orthogonalization residual {worst:.3e} above tolerance {tol:.3e}"
                )
            return u
    raise NoOrthogonalDirectionError("all candidate residuals below tolerance")


def derive_stream(seed: int, role: str) -> np.random.Generator:
    """A Philox generator keyed by ``(seed, role)``; identical inputs replay exactly."""
    digest = hashlib.sha256(role.encode("utf-8")).digest()
    role_key = int.from_bytes(digest[:8], "little")
    ss = np.random.SeedSequence(entropy=[int(seed) & (2**63 - 1), role_key])
    return np.random.Generator(np.random.Philox(ss))


def sample_sphere(dim: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the sphere of the given radius (normalized Gaussian)."""
    if dim < 1:
        raise DegenerateInputError("sphere dimension must be >= 1")
    if radius < 0:
        raise DegenerateInputError("sphere radius must be nonnegative")
    g = rng.standard_normal(dim)
    n = np.linalg.norm(g)
    while n == 0.0:  # probability zero, but keep the draw well defined
        g = rng.standard_normal(dim)
        n = np.linalg.norm(g)
    return (radius / n) * g


def sample_ball(dim: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the closed ball: sphere direction scaled by ``r * U**(1/d)``."""
    u = sample_sphere(dim, 1.0, rng)
    scale = radius * rng.random() ** (1.0 / dim)
    return scale * u


def sample_sphere_batch(dim: int, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    n = np.linalg.norm(g, axis=1, keepdims=True)
    n[n == 0.0] = 1.0
    return radius * g / n


def sample_ball_batch(dim: int, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    u = sample_sphere_batch(dim, 1.0, count, rng)
    scale = radius * rng.random(count) ** (1.0 / dim)
    return u * scale[:, None]
