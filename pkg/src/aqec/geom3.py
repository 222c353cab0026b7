"""Fixed-size (3x3) real linear algebra and random sampling on SO(3) and S^2.

Conventions used throughout the package:

- a vector is a shape ``(3,)`` float array,
- a matrix is a shape ``(3, 3)`` float array, row major,
- a rotation is a ``(3, 3)`` orthogonal matrix with determinant +1,
- a symmetric matrix is any ``(3, 3)`` array equal to its transpose.

All sampling routines take a ``numpy.random.Generator`` so that every
consumer owns its own stream and results stay reproducible.
"""

from __future__ import annotations

import numpy as np

# Tolerances for the structural checks below. Rotations produced by this
# module are orthogonal to machine precision; the looser 1e-10 accommodates
# rotations accumulated through downstream products.
ROTATION_TOL = 1e-10
UNIT_TOL = 1e-12


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius-norm distance sqrt(Tr[(a-b)^T (a-b)]) between two matrices."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(d * d)))


def is_rotation(q: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if ``q`` is orthogonal with determinant +1 within ``tol``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (3, 3) or not np.all(np.isfinite(q)):
        return False
    err = frobenius_distance(q.T @ q, np.eye(3))
    return err <= tol and abs(np.linalg.det(q) - 1.0) <= tol


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix for a unit quaternion ``(w, x, y, z)``."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def haar_rotation(rng: np.random.Generator) -> np.ndarray:
    """Draw a rotation from the Haar measure on SO(3).

    Uses a uniform unit quaternion (four standard normals, normalized),
    which maps exactly onto the Haar measure.
    """
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return quaternion_to_rotation(q)


def haar_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``haar_rotation``: returns an ``(n, 3, 3)`` array."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((n, 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def sphere_uniform(rng: np.random.Generator) -> np.ndarray:
    """Draw a unit vector uniformly on the sphere.

    Parametrized as (u, sqrt(1-u^2) sin(2 pi v), sqrt(1-u^2) cos(2 pi v))
    with u ~ U[-1, 1] and v ~ U[0, 1], which is uniform on S^2.
    """
    u = rng.uniform(-1.0, 1.0)
    v = rng.uniform(0.0, 1.0)
    r = np.sqrt(max(0.0, 1.0 - u * u))
    return np.array([u, r * np.sin(2 * np.pi * v), r * np.cos(2 * np.pi * v)])


def sym_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric 3x3 matrix.

    Returns ``(values, basis)`` with eigenvalues sorted descending and
    ``basis`` a proper rotation whose rows are the matching eigenvectors,
    i.e. ``basis @ m @ basis.T`` is diagonal. When the determinant of the
    eigenvector matrix is -1, the eigenvector of the smallest eigenvalue is
    negated; that choice leaves the two dominant axes untouched.

    Raises ``numpy.linalg.LinAlgError`` if the eigensolver fails to
    converge.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("expected a finite 3x3 matrix")
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    basis = vecs[:, order].T
    if np.linalg.det(basis) < 0:
        basis[2] = -basis[2]
    return vals, basis
