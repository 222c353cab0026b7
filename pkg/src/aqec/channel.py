"""Single-qubit noise channels at the Bloch-matrix / Pauli-rate level.

Two channel families are modeled:

- ``OrientedPauliChannel``: a Pauli channel conjugated by a basis rotation.
  Its Bloch matrix is ``(1 - 2p) I + 2p Q^T D Q`` where ``D`` holds the
  eccentricities (normalized per-type error rates) and ``Q`` is the
  orientation.
- ``DephasingChannel``: a one-parameter family that dephases along an axis
  at angle ``theta0`` in the X-Z plane; after twirling it produces X errors
  at rate ``p cos^2(delta)`` and Z errors at rate ``p sin^2(delta)`` for
  misalignment ``delta``.

Everything here is a pure value type; simulation happens at the
twirled-rate level, so no density matrices or Kraus operators appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom3 import is_rotation, sym_eig

_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class Eccentricities:
    """Normalized per-type error probabilities (k1, k2, k3) on the simplex."""

    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        ks = (self.k1, self.k2, self.k3)
        if any(k < 0 for k in ks):
            raise ValueError(f"eccentricities must be non-negative, got {ks}")
        if abs(sum(ks) - 1.0) > _SIMPLEX_TOL:
            raise ValueError(f"eccentricities must sum to 1, got {sum(ks)!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3])


@dataclass(frozen=True)
class PauliRates:
    """Per-qubit per-cycle X/Y/Z error probabilities."""

    px: float
    py: float
    pz: float

    def __post_init__(self):
        rates = (self.px, self.py, self.pz)
        if any(r < 0 or r > 1 for r in rates):
            raise ValueError(f"rates must lie in [0, 1], got {rates}")
        if self.p > 1 + _SIMPLEX_TOL:
            raise ValueError(f"total rate exceeds 1: {rates}")

    @property
    def p(self) -> float:
        return self.px + self.py + self.pz

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])


@dataclass(frozen=True, eq=False)
class OrientedPauliChannel:
    """Pauli channel with total rate ``p`` seen through a rotated basis.

    ``orientation`` is the rotation ``Q`` in the contraction form of the
    Bloch matrix, ``(1 - 2p) I + 2p Q^T D Q``. The total rate is capped at
    1/2, the regime in which that form is a Pauli channel in the rotated
    basis.
    """

    p: float
    ecc: Eccentricities
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"total error rate must lie in [0, 1/2], got {self.p}")
        if not is_rotation(self.orientation):
            raise ValueError("orientation must be a proper rotation")

    def a_matrix(self) -> np.ndarray:
        """The trace-1 symmetric part ``Q^T D Q`` of the Bloch matrix."""
        q = self.orientation
        return q.T @ np.diag(self.ecc.as_array()) @ q


@dataclass(frozen=True)
class DephasingChannel:
    """Dephasing at rate ``p`` along the axis at angle ``theta0`` (mod pi)."""

    p: float
    theta0: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"error rate must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "theta0", self.theta0 % math.pi)


def bloch_matrix(ch: OrientedPauliChannel) -> np.ndarray:
    """Bloch matrix ``(1 - 2p) I + 2p Q^T D Q`` of an oriented Pauli channel."""
    return (1.0 - 2.0 * ch.p) * np.eye(3) + 2.0 * ch.p * ch.a_matrix()


def effective_rates(ch: OrientedPauliChannel, control: np.ndarray) -> PauliRates:
    """Pauli rates seen after counter-rotating the codespace by ``control``.

    The counter-rotation conjugates the symmetric part to
    ``control @ A @ control.T``; its diagonal, scaled by ``p``, gives the
    effective X/Y/Z rates. They always sum to ``p`` because ``A`` has unit
    trace.
    """
    a = ch.a_matrix()
    k = np.einsum("ab,bc,ac->a", control, a, control)
    # Rounding can push a diagonal entry a hair outside [0, 1].
    k = np.clip(k, 0.0, 1.0)
    return PauliRates(ch.p * k[0], ch.p * k[1], ch.p * k[2])


def twirl_dephasing(ch: DephasingChannel, theta_hat: float) -> PauliRates:
    """Twirled rates of a dephasing channel under control angle ``theta_hat``.

    For misalignment ``delta = theta0 - theta_hat`` the twirled channel has
    ``px = p cos^2(delta)``, ``pz = p sin^2(delta)`` and no Y component.
    ``pz`` is computed first and ``px`` as the complement so the two sum to
    ``p`` exactly.
    """
    pz = ch.p * math.sin(ch.theta0 - theta_hat) ** 2
    return PauliRates(ch.p - pz, 0.0, pz)


def optimal_control(a_estimate: np.ndarray) -> np.ndarray:
    """Counter-rotation aligning an estimated channel with the code asymmetry.

    Diagonalizes the symmetric estimate and routes its eigenvalues
    (sorted ``l1 >= l2 >= l3``) to the axes as ``diag(l1, l3, l2)``: the
    dominant error type goes to X where the code corrects the most errors,
    the weakest to Y because Y errors count against both code distances.
    """
    _, basis = sym_eig(a_estimate)
    # Swap rows 2 and 3 with a sign flip to keep the determinant at +1.
    perm = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    return perm @ basis


def validate_unital(m: np.ndarray) -> bool:
    """Check that a Bloch matrix can belong to a unital qubit channel.

    Requires all singular values at most 1 and, for symmetric input, the
    three eigenvalue conditions ``1 + l_k >= |l_i + l_j|`` that characterize
    complete positivity of a diagonal unital channel.
    """
    m = np.asarray(m, dtype=float)
    tol = 1e-12
    if not np.all(np.isfinite(m)) or m.shape != (3, 3):
        return False
    if np.linalg.svd(m, compute_uv=False).max() > 1 + tol:
        return False
    if frob_asymmetry(m) <= 1e-12:
        l1, l2, l3 = sym_eig(m)[0]
        return (
            1 + l3 >= abs(l1 + l2) - tol
            and 1 + l2 >= abs(l1 + l3) - tol
            and 1 + l1 >= abs(l2 + l3) - tol
        )
    return True


def frob_asymmetry(m: np.ndarray) -> float:
    """Frobenius norm of the antisymmetric part of ``m``."""
    d = m - m.T
    return float(np.sqrt(np.sum(d * d)))
