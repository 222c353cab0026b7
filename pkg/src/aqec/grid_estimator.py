"""Randomized-grid Bayesian estimator for oriented Pauli channels.

The unknown is the trace-1 symmetric part ``A`` of the channel's Bloch
matrix. Since syndrome statistics only expose the diagonal of ``A`` in the
current control frame, a regular mesh over the five-dimensional parameter
space is impractical; instead the posterior is tracked over ``N`` randomly
sampled candidate matrices. Candidates are built from eccentricities drawn
on the simplex (``x1 ~ U[0,1]``, ``x2 ~ U[0, 1-x1]``, ``x3`` the
remainder, so the mean candidate is (1/2, 1/4, 1/4)) conjugated by a Haar
rotation.

A cycle observed under counter-rotation ``control`` with error counts
``(wx, wy, wz)`` multiplies candidate ``X`` by ``kx^wx ky^wy kz^wz`` where
``(kx, ky, kz) = diag(control @ X @ control.T)``; the total error rate
``p`` cancels in the normalization, so the posterior never needs it.
"""

from __future__ import annotations

import math

import numpy as np

from . import geom3
from .channel import optimal_control

# Candidates this many nats below the posterior maximum stop receiving
# likelihood updates (e^-46 ~ 1e-20 cannot influence the MLE), bounding the
# per-event cost; they keep their last weights and rejoin once the gap to
# the maximum shrinks back under the threshold.
PRUNE_NATS = 46.0


class GridExhaustedError(RuntimeError):
    """Raised when an observation eliminates every candidate."""


class ChannelGrid:
    """Posterior over candidate channel matrices, owned by a single trial."""

    def __init__(
        self,
        matrices: np.ndarray,
        eccentricities: np.ndarray,
        orientations: np.ndarray,
    ):
        self.matrices = matrices
        self.eccentricities = eccentricities
        self.orientations = orientations
        n = len(matrices)
        self.log_weights = np.full(n, -np.log(n))
        self.mle_index = 0
        self._active = np.ones(n, dtype=bool)

    @classmethod
    def sample(cls, n_points: int, rng: np.random.Generator) -> ChannelGrid:
        """Draw ``n_points`` random candidates with a uniform prior."""
        if n_points < 1:
            raise ValueError(f"need at least one candidate, got {n_points}")
        x1 = rng.uniform(0.0, 1.0, n_points)
        x2 = rng.uniform(0.0, 1.0, n_points) * (1.0 - x1)
        x3 = 1.0 - x1 - x2
        ecc = np.column_stack([x1, x2, x3])
        rot = geom3.haar_rotations(n_points, rng)
        mats = np.einsum("nji,nj,njk->nik", rot, ecc, rot)
        return cls(mats, ecc, rot)

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def n_points(self) -> int:
        return len(self.matrices)

    def update(self, triple, control: np.ndarray) -> None:
        """Fold in one observed weight triple seen under ``control``.

        Candidates assigning exact zero rate to an observed error type are
        eliminated. Raises ``GridExhaustedError`` if nothing survives; the
        caller is expected to restart with a fresh grid.
        """
        wx, wy, wz = triple.wx, triple.wy, triple.wz
        if wx == 0 and wy == 0 and wz == 0:
            return
        act = self._active
        n_total = len(self.log_weights)
        n_act = int(act.sum())
        if n_act * 2 >= n_total:
            # Mostly active: compute for everyone, apply under the mask.
            mats, idx = self.matrices, None
        else:
            idx = np.flatnonzero(act)
            mats = self.matrices[idx]
        # k[n, a] = control[a] . X_n . control[a], the candidate's effective
        # rate fractions in the control frame, for all three axes at once.
        y = (mats.reshape(-1, 3) @ control.T).reshape(-1, 3, 3)
        k = (y * control.T).sum(axis=1)
        # Exact zeros mean "impossible under this candidate"; small negative
        # values are eigenvalue rounding, treated the same way.
        logk = np.log(np.minimum(np.maximum(k, 1e-300), 1.0))
        logk[k <= 0.0] = -np.inf
        delta = None
        for weight, axis in ((wx, 0), (wy, 1), (wz, 2)):
            if weight:
                term = weight * logk[:, axis]
                delta = term if delta is None else delta + term
        if idx is None:
            if n_act == n_total:
                self.log_weights += delta
            else:
                np.add(self.log_weights, delta, where=act, out=self.log_weights)
        else:
            self.log_weights[idx] += delta
        self._normalize()

    def mle_control(self) -> tuple[np.ndarray, np.ndarray]:
        """Highest-weight candidate and the counter-rotation tuned to it."""
        x = self.matrices[self.mle_index]
        return x, optimal_control(x)

    def min_distance(self, a: np.ndarray) -> float:
        """Smallest Frobenius distance from any candidate to ``a``."""
        d = self.matrices - np.asarray(a, dtype=float)
        return float(np.sqrt(np.einsum("nij,nij->n", d, d).min()))

    def _normalize(self) -> None:
        lw = self.log_weights
        top_index = int(np.argmax(lw))
        top = lw[top_index]
        if not np.isfinite(top):
            raise GridExhaustedError("every candidate was eliminated")
        lw -= top
        lw -= math.log(np.exp(lw).sum())
        self.mle_index = top_index
        # Pruning is re-entrant: skipped candidates keep stale weights, and
        # as the active set accumulates negative log-likelihood they drift
        # back within range and rejoin the updates.
        self._active = lw >= lw[top_index] - PRUNE_NATS


def min_distances(
    n_points: int, n_grids: int, a: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Min Frobenius distance to ``a`` for ``n_grids`` fresh random grids.

    Equivalent to sampling ``ChannelGrid`` repeatedly and calling
    ``min_distance``, but batched across grids for the spacing studies.
    """
    a = np.asarray(a, dtype=float)
    out = np.empty(n_grids)
    # Cap the flattened batch size to bound memory.
    per_batch = max(1, int(2e6) // max(1, n_points))
    done = 0
    while done < n_grids:
        m = min(per_batch, n_grids - done)
        x1 = rng.uniform(0.0, 1.0, (m, n_points))
        x2 = rng.uniform(0.0, 1.0, (m, n_points)) * (1.0 - x1)
        ecc = np.stack([x1, x2, 1.0 - x1 - x2], axis=-1)
        rot = geom3.haar_rotations(m * n_points, rng).reshape(m, n_points, 3, 3)
        mats = np.einsum("gnji,gnj,gnjk->gnik", rot, ecc, rot)
        d = mats - a
        out[done : done + m] = np.sqrt(
            np.einsum("gnij,gnij->gn", d, d).min(axis=1)
        )
        done += m
    return out
