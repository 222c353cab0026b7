"""Discretized Bayesian estimator for a dephasing angle on [0, pi).

The posterior over the angle is held at the midpoints of ``N`` equal cells,
``theta_j = (j + 1/2) pi / N``. A correction cycle that diagnosed ``wx`` X
errors and ``wz`` Z errors under control angle ``theta_hat`` multiplies
cell ``j`` by ``cos^(2 wx)(theta_j - theta_hat) sin^(2 wz)(theta_j -
theta_hat)``; weights live in log space so bulk exponents of order 1e14
(from fast-forwarded idle stretches) stay finite.

One regularization departs from the bare midpoint rule: each likelihood
factor is floored at its average over one cell width. The control angle is
always some cell's midpoint, so the bare rule would multiply that cell by
``sin^2(0) = 0`` on every Z observation, permanently erasing the best cell
and, over many observations, the whole neighborhood of the true angle.
The floor is exactly the Bayes factor a cell-uniform prior would assign at
the coincident cell, and it leaves every non-coincident cell untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp


class DegenerateGridError(RuntimeError):
    """Raised when an update leaves no cell with positive weight."""


@dataclass(frozen=True)
class DriftModel:
    """Brownian angle drift with per-cycle variance ``kappa_sq`` (rad^2)."""

    kappa_sq: float

    def __post_init__(self):
        if not self.kappa_sq >= 0.0:
            raise ValueError(f"kappa_sq must be >= 0, got {self.kappa_sq}")


def recommended_cells(p: float, c: float = 1.0) -> int:
    """Cell count ceil(c / p), enough to suppress residual Z rates to O(p^3)."""
    if not 0 < p <= 1:
        raise ValueError(f"need 0 < p <= 1, got {p}")
    return max(2, math.ceil(c / p))


class AngleGrid:
    """Posterior over the dephasing angle, mutated in place by one trial."""

    def __init__(self, n_cells: int):
        if n_cells < 2:
            raise ValueError(f"need at least 2 cells, got {n_cells}")
        self.n_cells = n_cells
        self.cell_width = math.pi / n_cells
        self.midpoints = (np.arange(n_cells) + 0.5) * self.cell_width
        self.log_weights = np.full(n_cells, -math.log(n_cells))
        self.mle_index = 0
        # Average of sin^2 (equivalently cos^2 at pi/2) over one cell
        # centered on its zero; the likelihood floor discussed above.
        w = self.cell_width
        self._log_floor = math.log(0.5 - math.sin(w) / (2.0 * w))

    @classmethod
    def uniform(cls, n_cells: int) -> AngleGrid:
        return cls(n_cells)

    def copy(self) -> AngleGrid:
        g = AngleGrid.__new__(AngleGrid)
        g.__dict__.update(self.__dict__)
        g.log_weights = self.log_weights.copy()
        return g

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def mle(self) -> float:
        """Midpoint of the highest-weight cell (ties break to lowest index)."""
        return float(self.midpoints[self.mle_index])

    def update(self, wx: float, wz: float, theta_hat: float) -> None:
        """Multiply in the likelihood of (wx, wz) seen under ``theta_hat``.

        ``wx`` may be a bulk count accumulated over many cycles. A cycle
        with no errors carries no information and leaves the grid
        untouched.
        """
        if wx < 0 or wz < 0:
            raise ValueError("error weights must be non-negative")
        if not math.isfinite(theta_hat):
            raise ValueError("control angle must be finite")
        if wx == 0 and wz == 0:
            return
        delta = self.midpoints - theta_hat
        if wx:
            cos2 = np.cos(delta) ** 2
            self.log_weights += wx * np.maximum(
                np.log(np.maximum(cos2, 1e-300)), self._log_floor
            )
        if wz:
            sin2 = np.sin(delta) ** 2
            self.log_weights += wz * np.maximum(
                np.log(np.maximum(sin2, 1e-300)), self._log_floor
            )
        self._normalize()

    def bulk_update(self, n_x: float, theta_hat: float) -> None:
        """Fold in ``n_x`` accumulated X errors followed by one Z error."""
        if n_x < 0:
            raise ValueError("bulk X count must be non-negative")
        self.update(n_x, 1, theta_hat)

    def drift_step(self, drift: DriftModel | float) -> None:
        """Spread the posterior by circular convolution with a Gaussian.

        The kernel has variance ``kappa_sq`` and period pi; it is sampled
        at cell resolution, truncated at six standard deviations, wrapped,
        and normalized, so total mass is preserved.
        """
        kappa_sq = drift.kappa_sq if isinstance(drift, DriftModel) else float(drift)
        if kappa_sq < 0:
            raise ValueError(f"kappa_sq must be >= 0, got {kappa_sq}")
        if kappa_sq == 0.0:
            return
        n = self.n_cells
        top = self.log_weights.max()
        if not math.isfinite(top):
            raise DegenerateGridError("cannot drift a grid with no weight")
        offsets, kernel = _gaussian_cell_kernel(n, self.cell_width, kappa_sq)
        w = np.exp(self.log_weights - top)
        half = len(kernel) // 2
        if half < n:
            # Pad with the wrapped-around tail and run a plain convolution.
            padded = np.concatenate([w[n - half :], w, w[:half]])
            conv = np.convolve(padded, kernel, mode="valid")
        else:
            wrapped = np.zeros(n)
            np.add.at(wrapped, offsets % n, kernel)
            conv = np.maximum(np.fft.irfft(np.fft.rfft(w) * np.fft.rfft(wrapped), n), 0.0)
        total = conv.sum()
        if total <= 0.0:
            raise DegenerateGridError("drift left no weight on the grid")
        with np.errstate(divide="ignore"):
            self.log_weights = np.log(conv / total)
        self.mle_index = int(np.argmax(self.log_weights))

    def _normalize(self) -> None:
        if np.all(np.isneginf(self.log_weights)) or np.any(
            np.isnan(self.log_weights)
        ):
            raise DegenerateGridError("update annihilated every cell")
        self.log_weights -= logsumexp(self.log_weights)
        self.mle_index = int(np.argmax(self.log_weights))


def _gaussian_cell_kernel(
    n_cells: int, cell_width: float, kappa_sq: float
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Gaussian kernel sampled at cell offsets, cut at 6 sigma."""
    sigma = math.sqrt(kappa_sq)
    half = max(1, math.ceil(6.0 * sigma / cell_width))
    offsets = np.arange(-half, half + 1)
    kernel = np.exp(-((offsets * cell_width) ** 2) / (2.0 * kappa_sq))
    return offsets, kernel / kernel.sum()
