"""Monte Carlo trial engines and the seeded ensemble runner.

A trial simulates error-correction cycles against a noise channel until
the first uncorrectable error pattern (a weight triple outside the code's
correction budgets) or a cycle cap. Three engines exist:

- ``run_dephasing_trial``: cycle-exact simulation of the single-angle
  dephasing model, with or without Brownian drift of the angle. When the
  angle is static the engine jumps over error-free cycles with geometric
  inter-arrival times, which is distribution-preserving because error-free
  cycles change nothing.
- ``run_dephasing_trial_fast``: rare-event fast-forward for the static
  dephasing model. Samples the time to the next Z-containing cycle and the
  time to an uncorrectable X burst as competing geometrics, then draws the
  X errors of the intervening idle stretch as one aggregate binomial. The
  aggregate draw ignores the per-cycle cap ``wx <= tx`` in those
  stretches, an O(P(X burst)) bias accepted because the engine must match
  the exact engine in distribution (see the equivalence tests).
- ``run_unital_trial``: adaptive estimation of a fixed oriented Pauli
  channel with a randomized candidate grid; again jumps error-free
  stretches geometrically, which is exact because the total error
  probability per cycle is orientation-independent.

All engines consume one ``numpy.random.Generator`` seeded per trial;
``run_ensemble`` derives trial seeds from a base seed with a SplitMix64
mix, so results are reproducible and independent of worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .angle_estimator import AngleGrid, DriftModel
from .channel import (
    DephasingChannel,
    Eccentricities,
    OrientedPauliChannel,
    PauliRates,
    effective_rates,
    twirl_dephasing,
)
from .codes import AsymmetricCode, WeightTriple, binomial_tail, correctable, p_fail_exact
from .geom3 import frobenius_distance, haar_rotation
from .grid_estimator import ChannelGrid, GridExhaustedError

DEFAULT_MAX_CYCLES = 2**62

_MASK64 = (1 << 64) - 1


def mix64(seed: int, index: int) -> int:
    """SplitMix64 finalizer over (seed, index); decorrelates trial streams."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def sample_geometric(rng: np.random.Generator, q: float) -> int | None:
    """First-success time in {1, 2, ...} for per-trial probability ``q``.

    Inverse-CDF sampling through ``log1p`` keeps rare events (q down to
    1e-300) exact; returns None for q <= 0, meaning "never".
    """
    if q <= 0.0:
        return None
    if q >= 1.0:
        return 1
    u = rng.random()
    return max(1, math.ceil(math.log1p(-u) / math.log1p(-q)))


def sample_binomial_big(rng: np.random.Generator, m: int, q: float) -> int:
    """Binomial(m, q) draw tolerating astronomically large ``m``.

    Gaussian with continuity correction once the mean is large, Poisson for
    rare events, exact sampling otherwise. The draw only ever feeds a
    smooth log-likelihood exponent, so tail fidelity is not critical.
    """
    if m <= 0 or q <= 0.0:
        return 0
    if q >= 1.0:
        return m
    mean = m * q
    if mean >= 1e3:
        x = rng.normal(mean, math.sqrt(mean * (1.0 - q)))
        return min(m, max(0, round(x)))
    if q < 1e-6:
        return min(m, int(rng.poisson(mean)))
    return int(rng.binomial(m, q))


def _count_cdf_at_least(n: int, q: float, kmin: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and CDF of Bin(n, q) conditioned on the count being >= kmin."""
    ws = np.arange(kmin, n + 1)
    pmf = np.array(
        [math.comb(n, int(w)) * q ** int(w) * (1.0 - q) ** (n - int(w)) for w in ws]
    )
    total = pmf.sum()
    if total <= 0.0:
        # Conditioning on an impossible event; fall back to the floor.
        return ws[:1], np.ones(1)
    return ws, np.cumsum(pmf) / total


def _draw_from_cdf(rng: np.random.Generator, values: np.ndarray, cdf: np.ndarray) -> int:
    return int(values[np.searchsorted(cdf, rng.random(), side="right").clip(0, len(values) - 1)])


def sample_syndrome(rates: PauliRates, n: int, rng: np.random.Generator) -> WeightTriple:
    """One correction cycle: each of n qubits errs independently."""
    p = rates.p
    pvals = np.array([max(0.0, 1.0 - p), rates.px, rates.py, rates.pz])
    counts = rng.multinomial(n, pvals / pvals.sum())
    return WeightTriple(int(counts[1]), int(counts[2]), int(counts[3]))


def angle_distance(a: float, b: float) -> float:
    """Distance between two angles identified modulo pi."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


# ---------------------------------------------------------------------------
# Trial configurations and results


@dataclass(frozen=True)
class DephasingTrialConfig:
    """One dephasing-model trial; ``theta0=None`` draws the angle uniformly."""

    code: AsymmetricCode
    p: float
    n_cells: int
    theta0: float | None = None
    kappa_sq: float = 0.0
    engine: str = "fast-forward"
    adaptive: bool = True
    max_cycles: int = DEFAULT_MAX_CYCLES
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.n_cells < 2:
            raise ValueError("need at least 2 grid cells")
        if self.kappa_sq < 0:
            raise ValueError("kappa_sq must be >= 0")
        if self.engine not in ("fast-forward", "per-cycle"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "fast-forward" and self.kappa_sq != 0.0:
            raise ValueError("fast-forward engine requires a static angle")
        if not 1 <= self.max_cycles <= DEFAULT_MAX_CYCLES:
            raise ValueError("max_cycles out of range")


@dataclass(frozen=True, eq=False)
class UnitalTrialConfig:
    """One oriented-Pauli-channel trial; ``orientation=None`` draws Haar."""

    code: AsymmetricCode
    p: float
    ecc: Eccentricities
    n_points: int
    orientation: np.ndarray | None = None
    adaptive: bool = True
    max_cycles: int = DEFAULT_MAX_CYCLES
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"p must lie in [0, 1/2], got {self.p}")
        if self.n_points < 1:
            raise ValueError("need at least one grid point")
        if not 1 <= self.max_cycles <= DEFAULT_MAX_CYCLES:
            raise ValueError("max_cycles out of range")


@dataclass(frozen=True)
class TrialResult:
    """Outcome of a single trial.

    ``lifetime_cycles`` counts cycles up to and including the failing one;
    censored trials carry ``lifetime_cycles == max_cycles`` and no failure
    triple. ``estimator_error_at_failure`` is the Frobenius distance of the
    final channel estimate for unital trials and the angular misalignment
    (mod pi) for dephasing trials; NaN where no estimator ran.
    """

    lifetime_cycles: int
    censored: bool
    failure_triple: tuple[int, int, int] | None
    n_posterior_updates: int
    estimator_error_at_failure: float
    seed: int
    grid_restarts: int = 0
    error: str | None = None


# ---------------------------------------------------------------------------
# Dephasing engines


def run_dephasing_trial(cfg: DephasingTrialConfig) -> TrialResult:
    """Cycle-exact dephasing trial (static or drifting angle).

    Every cycle draws twirled X/Z error counts from the current
    misalignment; Z-containing cycles feed the estimator (with the X count
    accumulated since the previous feed) and move the control angle to the
    posterior maximum. With a static angle, error-free cycles are skipped
    via geometric jumps, which leaves the process distribution unchanged.
    """
    rng = np.random.default_rng(cfg.seed)
    theta0 = rng.uniform(0.0, math.pi) if cfg.theta0 is None else cfg.theta0 % math.pi
    if cfg.kappa_sq > 0.0:
        return _dephasing_drift_trial(cfg, rng, theta0)
    if not cfg.adaptive:
        ch = DephasingChannel(cfg.p, theta0)
        theta_hat = 0.5 * math.pi / cfg.n_cells
        rates = twirl_dephasing(ch, theta_hat)
        return _static_rate_trial(cfg.code, rates, rng, cfg.max_cycles, cfg.seed,
                                  estimator_error=angle_distance(theta_hat, theta0))
    return _dephasing_static_adaptive(cfg, rng, theta0)


def _dephasing_static_adaptive(
    cfg: DephasingTrialConfig, rng: np.random.Generator, theta0: float
) -> TrialResult:
    code, n, p = cfg.code, cfg.code.n, cfg.p
    ch = DephasingChannel(p, theta0)
    grid = AngleGrid(cfg.n_cells)
    theta_hat = grid.mle()
    if p == 0.0:
        return TrialResult(cfg.max_cycles, True, None, 0,
                           angle_distance(theta_hat, theta0), cfg.seed)
    q_any = -math.expm1(n * math.log1p(-p))
    w_vals, w_cdf = _count_cdf_at_least(n, p, 1)
    t = 0
    n_x_accum = 0
    updates = 0
    while True:
        jump = sample_geometric(rng, q_any)
        if jump is None or t + jump > cfg.max_cycles:
            return TrialResult(cfg.max_cycles, True, None, updates,
                               angle_distance(theta_hat, theta0), cfg.seed)
        t += jump
        rates = twirl_dephasing(ch, theta_hat)
        w = _draw_from_cdf(rng, w_vals, w_cdf)
        wx = int(rng.binomial(w, rates.px / p))
        wz = w - wx
        if wx > code.tx or wz > code.tz:
            return TrialResult(t, False, (wx, 0, wz), updates,
                               angle_distance(theta_hat, theta0), cfg.seed)
        if wz >= 1:
            grid.update(n_x_accum + wx, wz, theta_hat)
            updates += 1
            theta_hat = grid.mle()
            n_x_accum = 0
        else:
            n_x_accum += wx


_DRIFT_BLOCK = 256


def _dephasing_drift_trial(
    cfg: DephasingTrialConfig, rng: np.random.Generator, theta0: float
) -> TrialResult:
    """Per-cycle loop with Brownian angle drift, processed in blocks.

    Cycles between estimator reads carry no posterior reads, so their
    drift convolutions are deferred and applied as one Gaussian of the
    accumulated variance (the kernels compose) right before each update.
    """
    code, n, p = cfg.code, cfg.code.n, cfg.p
    sigma = math.sqrt(cfg.kappa_sq)
    grid = AngleGrid(cfg.n_cells) if cfg.adaptive else None
    theta_hat = grid.mle() if grid is not None else 0.5 * math.pi / cfg.n_cells
    t = 0
    pending_cycles = 0
    n_x_accum = 0
    updates = 0
    if p == 0.0:
        return TrialResult(cfg.max_cycles, True, None, 0,
                           angle_distance(theta_hat, theta0), cfg.seed)
    while t < cfg.max_cycles:
        b = int(min(_DRIFT_BLOCK, cfg.max_cycles - t))
        steps = rng.normal(0.0, sigma, b)
        entering = theta0 + np.concatenate([[0.0], np.cumsum(steps[:-1])])
        pz = p * np.sin(entering - theta_hat) ** 2
        wz_arr = rng.binomial(n, pz)
        with np.errstate(invalid="ignore"):
            px_cond = np.where(pz < 1.0, (p - pz) / (1.0 - pz), 0.0)
        wx_arr = rng.binomial(n - wz_arr, px_cond)
        events = np.flatnonzero((wz_arr >= 1) | (wx_arr > code.tx))
        if len(events) == 0:
            t += b
            pending_cycles += b
            n_x_accum += int(wx_arr.sum())
            theta0 = (entering[-1] + steps[-1]) % math.pi
            continue
        i = int(events[0])
        t += i + 1
        pending_cycles += i + 1
        n_x_accum += int(wx_arr[:i].sum())
        theta0_at_event = entering[i] % math.pi
        theta0 = (entering[i] + steps[i]) % math.pi
        wx, wz = int(wx_arr[i]), int(wz_arr[i])
        if wx > code.tx or wz > code.tz:
            return TrialResult(t, False, (wx, 0, wz), updates,
                               angle_distance(theta_hat, theta0_at_event), cfg.seed)
        # Correctable cycle containing at least one Z error.
        if grid is not None:
            grid.drift_step(DriftModel(cfg.kappa_sq * pending_cycles))
            grid.update(n_x_accum + wx, wz, theta_hat)
            updates += 1
            theta_hat = grid.mle()
        pending_cycles = 0
        n_x_accum = 0
    return TrialResult(cfg.max_cycles, True, None, updates,
                       angle_distance(theta_hat, theta0), cfg.seed)


def run_dephasing_trial_fast(cfg: DephasingTrialConfig) -> TrialResult:
    """Rare-event fast-forward dephasing trial (static angle only).

    Repeatedly races the next Z-containing cycle (geometric in the
    per-cycle probability of any Z error) against an uncorrectable X burst
    (geometric in the per-cycle probability of more than ``tx`` X errors
    among qubits without Z errors). Idle-stretch X errors enter the
    estimator as a single aggregate binomial count.
    """
    if cfg.kappa_sq != 0.0:
        raise ValueError("fast-forward engine requires a static angle")
    rng = np.random.default_rng(cfg.seed)
    theta0 = rng.uniform(0.0, math.pi) if cfg.theta0 is None else cfg.theta0 % math.pi
    code, n, p = cfg.code, cfg.code.n, cfg.p
    ch = DephasingChannel(p, theta0)
    grid = AngleGrid(cfg.n_cells) if cfg.adaptive else None
    theta_hat = grid.mle() if grid is not None else 0.5 * math.pi / cfg.n_cells
    t = 0
    updates = 0
    while True:
        rates = twirl_dephasing(ch, theta_hat)
        pz = rates.pz
        px_cond = rates.px / (1.0 - pz) if pz < 1.0 else 0.0
        q_z = -math.expm1(n * math.log1p(-pz)) if pz > 0 else 0.0
        if q_z < 1e-300:
            q_z = 0.0
        q_fx = binomial_tail(n, px_cond, code.tx + 1)
        t_z = sample_geometric(rng, q_z)
        t_f = sample_geometric(rng, q_fx)
        if t_f is not None and (t_z is None or t_f < t_z):
            if t + t_f > cfg.max_cycles:
                break
            t += t_f
            w_vals, w_cdf = _count_cdf_at_least(n, px_cond, code.tx + 1)
            wx = _draw_from_cdf(rng, w_vals, w_cdf)
            return TrialResult(t, False, (wx, 0, 0), updates,
                               angle_distance(theta_hat, theta0), cfg.seed)
        if t_z is None or t + t_z > cfg.max_cycles:
            break
        t += t_z
        n_x = sample_binomial_big(rng, n * (t_z - 1), px_cond)
        w_vals, w_cdf = _count_cdf_at_least(n, pz, 1)
        wz = _draw_from_cdf(rng, w_vals, w_cdf)
        wx = int(rng.binomial(n - wz, px_cond))
        if wx > code.tx or wz > code.tz:
            return TrialResult(t, False, (wx, 0, wz), updates,
                               angle_distance(theta_hat, theta0), cfg.seed)
        if grid is not None:
            grid.update(n_x + wx, wz, theta_hat)
            updates += 1
            theta_hat = grid.mle()
    return TrialResult(cfg.max_cycles, True, None, updates,
                       angle_distance(theta_hat, theta0), cfg.seed)


# ---------------------------------------------------------------------------
# Unital engine


def run_unital_trial(cfg: UnitalTrialConfig) -> TrialResult:
    """Adaptive (or baseline) trial against a fixed oriented Pauli channel.

    Error-containing cycles update the channel-grid posterior; the
    counter-rotation is recomputed whenever the posterior maximum moves.
    An observation that eliminates every candidate triggers one grid
    restart (flagged in the result). The non-adaptive baseline keeps the
    identity control, making the cycle process geometric, and is sampled
    as such.
    """
    rng = np.random.default_rng(cfg.seed)
    orientation = cfg.orientation if cfg.orientation is not None else haar_rotation(rng)
    ch = OrientedPauliChannel(cfg.p, cfg.ecc, orientation)
    a_true = ch.a_matrix()
    if not cfg.adaptive:
        rates = effective_rates(ch, np.eye(3))
        return _static_rate_trial(cfg.code, rates, rng, cfg.max_cycles, cfg.seed)
    code, n, p = cfg.code, cfg.code.n, cfg.p
    grid = ChannelGrid.sample(cfg.n_points, rng)
    x_mle, control = grid.mle_control()
    mle_index = grid.mle_index
    rates = effective_rates(ch, control)
    q_any = -math.expm1(n * math.log1p(-p)) if p > 0 else 0.0
    if q_any == 0.0:
        return TrialResult(cfg.max_cycles, True, None, 0,
                           frobenius_distance(x_mle, a_true), cfg.seed)
    w_vals, w_cdf = _count_cdf_at_least(n, p, 1)
    t = 0
    updates = 0
    restarts = 0
    while True:
        jump = sample_geometric(rng, q_any)
        if jump is None or t + jump > cfg.max_cycles:
            return TrialResult(cfg.max_cycles, True, None, updates,
                               frobenius_distance(x_mle, a_true), cfg.seed, restarts)
        t += jump
        w = _draw_from_cdf(rng, w_vals, w_cdf)
        pvals = np.clip(rates.as_array() / p, 0.0, None)
        counts = rng.multinomial(w, pvals / pvals.sum())
        triple = WeightTriple(int(counts[0]), int(counts[1]), int(counts[2]))
        if not correctable(code, triple):
            return TrialResult(
                t, False, (triple.wx, triple.wy, triple.wz), updates,
                frobenius_distance(x_mle, a_true), cfg.seed, restarts,
            )
        try:
            grid.update(triple, control)
            updates += 1
        except GridExhaustedError:
            if restarts >= 1:
                raise
            restarts += 1
            grid = ChannelGrid.sample(cfg.n_points, rng)
            mle_index = -1  # force a control refresh
        if grid.mle_index != mle_index:
            mle_index = grid.mle_index
            x_mle, control = grid.mle_control()
            rates = effective_rates(ch, control)


def _static_rate_trial(
    code: AsymmetricCode,
    rates: PauliRates,
    rng: np.random.Generator,
    max_cycles: int,
    seed: int,
    estimator_error: float = math.nan,
) -> TrialResult:
    """Lifetime draw for fixed rates: geometric in the exact failure rate."""
    q = p_fail_exact(code, rates)
    t = sample_geometric(rng, q)
    if t is None or t > max_cycles:
        return TrialResult(max_cycles, True, None, 0, estimator_error, seed)
    return TrialResult(t, False, None, 0, estimator_error, seed)


# ---------------------------------------------------------------------------
# Ensemble runner

TrialConfig = DephasingTrialConfig | UnitalTrialConfig


def run_trial(cfg: TrialConfig) -> TrialResult:
    """Dispatch a config to its engine."""
    if isinstance(cfg, DephasingTrialConfig):
        if cfg.engine == "fast-forward":
            return run_dephasing_trial_fast(cfg)
        return run_dephasing_trial(cfg)
    if isinstance(cfg, UnitalTrialConfig):
        return run_unital_trial(cfg)
    raise TypeError(f"unknown config type {type(cfg)!r}")


def _run_trial_safely(cfg: TrialConfig) -> TrialResult:
    try:
        return run_trial(cfg)
    except Exception as exc:  # pragma: no cover - defensive
        return TrialResult(0, True, None, 0, math.nan, cfg.seed,
                           error=f"{type(exc).__name__}: {exc}")


def trial_configs(base: TrialConfig, n_trials: int) -> list[TrialConfig]:
    """Per-trial configs; trial ``i`` gets seed ``mix64(base.seed, i)``."""
    return [replace(base, seed=mix64(base.seed, i)) for i in range(n_trials)]


def run_ensemble(
    base: TrialConfig, n_trials: int, parallelism: int | None = None
) -> list[TrialResult]:
    """Run ``n_trials`` independent trials of ``base``.

    Results come back in trial order and are byte-identical for a fixed
    base seed regardless of ``parallelism``; a crashed worker surfaces as
    a result row with the ``error`` field set.
    """
    cfgs = trial_configs(base, n_trials)
    if parallelism is None or parallelism <= 1 or n_trials <= 1:
        return [_run_trial_safely(c) for c in cfgs]
    chunk = max(1, n_trials // (parallelism * 8))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_trial_safely, cfgs, chunksize=chunk))
