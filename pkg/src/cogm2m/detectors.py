"""Narrowband sensing: energy, matched-filter, and cyclostationary detectors.

Each detector reduces a block to a scalar statistic that is compared to a
threshold calibrated empirically to a target false-alarm rate. Batch
variants operate on stacks of blocks; the Monte Carlo harness and the
calibration routine share them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sigmodel
from .seeds import spawn_rng

ENERGY = "energy"
MATCHED_FILTER = "matched_filter"
CYCLOSTATIONARY = "cyclostationary"

KINDS = (ENERGY, MATCHED_FILTER, CYCLOSTATIONARY)

_CAL_CHUNK = 4096  # trials per derived RNG stream; fixed so results are scheduling-independent


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class DetectorConfig:
    """Which detector to run and its observation geometry.

    window_len is the number of samples the statistic consumes: 32 for the
    energy and matched-filter detectors in the reference experiment. The
    cyclostationary detector keeps period_samples = 32 but may observe a
    longer window (it needs at least four periods to average).
    """

    kind: str
    window_len: int = 32
    period_samples: int = 0
    template_id: str = "hann_half"

    def __post_init__(self):
        _require(self.kind in KINDS, f"unknown detector kind {self.kind!r}")
        _require(self.window_len >= 1, "window_len must be >= 1")
        if self.kind == CYCLOSTATIONARY:
            _require(self.period_samples >= 2,
                     "cyclostationary period must be >= 2")


@dataclass(frozen=True)
class Statistic:
    value: float
    detector: DetectorConfig

    def __post_init__(self):
        _require(np.isfinite(self.value), "statistic must be finite")


@dataclass(frozen=True)
class Threshold:
    value: float
    target_pfa: float
    calibration_trials: int
    kind: str

    def __post_init__(self):
        _require(0.0 < self.target_pfa < 1.0, "target_pfa must be in (0, 1)")
        _require(self.calibration_trials >= 100.0 / self.target_pfa,
                 "calibration_trials must be >= 100 / target_pfa")


@dataclass(frozen=True)
class LocalDecision:
    occupied: bool
    statistic: float
    sensor_id: str = "sensor0"


# ---------------------------------------------------------------------------
# Statistic kernels (batch first, scalar wrappers after)
# ---------------------------------------------------------------------------

def energy_statistic_batch(blocks: np.ndarray, window_len: int,
                           noise_power_estimate) -> np.ndarray:
    """Window-average power of each row, normalized by the noise estimate.

    noise_power_estimate may be a scalar or one value per row (the latter
    models per-trial estimation error).
    """
    x = np.asarray(blocks)
    _require(x.shape[-1] >= window_len, "block shorter than the detector window")
    est = np.asarray(noise_power_estimate, dtype=float)
    _require(bool(np.all(est > 0.0)), "noise power estimate must be positive")
    power = (np.abs(x[..., :window_len]) ** 2).mean(axis=-1)
    return power / est


def matched_filter_statistic_batch(blocks: np.ndarray, template: np.ndarray,
                                   noise_std: float = 1.0) -> np.ndarray:
    """Coherent correlation with the stored template.

    Real part of the inner product of the leading window with the conjugate
    unit-energy template, normalized by the noise standard deviation.
    """
    x = np.asarray(blocks)
    w = len(template)
    _require(x.shape[-1] >= w, "block shorter than the template")
    _require(noise_std > 0.0, "noise std must be positive")
    return np.real(x[..., :w] @ np.conj(template)) / noise_std


def cyclostationary_statistic_batch(blocks: np.ndarray, period: int) -> np.ndarray:
    """Envelope spectral line at cycle frequency 1/period, self-normalized.

    The observation is truncated to a whole number of periods; the statistic
    is |sum |x|^2 e^{-j2 pi n/period}| / sum |x|^2, which needs no noise-power
    knowledge (the detector requires only the period).
    """
    x = np.asarray(blocks)
    _require(period >= 2, "period must be >= 2")
    n = (x.shape[-1] // period) * period
    _require(n >= 4 * period, "block must span at least 4 periods")
    env = np.abs(x[..., :n]) ** 2
    phasor = np.exp(-2j * np.pi * np.arange(n) / period)
    line = np.abs(env @ phasor)
    return line / env.sum(axis=-1)


def energy_statistic(block: sigmodel.BasebandBlock, cfg: DetectorConfig,
                     noise_power_estimate: float) -> Statistic:
    _require(cfg.kind == ENERGY, "config is not for the energy detector")
    value = energy_statistic_batch(block.samples, cfg.window_len,
                                   noise_power_estimate)
    return Statistic(float(value), cfg)


def matched_filter_statistic(block: sigmodel.BasebandBlock, cfg: DetectorConfig,
                             noise_std: float = 1.0) -> Statistic:
    _require(cfg.kind == MATCHED_FILTER, "config is not for the matched filter")
    template = sigmodel.get_template(cfg.template_id, cfg.window_len)
    value = matched_filter_statistic_batch(block.samples, template, noise_std)
    return Statistic(float(value), cfg)


def cyclostationary_statistic(block: sigmodel.BasebandBlock,
                              cfg: DetectorConfig) -> Statistic:
    _require(cfg.kind == CYCLOSTATIONARY,
             "config is not for the cyclostationary detector")
    value = cyclostationary_statistic_batch(block.samples, cfg.period_samples)
    return Statistic(float(value), cfg)


# ---------------------------------------------------------------------------
# Calibration and decisions
# ---------------------------------------------------------------------------

def _noise_blocks(rng: np.random.Generator, n: int, length: int) -> np.ndarray:
    scale = np.sqrt(sigmodel.NOISE_POWER / 2.0)
    return scale * (rng.standard_normal((n, length))
                    + 1j * rng.standard_normal((n, length)))


def null_statistics(cfg: DetectorConfig, trials: int, seed: int) -> np.ndarray:
    """Detector statistics over noise-only input with exact noise knowledge.

    Trials are generated in fixed-size chunks whose RNG streams derive from
    (seed, chunk index), so any distribution of chunks over workers yields
    the same numbers.
    """
    if cfg.kind == MATCHED_FILTER:
        template = sigmodel.get_template(cfg.template_id, cfg.window_len)
    out = np.empty(trials)
    done = 0
    chunk_idx = 0
    while done < trials:
        n = min(_CAL_CHUNK, trials - done)
        rng = spawn_rng(seed, "null", cfg.kind, chunk_idx)
        w = _noise_blocks(rng, n, cfg.window_len)
        if cfg.kind == ENERGY:
            out[done:done + n] = energy_statistic_batch(
                w, cfg.window_len, sigmodel.NOISE_POWER)
        elif cfg.kind == MATCHED_FILTER:
            out[done:done + n] = matched_filter_statistic_batch(
                w, template, np.sqrt(sigmodel.NOISE_POWER))
        else:
            out[done:done + n] = cyclostationary_statistic_batch(
                w, cfg.period_samples)
        done += n
        chunk_idx += 1
    return out


def empirical_quantile_threshold(stats: np.ndarray, target_pfa: float) -> float:
    """Order statistic such that P(stat > threshold) is about target_pfa."""
    ordered = np.sort(stats)
    idx = int(np.ceil((1.0 - target_pfa) * len(ordered))) - 1
    return float(ordered[idx])


def calibrate_threshold(cfg: DetectorConfig, target_pfa: float, trials: int,
                        seed: int) -> Threshold:
    """Empirical (1 - target_pfa) quantile under noise-only input."""
    _require(0.0 < target_pfa < 1.0, "target_pfa must be in (0, 1)")
    _require(trials >= 100.0 / target_pfa,
             f"need at least {int(100 / target_pfa)} trials for pfa={target_pfa}")
    stats = null_statistics(cfg, trials, seed)
    value = empirical_quantile_threshold(stats, target_pfa)
    return Threshold(value=value, target_pfa=target_pfa,
                     calibration_trials=trials, kind=cfg.kind)


def guard_banded(thr: Threshold, uncertainty_db: float) -> Threshold:
    """Threshold raised by the worst-case noise-estimate error.

    With the statistic normalized by an estimate within +/-uncertainty_db of
    the true noise power, scaling the threshold by 10^(u/10) keeps the false
    alarm rate at or below the target for every admissible estimate.
    """
    _require(uncertainty_db >= 0.0, "uncertainty bound must be nonnegative")
    return Threshold(value=thr.value * 10.0 ** (uncertainty_db / 10.0),
                     target_pfa=thr.target_pfa,
                     calibration_trials=thr.calibration_trials,
                     kind=thr.kind)


def decide(stat: Statistic, thr: Threshold,
           sensor_id: str = "sensor0") -> LocalDecision:
    """Strict comparison; exact equality decides vacant (conservative on Pfa)."""
    _require(stat.detector.kind == thr.kind,
             f"statistic from {stat.detector.kind!r} compared against "
             f"{thr.kind!r} threshold")
    return LocalDecision(occupied=bool(stat.value > thr.value),
                         statistic=stat.value, sensor_id=sensor_id)
