"""Monte Carlo experiment runners behind the command line.

Reproduces the two headline experiments at desk scale: the miss-detection
comparison of the narrowband detectors (with noise uncertainty, timing
error, and 5-out-of-10 cooperation) against SNR, and the compressive
wideband detection probability against compression ratio for sparsity 4
and 7. Every point derives its randomness from (seed, experiment, series,
x), so re-runs and any per-point parallel split produce identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import detectors, fusion, sigmodel, widecs
from .config import ExperimentConfig
from .seeds import child_seed, spawn_rng

SERIES_ENERGY = "energy"
SERIES_ENERGY_UNC = "energy_unc"
SERIES_MATCHED = "matched"
SERIES_MATCHED_OFFSET = "matched_off"
SERIES_CYCLO = "cyclo"
SERIES_COOP = "coop"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    series: str
    value: float
    ci_halfwidth: float

    def __post_init__(self):
        _require(0.0 <= self.value <= 1.0, "curve values are probabilities")
        _require(self.ci_halfwidth >= 0.0, "confidence halfwidth must be >= 0")


def binomial_ci_halfwidth(p: float, trials: int) -> float:
    """95% normal-approximation halfwidth for an empirical proportion."""
    return 1.96 * np.sqrt(max(p * (1.0 - p), 0.0) / trials)


def _point(x: float, series: str, successes: int, trials: int) -> CurvePoint:
    p = successes / trials
    return CurvePoint(x=float(x), series=series, value=p,
                      ci_halfwidth=binomial_ci_halfwidth(p, trials))


def _validate_grid(grid, name: str) -> None:
    _require(len(grid) > 0, f"{name} must be non-empty")
    _require(list(grid) == sorted(grid), f"{name} must be sorted ascending")


# ---------------------------------------------------------------------------
# Detector calibration
# ---------------------------------------------------------------------------

def detector_config(det, kind: str) -> detectors.DetectorConfig:
    """DetectorConfig for one detector kind from the detector settings."""
    if kind == detectors.CYCLOSTATIONARY:
        return detectors.DetectorConfig(kind=kind, window_len=det.cyclo_window_len,
                                        period_samples=det.period_samples)
    return detectors.DetectorConfig(kind=kind, window_len=det.window_len,
                                    template_id=det.template_id)


def calibrate_detectors(cfg: ExperimentConfig) -> dict[str, detectors.Threshold]:
    """Thresholds for all three detectors at the configured false-alarm rate."""
    det = cfg.detector
    thresholds = {}
    for kind in detectors.KINDS:
        dcfg = detector_config(det, kind)
        thresholds[kind] = detectors.calibrate_threshold(
            dcfg, det.target_pfa, det.calibration_trials,
            child_seed(cfg.seed, "calibrate", kind))
    return thresholds


def verify_detector_pfa(dcfg: detectors.DetectorConfig, threshold_value: float,
                        trials: int, seed: int) -> float:
    """Fresh-noise false-alarm rate of a given threshold value."""
    stats = detectors.null_statistics(dcfg, trials, seed)
    return float(np.mean(stats > threshold_value))


@dataclass(frozen=True)
class CheckEntry:
    name: str
    target_pfa: float
    measured_pfa: float
    passed: bool


def run_calibration_check(cfg: ExperimentConfig) -> list[CheckEntry]:
    """Calibrate, then re-measure every false-alarm rate on a fresh seed.

    Covers the three narrowband detectors and the compressive per-band
    thresholds at the configured check ratios. Pass band is target +/- 20%
    ([0.008, 0.012] at the reference 1% target).
    """
    det = cfg.detector
    entries = []
    for kind in detectors.KINDS:
        dcfg = detector_config(det, kind)
        thr = detectors.calibrate_threshold(
            dcfg, det.target_pfa, det.calibration_trials,
            child_seed(cfg.seed, "calibrate", kind))
        measured = verify_detector_pfa(dcfg, thr.value, det.calibration_trials,
                                       child_seed(cfg.seed, "verify", kind))
        entries.append(CheckEntry(
            name=kind, target_pfa=det.target_pfa, measured_pfa=measured,
            passed=0.8 * det.target_pfa <= measured <= 1.2 * det.target_pfa))

    cs = cfg.cs
    plan = sigmodel.make_band_plan(cs.num_bands, cs.band_width_hz)
    max_support = min(cs.sparsities)
    for ratio in cs.check_ratios:
        thr = widecs.calibrate_band_threshold(
            plan, cs.block_len, ratio, max_support, cs.target_fa,
            cs.calibration_trials, child_seed(cfg.seed, "cs-calibrate", float(ratio)))
        null = widecs.null_band_energies(
            plan, cs.block_len, ratio, max_support, cs.calibration_trials,
            child_seed(cfg.seed, "cs-verify", float(ratio)))
        measured = float(np.mean(null > thr))
        entries.append(CheckEntry(
            name=f"cs_ratio_{ratio:g}", target_pfa=cs.target_fa,
            measured_pfa=measured,
            passed=0.8 * cs.target_fa <= measured <= 1.2 * cs.target_fa))
    return entries


def calibration_report_text(entries: list[CheckEntry]) -> str:
    lines = []
    for e in entries:
        status = "PASS" if e.passed else "FAIL"
        lines.append(f"{e.name} target_pfa={e.target_pfa:.6g} "
                     f"measured_pfa={e.measured_pfa:.6g} {status}\n")
    return "".join(lines)


# ---------------------------------------------------------------------------
# Fig. 6: narrowband detector comparison over SNR
# ---------------------------------------------------------------------------

def _complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    scale = np.sqrt(sigmodel.NOISE_POWER / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _template_signal(det, snr_db: float) -> np.ndarray:
    tmpl = sigmodel.get_template(det.template_id, det.window_len)
    amplitude = np.sqrt(10.0 ** (snr_db / 10.0) * det.window_len
                        * sigmodel.NOISE_POWER)
    return amplitude * tmpl


def _cyclo_signal_batch(det, snr_db: float, trials: int,
                        rng: np.random.Generator) -> np.ndarray:
    period = det.period_samples
    n = (det.cyclo_window_len // period) * period
    n_sym = n // period
    on_len = period // 2
    pulse = np.zeros(period)
    pulse[:on_len] = 1.0
    symbols = rng.choice([-1.0, 1.0], size=(trials, n_sym))
    amplitude = np.sqrt(10.0 ** (snr_db / 10.0) * sigmodel.NOISE_POWER
                        * period / on_len)
    return amplitude * (symbols[:, :, None] * pulse[None, None, :]).reshape(trials, n)


def run_fig6(cfg: ExperimentConfig,
             thresholds: dict[str, detectors.Threshold]) -> list[CurvePoint]:
    """Miss-detection probability for the six detector series over SNR.

    Series: energy (exact noise power), energy with +/-0.5 dB noise
    uncertainty behind a worst-case guard-banded threshold, matched filter,
    matched filter with a fixed timing offset, cyclostationary, and
    5-out-of-10 hard fusion of energy detectors.
    """
    for kind in detectors.KINDS:
        if kind not in thresholds:
            raise ValueError(f"missing calibration for {kind!r}")
    _require(cfg.trials >= 1000, "curve experiments need at least 1000 trials/point")
    _validate_grid(cfg.snr_grid_db, "snr_grid_db")

    det = cfg.detector
    rule = fusion.FusionRule(k=cfg.fusion.k, n=cfg.fusion.n)
    thr_energy = thresholds[detectors.ENERGY]
    thr_matched = thresholds[detectors.MATCHED_FILTER]
    thr_cyclo = thresholds[detectors.CYCLOSTATIONARY]
    thr_guard = detectors.guard_banded(thr_energy, det.noise_uncertainty_db)
    template = sigmodel.get_template(det.template_id, det.window_len)
    offset_series = f"{SERIES_MATCHED_OFFSET}{det.timing_offset}"
    coop_series = f"{SERIES_COOP}{rule.k}of{rule.n}"
    trials = cfg.trials
    noise_std = np.sqrt(sigmodel.NOISE_POWER)

    points = []
    for snr in cfg.snr_grid_db:
        signal = _template_signal(det, snr)

        rng = spawn_rng(cfg.seed, "fig6", SERIES_ENERGY, float(snr))
        x = signal + _complex_noise(rng, (trials, det.window_len))
        stats = detectors.energy_statistic_batch(x, det.window_len,
                                                 sigmodel.NOISE_POWER)
        points.append(_point(snr, SERIES_ENERGY,
                             int(np.sum(stats <= thr_energy.value)), trials))

        rng = spawn_rng(cfg.seed, "fig6", SERIES_ENERGY_UNC, float(snr))
        x = signal + _complex_noise(rng, (trials, det.window_len))
        offsets_db = rng.uniform(-det.noise_uncertainty_db,
                                 det.noise_uncertainty_db, size=trials)
        estimates = sigmodel.NOISE_POWER * 10.0 ** (offsets_db / 10.0)
        stats = detectors.energy_statistic_batch(x, det.window_len, estimates)
        points.append(_point(snr, SERIES_ENERGY_UNC,
                             int(np.sum(stats <= thr_guard.value)), trials))

        rng = spawn_rng(cfg.seed, "fig6", SERIES_MATCHED, float(snr))
        x = signal + _complex_noise(rng, (trials, det.window_len))
        stats = detectors.matched_filter_statistic_batch(x, template, noise_std)
        points.append(_point(snr, SERIES_MATCHED,
                             int(np.sum(stats <= thr_matched.value)), trials))

        rng = spawn_rng(cfg.seed, "fig6", offset_series, float(snr))
        shifted = np.roll(signal, det.timing_offset)
        x = shifted + _complex_noise(rng, (trials, det.window_len))
        stats = detectors.matched_filter_statistic_batch(x, template, noise_std)
        points.append(_point(snr, offset_series,
                             int(np.sum(stats <= thr_matched.value)), trials))

        rng = spawn_rng(cfg.seed, "fig6", SERIES_CYCLO, float(snr))
        sig = _cyclo_signal_batch(det, snr, trials, rng)
        x = sig + _complex_noise(rng, sig.shape)
        stats = detectors.cyclostationary_statistic_batch(x, det.period_samples)
        points.append(_point(snr, SERIES_CYCLO,
                             int(np.sum(stats <= thr_cyclo.value)), trials))

        rng = spawn_rng(cfg.seed, "fig6", coop_series, float(snr))
        votes = np.zeros(trials, dtype=int)
        for _ in range(rule.n):
            x = signal + _complex_noise(rng, (trials, det.window_len))
            stats = detectors.energy_statistic_batch(x, det.window_len,
                                                     sigmodel.NOISE_POWER)
            votes += stats > thr_energy.value
        points.append(_point(snr, coop_series,
                             int(np.sum(votes < rule.k)), trials))
    return points


# ---------------------------------------------------------------------------
# Fig. 5: compressive detection probability over compression ratio
# ---------------------------------------------------------------------------

def run_fig5(cfg: ExperimentConfig) -> list[CurvePoint]:
    """Per-band (and whole-spectrum) detection probability versus ratio.

    For each sparsity K the pursuit runs with max_support = K (the assumed
    sparsity is an experiment input; exceeding it is the studied failure
    mode). Per-band decision thresholds are calibrated from noise-only runs
    at every (ratio, max_support) operating point. Series `K{K}_snr{s}` is
    the per-band detection probability, `..._full` requires all K bands
    found, `..._fa` is the measured per-band false-alarm rate on the truly
    inactive bands.
    """
    cs = cfg.cs
    _require(cs.trials >= 1000, "curve experiments need at least 1000 trials/point")
    _validate_grid(cfg.ratio_grid, "ratio_grid")
    _validate_grid(cs.snr_grid_db, "cs snr_grid_db")

    plan = sigmodel.make_band_plan(cs.num_bands, cs.band_width_hz)
    num_bands = cs.num_bands
    points = []
    for k in cs.sparsities:
        for ratio in cfg.ratio_grid:
            thr = widecs.calibrate_band_threshold(
                plan, cs.block_len, ratio, k, cs.target_fa, cs.calibration_trials,
                child_seed(cfg.seed, "fig5-cal", k, float(ratio)))
            for snr in cs.snr_grid_db:
                detected = 0
                full = 0
                false_alarms = 0
                for t in range(cs.trials):
                    ts = child_seed(cfg.seed, "fig5", k, float(ratio),
                                    float(snr), t)
                    mask_rng = spawn_rng(ts, "mask")
                    bands = mask_rng.choice(num_bands, size=k, replace=False)
                    mask = sigmodel.mask_from_bands(num_bands, bands)
                    block = sigmodel.synth_wideband(plan, mask, snr,
                                                    cs.block_len, seed=ts)
                    op = widecs.draw_sampling_pattern(cs.block_len, ratio, seed=ts)
                    y = widecs.measure(block, op)
                    est = widecs.recover_sparse(y, plan, max_support=k)
                    decided = widecs.band_decisions(est, thr).active
                    detected += int(decided[bands].sum())
                    full += int(decided[bands].all())
                    false_alarms += int(decided.sum() - decided[bands].sum())
                label = f"K{k}_snr{snr:g}"
                points.append(_point(ratio, label, detected, cs.trials * k))
                points.append(_point(ratio, label + "_full", full, cs.trials))
                points.append(_point(ratio, label + "_fa", false_alarms,
                                     cs.trials * (num_bands - k)))
    return points


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def emit_csv(points: list[CurvePoint], path: str) -> None:
    """Write `x,series,value,ci` rows sorted by (series, x), 6 significant
    digits, newline-terminated."""
    _require(len(points) > 0, "no points to write")
    rows = sorted(points, key=lambda p: (p.series, p.x))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,series,value,ci\n")
        for p in rows:
            fh.write(f"{p.x:.6g},{p.series},{p.value:.6g},{p.ci_halfwidth:.6g}\n")
