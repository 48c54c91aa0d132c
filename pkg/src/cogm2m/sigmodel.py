"""Synthetic baseband signals for the sensing experiments.

Generates the multiband wideband spectrum (complex baseband, sample rate =
num_bands * band_width_hz), the three narrowband waveforms the detectors
are built for, and the two impairments swept by the miss-detection curves:
circular timing offsets and a bounded noise-level estimation error.

Conventions used throughout the package:
  * noise is circular complex white Gaussian with total power 1.0 unless a
    caller scales it explicitly;
  * SNR is in-band signal power over in-band noise power, in dB;
  * every generator is a pure function of (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeds import spawn_rng

NOISE_POWER = 1.0

OCCUPIED = "occupied"
VACANT = "vacant"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class BandPlan:
    """Contiguous, non-overlapping wideband layout."""

    num_bands: int
    band_width_hz: float
    nyquist_rate_hz: float

    def bin_slices(self, grid_len: int) -> list[slice]:
        """FFT-bin slice for each band on a length-`grid_len` grid.

        Bands are assigned in FFT order (band 0 starts at bin 0); uneven
        splits are handled by flooring the edges.
        """
        edges = [(i * grid_len) // self.num_bands for i in range(self.num_bands + 1)]
        return [slice(edges[i], edges[i + 1]) for i in range(self.num_bands)]


@dataclass(frozen=True)
class OccupancyMask:
    """Which bands are truly active. sparsity_k counts the active entries."""

    active: np.ndarray
    sparsity_k: int

    def __post_init__(self):
        active = np.asarray(self.active, dtype=bool)
        object.__setattr__(self, "active", active)
        _require(int(active.sum()) == self.sparsity_k,
                 "sparsity_k must equal the number of active bands")


def mask_from_bands(num_bands: int, active_bands) -> OccupancyMask:
    active = np.zeros(num_bands, dtype=bool)
    active[list(active_bands)] = True
    return OccupancyMask(active=active, sparsity_k=int(active.sum()))


@dataclass(frozen=True)
class BasebandBlock:
    """A finite block of complex samples with its ground-truth annotation."""

    samples: np.ndarray
    sample_rate_hz: float
    snr_db: float
    label: str

    def __post_init__(self):
        _require(len(self.samples) >= 1, "block must contain at least one sample")
        _require(self.label in (OCCUPIED, VACANT), f"unknown label {self.label!r}")


@dataclass(frozen=True)
class ImpairmentSpec:
    timing_offset_samples: int = 0
    noise_uncertainty_db: float = 0.0

    def __post_init__(self):
        _require(self.noise_uncertainty_db >= 0.0,
                 "noise uncertainty bound must be nonnegative")


def make_band_plan(num_bands: int, band_width_hz: float) -> BandPlan:
    """Build a contiguous plan of `num_bands` bands of equal width.

    The complex-baseband sample rate covering the whole span equals
    num_bands * band_width_hz; that rate is what compression ratios are
    relative to.
    """
    _require(num_bands >= 1, "num_bands must be >= 1")
    _require(band_width_hz > 0.0, "band_width_hz must be positive")
    return BandPlan(
        num_bands=int(num_bands),
        band_width_hz=float(band_width_hz),
        nyquist_rate_hz=float(num_bands) * float(band_width_hz),
    )


def synth_wideband(plan: BandPlan, mask: OccupancyMask, snr_db: float,
                   block_len: int, seed: int,
                   noise_power: float = NOISE_POWER) -> BasebandBlock:
    """Nyquist-rate block whose spectral energy sits in the active bands.

    Each active band carries filtered white Gaussian noise (spectrally flat
    in-band) at per-band SNR `snr_db` against the unit white noise floor;
    the drawn in-band spectrum is rescaled so the realized band power hits
    the target exactly (variance-matched), which keeps the measured SNR
    inside the stated tolerance at any block length. The signal realization
    depends only on the seed, so noise_power=0.0 yields the noiseless
    version of the same block.
    """
    _require(len(mask.active) == plan.num_bands, "mask length must match the plan")
    _require(block_len >= plan.num_bands, "block_len must be >= num_bands")
    _require(noise_power >= 0.0, "noise power must be nonnegative")

    rng = spawn_rng(seed, "wideband")
    slices = plan.bin_slices(block_len)
    spectrum = np.zeros(block_len, dtype=complex)
    band_noise_power = NOISE_POWER / plan.num_bands
    target_power = 10.0 ** (snr_db / 10.0) * band_noise_power
    for i in np.flatnonzero(mask.active):
        sl = slices[int(i)]
        nbins = sl.stop - sl.start
        draw = rng.standard_normal(nbins) + 1j * rng.standard_normal(nbins)
        # realized band power = sum |X_k|^2 / L^2 for ifft with 1/L normalization
        realized = (np.abs(draw) ** 2).sum() / block_len ** 2
        spectrum[sl] = draw * np.sqrt(target_power / realized)
    signal = np.fft.ifft(spectrum) if mask.sparsity_k else np.zeros(block_len, dtype=complex)

    samples = signal
    if noise_power > 0.0:
        samples = samples + np.sqrt(noise_power / 2.0) * (
            rng.standard_normal(block_len) + 1j * rng.standard_normal(block_len))

    return BasebandBlock(
        samples=samples,
        sample_rate_hz=plan.nyquist_rate_hz,
        snr_db=float(snr_db),
        label=OCCUPIED if mask.sparsity_k else VACANT,
    )


def matched_filter_template(window_len: int) -> np.ndarray:
    """Stored unit-energy matched-filter target: a centered raised-cosine
    pulse occupying half the window.

    The narrow support makes the circular autocorrelation decay strictly
    and monotonically over lags up to a quarter window, which is what the
    timing-error sweeps rely on.
    """
    _require(window_len >= 4, "template window must be >= 4 samples")
    width = window_len // 2
    n = np.arange(width)
    pulse = np.sin(np.pi * (n + 0.5) / width) ** 2
    t = np.zeros(window_len, dtype=complex)
    start = (window_len - width) // 2
    t[start:start + width] = pulse
    return t / np.linalg.norm(t)


_TEMPLATES = {"hann_half": matched_filter_template}


def get_template(template_id: str, window_len: int) -> np.ndarray:
    try:
        builder = _TEMPLATES[template_id]
    except KeyError:
        raise ValueError(f"unknown template {template_id!r}") from None
    return builder(window_len)


def synth_narrowband(kind: str, period_samples: int, snr_db: float,
                     block_len: int, seed: int,
                     window_len: int = 32) -> BasebandBlock:
    """Narrowband detector inputs.

    kind="template": the stored matched-filter target at the block start,
    scaled so the window-average signal power over the unit noise power is
    `snr_db`, plus noise.
    kind="cyclo": a BPSK-like symbol stream with period `period_samples`;
    the rectangular pulse fills the first half of each symbol so the
    envelope, and with it mean and autocorrelation, is periodic.
    kind="noise_only": noise, labelled vacant.
    """
    rng = spawn_rng(seed, "narrowband", kind)
    sigma2 = NOISE_POWER
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(block_len)
                                     + 1j * rng.standard_normal(block_len))
    snr_lin = 10.0 ** (snr_db / 10.0)

    if kind == "noise_only":
        return BasebandBlock(noise, 1.0, float(snr_db), VACANT)

    if kind == "template":
        _require(block_len >= window_len, "block shorter than the template window")
        tmpl = get_template("hann_half", window_len)
        amplitude = np.sqrt(snr_lin * window_len * sigma2)
        signal = np.zeros(block_len, dtype=complex)
        signal[:window_len] = amplitude * tmpl
        return BasebandBlock(signal + noise, 1.0, float(snr_db), OCCUPIED)

    if kind == "cyclo":
        _require(period_samples >= 2, "cyclostationary period must be >= 2")
        _require(block_len % period_samples == 0,
                 "period must divide the block length")
        n_sym = block_len // period_samples
        on_len = period_samples // 2
        symbols = rng.choice([-1.0, 1.0], size=n_sym)
        pulse = np.zeros(period_samples)
        pulse[:on_len] = 1.0
        waveform = (symbols[:, None] * pulse[None, :]).ravel()
        # block-average signal power = A^2 * on_len / period
        amplitude = np.sqrt(snr_lin * sigma2 * period_samples / on_len)
        return BasebandBlock(amplitude * waveform + noise, 1.0,
                             float(snr_db), OCCUPIED)

    raise ValueError(f"unknown narrowband kind {kind!r}")


def apply_timing_offset(block: BasebandBlock, offset_samples: int) -> BasebandBlock:
    """Circularly shift the block; energy and label are preserved."""
    n = len(block.samples)
    _require(abs(offset_samples) < n, "offset magnitude must be < block length")
    return BasebandBlock(
        samples=np.roll(block.samples, offset_samples),
        sample_rate_hz=block.sample_rate_hz,
        snr_db=block.snr_db,
        label=block.label,
    )


def perturb_noise_estimate(true_noise_power: float, uncertainty_db: float,
                           seed: int) -> float:
    """Noise-power estimate drawn uniformly within +/-uncertainty_db of truth.

    The dB offset depends only on the seed, so the perturbation is exactly
    scale-equivariant in the true power.
    """
    _require(uncertainty_db >= 0.0, "uncertainty bound must be nonnegative")
    rng = spawn_rng(seed, "noise-estimate")
    offset_db = rng.uniform(-uncertainty_db, uncertainty_db)
    return true_noise_power * 10.0 ** (offset_db / 10.0)
