"""Sub-Nyquist compressive wideband sensing.

A block is observed only at a random subset of its Nyquist grid. Band
occupancy is recovered from the pairwise sample products: for wide-sense
stationary multiband input the expected product of two samples depends only
on their index difference, and as a function of that lag it lives in the
span of one atom per band (the inverse transform of the band's frequency
indicator, evaluated at the achievable sample-instant differences). Fitting
band powers to the measured lag products is a small linear problem even
though the underlying frequency-domain system (grid_len unknown bins from
len(pattern) samples) is badly under-determined.

The zero lag is excluded from the fit, which removes the white-noise floor
from the model entirely; recovered band energies estimate signal-only power.

recover_sparse runs a greedy pursuit over the band atoms with a full
least-squares re-fit after every selection; exhaustive_oracle solves the
same objective by brute force over all k-subsets, so its residual can never
exceed the greedy one when both run to the same support size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .seeds import spawn_rng
from .sigmodel import NOISE_POWER, BandPlan, BasebandBlock, OccupancyMask


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class MeasurementOperator:
    """Random time-domain subsampling pattern on a Nyquist grid."""

    pattern: np.ndarray
    grid_len: int
    compression_ratio: float
    seed: int

    def __post_init__(self):
        pattern = np.asarray(self.pattern, dtype=np.int64)
        object.__setattr__(self, "pattern", pattern)
        _require(pattern.ndim == 1 and len(pattern) >= 1, "pattern must be non-empty")
        _require(bool(np.all(np.diff(pattern) > 0)),
                 "pattern indices must be unique and strictly increasing")
        _require(0 <= pattern[0] and pattern[-1] < self.grid_len,
                 "pattern indices out of grid range")
        _require(0.0 < self.compression_ratio <= 1.0,
                 "compression ratio must be in (0, 1]")


@dataclass(frozen=True)
class CompressedSamples:
    values: np.ndarray
    operator: MeasurementOperator

    def __post_init__(self):
        _require(len(self.values) == len(self.operator.pattern),
                 "value count must match the sampling pattern")


@dataclass(frozen=True)
class SparseEstimate:
    band_energies: np.ndarray
    support: tuple[int, ...]
    residual_norm: float

    def __post_init__(self):
        _require(bool(np.all(np.asarray(self.band_energies) >= 0.0)),
                 "band energies must be nonnegative")
        _require(self.residual_norm >= 0.0, "residual norm must be nonnegative")


def draw_sampling_pattern(grid_len: int, ratio: float, seed: int) -> MeasurementOperator:
    """round(ratio * grid_len) distinct indices, uniform at random."""
    _require(0.0 < ratio <= 1.0, "ratio must be in (0, 1]")
    _require(grid_len >= 1.0 / ratio, "grid too short for the requested ratio")
    m = int(np.rint(ratio * grid_len))
    rng = spawn_rng(seed, "pattern")
    pattern = np.sort(rng.choice(grid_len, size=m, replace=False))
    return MeasurementOperator(pattern=pattern, grid_len=int(grid_len),
                               compression_ratio=m / grid_len, seed=int(seed))


def measure(block: BasebandBlock, op: MeasurementOperator) -> CompressedSamples:
    """Gather the block at the pattern instants."""
    _require(len(block.samples) == op.grid_len,
             "block length must equal the operator grid length")
    return CompressedSamples(values=np.asarray(block.samples)[op.pattern], operator=op)


@lru_cache(maxsize=8)
def _band_atoms(plan: BandPlan, grid_len: int) -> np.ndarray:
    """Lag-domain atom per band: a_i[tau] = sum_{k in band i} e^{j2 pi k tau / L}."""
    atoms = np.empty((plan.num_bands, grid_len), dtype=complex)
    for i, sl in enumerate(plan.bin_slices(grid_len)):
        indicator = np.zeros(grid_len)
        indicator[sl] = 1.0
        atoms[i] = grid_len * np.fft.ifft(indicator)
    return atoms


def _band_bin_counts(plan: BandPlan, grid_len: int) -> np.ndarray:
    return np.array([sl.stop - sl.start for sl in plan.bin_slices(grid_len)])


@lru_cache(maxsize=8)
def _plan_geometry(plan: BandPlan, grid_len: int):
    """Equal-width fast-path constants: band offsets and the spectrum of the
    indicator cross-correlation triangle (None when bands split unevenly)."""
    slices = plan.bin_slices(grid_len)
    widths = {sl.stop - sl.start for sl in slices}
    if len(widths) != 1:
        return None
    width = widths.pop()
    offsets = np.array([sl.start for sl in slices])
    triangle = np.zeros(grid_len)
    for d in range(-(width - 1), width):
        triangle[d % grid_len] = width - abs(d)
    return offsets, width, np.fft.fft(triangle)


class _LagSystem:
    """Normal-equation view of the pairwise-product fit for one measurement.

    c[tau] sums y_r conj(y_s) over ordered sample pairs at circular lag tau;
    h[tau] counts those pairs. Excluding tau = 0 drops exactly the r = s
    diagonal, i.e. the noise-floor term. The least-squares objective over
    pairs reduces to the quadratic form (gram, rhs) in the band powers, so
    subset fits and residuals are O(num_bands^3).

    Because the atoms are Fourier transforms of band indicators, the normal
    equations collapse to band sums of the non-uniform periodogram and one
    circular correlation of the pattern spectrum with a triangle kernel; no
    per-atom matrix products are needed when bands split the grid evenly.
    """

    def __init__(self, y: CompressedSamples, plan: BandPlan):
        op = y.operator
        grid = op.grid_len
        m = len(op.pattern)

        u = np.zeros(grid, dtype=complex)
        u[op.pattern] = y.values
        P = np.abs(np.fft.fft(u)) ** 2
        b = np.zeros(grid)
        b[op.pattern] = 1.0
        H = np.abs(np.fft.fft(b)) ** 2
        c0 = P.mean()  # lag-0 pair sum: sum |y_r|^2

        geometry = _plan_geometry(plan, grid)
        if geometry is not None:
            offsets, width, tri_f = geometry
            band_power = np.add.reduceat(P, offsets)[:plan.num_bands]
            self.rhs = band_power - c0 * width
            conv = np.fft.ifft(np.fft.fft(H) * np.conj(tri_f)).real
            shift = (offsets[None, :] - offsets[:, None]) % grid
            self.gram = conv[shift] - m * float(width) ** 2
        else:
            atoms = _band_atoms(plan, grid)
            c = np.fft.ifft(P)
            h = np.rint(np.fft.ifft(H).real)
            at = atoms[:, 1:]
            self.rhs = (at.conj() @ c[1:]).real
            self.gram = ((at * h[1:]) @ at.conj().T).real
        self.atom_norms = np.sqrt(np.maximum(np.diag(self.gram), 0.0))

        # Residuals are measured against the all-bands fit: the measured lag
        # products carry irreducible periodogram self-noise that no band
        # combination can represent, so the meaningful residual of a support
        # is its fit gap to the best the full band model could do. (The
        # all-bands Gram is singular by one dimension, the unidentifiable
        # white floor, hence the least-squares pseudo-solve.)
        p_all, *_ = np.linalg.lstsq(self.gram, self.rhs, rcond=None)
        self.explained_norm2 = max(float(self.rhs @ p_all), 0.0)

    def fit(self, support: tuple[int, ...]) -> tuple[np.ndarray, float]:
        """LS band powers on the support and the squared model-space residual."""
        if not support:
            return np.array([]), self.explained_norm2
        idx = list(support)
        sub = self.gram[np.ix_(idx, idx)]
        try:
            p = np.linalg.solve(sub, self.rhs[idx])
        except np.linalg.LinAlgError:
            # the all-bands support hits the Gram's white-floor null space
            p, *_ = np.linalg.lstsq(sub, self.rhs[idx], rcond=None)
        res2 = self.explained_norm2 - float(self.rhs[idx] @ p)
        return p, max(res2, 0.0)


def _estimate(plan: BandPlan, grid_len: int, support, powers,
              residual2: float) -> SparseEstimate:
    bins = _band_bin_counts(plan, grid_len)
    energies = np.zeros(plan.num_bands)
    for band, p in zip(support, powers):
        energies[band] = max(float(p), 0.0) * bins[band]
    return SparseEstimate(band_energies=energies,
                          support=tuple(sorted(int(b) for b in support)),
                          residual_norm=math.sqrt(residual2))


def recover_sparse(y: CompressedSamples, plan: BandPlan, max_support: int,
                   residual_tol: float = 0.0) -> SparseEstimate:
    """Greedy band pursuit with per-iteration full least-squares re-fit.

    Stops when the model-space residual drops to residual_tol times the
    all-bands explained norm, or the support reaches max_support. Band
    energies are the fitted coefficients' energies on the selected support,
    zero elsewhere.
    """
    _require(len(y.values) >= 1, "empty measurements")
    _require(1 <= max_support <= plan.num_bands,
             "max_support must be in [1, num_bands]")
    _require(residual_tol >= 0.0, "residual tolerance must be nonnegative")

    system = _LagSystem(y, plan)
    target2 = (residual_tol ** 2) * system.explained_norm2
    support: list[int] = []
    powers = np.array([])
    residual2 = system.explained_norm2
    while len(support) < max_support:
        coef = system.rhs.copy()
        if support:
            coef -= system.gram[:, support] @ powers
        scores = coef / np.maximum(system.atom_norms, 1e-300)
        scores[support] = -np.inf
        best = int(np.argmax(scores))
        if scores[best] <= 0.0:
            break
        support.append(best)
        powers, residual2 = system.fit(tuple(support))
        if residual2 <= target2:
            break
    return _estimate(plan, y.operator.grid_len, support, powers, residual2)


def exhaustive_oracle(y: CompressedSamples, plan: BandPlan, k: int) -> SparseEstimate:
    """Best k-subset of bands by brute-force least squares.

    Shares the greedy path's objective, so it lower-bounds the greedy
    residual by construction. Guarded to desk scale.
    """
    _require(len(y.values) >= 1, "empty measurements")
    _require(1 <= k <= plan.num_bands, "k must be in [1, num_bands]")
    n_subsets = math.comb(plan.num_bands, k)
    _require(n_subsets <= 10_000,
             f"C({plan.num_bands}, {k}) = {n_subsets} exceeds the desk-scale guard")

    system = _LagSystem(y, plan)
    best = None
    for subset in itertools.combinations(range(plan.num_bands), k):
        powers, residual2 = system.fit(subset)
        if best is None or residual2 < best[2]:
            best = (subset, powers, residual2)
    subset, powers, residual2 = best
    return _estimate(plan, y.operator.grid_len, subset, powers, residual2)


def band_decisions(est: SparseEstimate, energy_threshold: float) -> OccupancyMask:
    """Per-band occupancy by strict comparison against a calibrated threshold."""
    _require(energy_threshold >= 0.0, "energy threshold must be nonnegative")
    active = est.band_energies > energy_threshold
    return OccupancyMask(active=active, sparsity_k=int(active.sum()))


def null_band_energies(plan: BandPlan, grid_len: int, ratio: float,
                       max_support: int, trials: int, seed: int) -> np.ndarray:
    """Recovered band energies over noise-only trials, one row per trial.

    Each trial draws a fresh sampling pattern; trial t depends only on
    (seed, t), so the set is scheduling-independent.
    """
    energies = np.empty((trials, plan.num_bands))
    for t in range(trials):
        rng = spawn_rng(seed, "cs-null", t)
        noise = np.sqrt(NOISE_POWER / 2.0) * (rng.standard_normal(grid_len)
                                              + 1j * rng.standard_normal(grid_len))
        m = int(np.rint(ratio * grid_len))
        pattern = np.sort(rng.choice(grid_len, size=m, replace=False))
        op = MeasurementOperator(pattern=pattern, grid_len=grid_len,
                                 compression_ratio=m / grid_len, seed=seed)
        y = CompressedSamples(values=noise[pattern], operator=op)
        est = recover_sparse(y, plan, max_support)
        energies[t] = est.band_energies
    return energies


def calibrate_band_threshold(plan: BandPlan, grid_len: int, ratio: float,
                             max_support: int, target_fa: float, trials: int,
                             seed: int) -> float:
    """Empirical per-band decision threshold at the operating point.

    Pools the recovered band energies over noise-only trials; the threshold
    is their (1 - target_fa) quantile. The null depends on (ratio, grid_len,
    max_support), so each operating point is calibrated separately.
    """
    _require(0.0 < target_fa < 1.0, "target_fa must be in (0, 1)")
    needed = int(np.ceil(100.0 / (target_fa * plan.num_bands)))
    _require(trials >= needed, f"need at least {needed} noise-only trials")

    pooled = np.sort(null_band_energies(plan, grid_len, ratio, max_support,
                                        trials, seed).ravel())
    idx = int(np.ceil((1.0 - target_fa) * pooled.size)) - 1
    return float(pooled[idx])
