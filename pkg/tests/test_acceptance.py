"""Acceptance suite: the eight release criteria, at full scale.

Each test prints one `ACCEPTANCE <n> <name>: PASS|FAIL` line and asserts.
Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete. The whole module takes a few minutes; the compressive sweep
(criterion 3) dominates.
"""

import math
import time

import numpy as np
import pytest

from cogm2m import detectors, harness, protosim, widecs
from cogm2m.cli import main as cli_main
from cogm2m.config import CsSettings, DetectorSettings, ExperimentConfig
from cogm2m.detectors import calibrate_threshold
from cogm2m.fusion import FusionRule, fused_probability
from cogm2m.harness import run_fig5, run_fig6
from cogm2m.seeds import child_seed, spawn_rng
from cogm2m.sigmodel import make_band_plan, mask_from_bands, synth_wideband
from support import reference_scenario, run_random_scenario

SEED = 2026
PLAN16 = make_band_plan(16, 1e6)


def report(number: int, name: str, failures: list) -> None:
    status = "PASS" if not failures else "FAIL"
    print(f"\nACCEPTANCE {number} {name}: {status}")
    assert not failures, "\n".join(str(f) for f in failures)


@pytest.fixture(scope="module")
def fig6_cfg():
    return ExperimentConfig(
        experiment="fig6",
        trials=10_000,
        seed=SEED,
        snr_grid_db=tuple(np.arange(-20.0, 5.01, 2.5)),
        ratio_grid=tuple(np.round(np.arange(0.05, 1.001, 0.05), 10)),
        detector=DetectorSettings(),
        cs=CsSettings(snr_grid_db=(20.0,), trials=1000, calibration_trials=2000),
    )


@pytest.fixture(scope="module")
def fig6_curves(fig6_cfg):
    thresholds = harness.calibrate_detectors(fig6_cfg)
    points = run_fig6(fig6_cfg, thresholds)
    curves = {}
    for p in points:
        curves.setdefault(p.series, {})[p.x] = (p.value, p.ci_halfwidth)
    return curves


def test_criterion_1_calibration_soundness():
    """Each detector's re-measured Pfa on a fresh seed lands in
    [0.008, 0.012] with 1e5 noise-only trials, in under 60 s total."""
    det = DetectorSettings()
    failures = []
    start = time.perf_counter()
    for kind in detectors.KINDS:
        dcfg = harness.detector_config(det, kind)
        thr = calibrate_threshold(dcfg, 0.01, 100_000,
                                  child_seed(SEED, "acc1-cal", kind))
        measured = harness.verify_detector_pfa(dcfg, thr.value, 100_000,
                                               child_seed(SEED, "acc1-ver", kind))
        if not 0.008 <= measured <= 0.012:
            failures.append(f"{kind}: measured pfa {measured:.5f} outside band")
    elapsed = time.perf_counter() - start
    if elapsed >= 60.0:
        failures.append(f"runtime {elapsed:.1f} s exceeds 60 s budget")
    report(1, "detector calibration at 1% false alarm", failures)


def test_criterion_2_fig6_orderings(fig6_cfg, fig6_curves):
    """Ordering properties of the miss-detection curves at 1e4 trials/point."""
    failures = []
    snrs = sorted(fig6_cfg.snr_grid_db)
    energy = fig6_curves["energy"]
    unc = fig6_curves["energy_unc"]
    matched = fig6_curves["matched"]
    off = fig6_curves["matched_off4"]
    coop = fig6_curves["coop5of10"]

    # (a) noise uncertainty strictly worse beyond 95% CIs at SNR <= -10 dB
    for x in snrs:
        if x <= -10.0:
            (pe, ce), (pu, cu) = energy[x], unc[x]
            if not pu - cu > pe + ce:
                failures.append(f"(a) snr {x}: unc {pu:.4f}+/-{cu:.4f} "
                                f"not above exact {pe:.4f}+/-{ce:.4f}")

    # (b) timing offset >= 4 samples raises Pmd in the transition region
    for x in snrs:
        (pm, _), (po, _) = matched[x], off[x]
        if 0.05 < pm < 0.95 or 0.05 < po < 0.95:
            if not po > pm:
                failures.append(f"(b) snr {x}: offset {po:.4f} <= aligned {pm:.4f}")

    # (c) cooperation helps beyond CIs wherever single-sensor Pmd in [0.1, 0.6]
    for x in snrs:
        (pe, ce), (pc, cc) = energy[x], coop[x]
        if 0.1 <= pe <= 0.6:
            if not pc + cc < pe - ce:
                failures.append(f"(c) snr {x}: coop {pc:.4f}+/-{cc:.4f} "
                                f"not below single {pe:.4f}+/-{ce:.4f}")

    # (d) matched filter with perfect timing never worse than energy + 0.01
    for x in snrs:
        if not matched[x][0] <= energy[x][0] + 0.01:
            failures.append(f"(d) snr {x}: matched {matched[x][0]:.4f} above "
                            f"energy {energy[x][0]:.4f} + 0.01")
    report(2, "fig6 ordering properties", failures)


def test_criterion_3_fig5_compressive_detection(fig6_cfg):
    """16 bands x 1 MHz at 20 dB: per-band Pd >= 0.9 at ratio 0.1 with
    per-band false alarm <= 1.2%; K=7 at or below K=4 everywhere. < 10 min."""
    failures = []
    start = time.perf_counter()
    points = run_fig5(fig6_cfg)
    elapsed = time.perf_counter() - start

    curves = {}
    for p in points:
        curves.setdefault(p.series, {})[p.x] = (p.value, p.ci_halfwidth)
    k4, k7 = curves["K4_snr20"], curves["K7_snr20"]
    fa4 = curves["K4_snr20_fa"]

    pd_01 = k4[0.1][0]
    if not pd_01 >= 0.9:
        failures.append(f"K4 per-band Pd at ratio 0.1 is {pd_01:.4f} < 0.9")
    fa_01 = fa4[0.1][0]
    if not fa_01 <= 0.012:
        failures.append(f"K4 per-band false alarm at ratio 0.1 is {fa_01:.4f}")
    for x in sorted(k4):
        (p4, c4), (p7, c7) = k4[x], k7[x]
        if not p7 <= p4 + c4 + c7:
            failures.append(f"ratio {x}: K7 {p7:.4f} above K4 {p4:.4f} beyond CIs")
    if elapsed >= 600.0:
        failures.append(f"runtime {elapsed:.1f} s exceeds 10 min budget")
    report(3, "fig5 compressive detection", failures)


def test_criterion_4_oracle_equivalence():
    """On 100 random noiseless instances (K <= 3, ratio >= 0.5) the greedy
    support matches brute force in >= 98, and the oracle residual never
    exceeds the greedy residual."""
    failures = []
    rng = spawn_rng(SEED, "acc4")
    matches = 0
    dominance = 0
    for i in range(100):
        k = int(rng.integers(1, 4))
        ratio = float(rng.uniform(0.5, 1.0))
        bands = rng.choice(16, size=k, replace=False)
        seed = child_seed(SEED, "acc4", i)
        block = synth_wideband(PLAN16, mask_from_bands(16, bands), 20.0, 4096,
                               seed=seed, noise_power=0.0)
        op = widecs.draw_sampling_pattern(4096, ratio, seed=seed)
        y = widecs.measure(block, op)
        greedy = widecs.recover_sparse(y, PLAN16, max_support=k)
        oracle = widecs.exhaustive_oracle(y, PLAN16, k=k)
        matches += greedy.support == oracle.support
        dominance += oracle.residual_norm <= greedy.residual_norm + 1e-9
    if matches < 98:
        failures.append(f"supports agree on only {matches}/100 instances")
    if dominance != 100:
        failures.append(f"oracle residual above greedy on {100 - dominance} instances")
    report(4, "greedy vs exhaustive oracle", failures)


def test_criterion_5_fusion_oracle():
    """Monte Carlo voting matches the exact binomial tail; the half-probability
    value is exactly 638/1024."""
    failures = []
    rule = FusionRule(k=5, n=10)
    exact = sum(math.comb(10, j) * 0.6 ** j * 0.4 ** (10 - j)
                for j in range(5, 11))
    rng = spawn_rng(SEED, "acc5")
    votes = (rng.random((100_000, 10)) < 0.6).sum(axis=1)
    simulated = float(np.mean(votes >= 5))
    if abs(simulated - exact) > 0.01:
        failures.append(f"monte carlo {simulated:.5f} vs exact {exact:.5f}")
    if fused_probability(0.5, rule) != 638 / 1024:
        failures.append("fused_probability(0.5, 5-of-10) != 638/1024")
    report(5, "fusion binomial oracle", failures)


def test_criterion_6_protocol_golden_trace():
    """The default scenario reproduces the 11-event handshake byte-identically
    (the engine is single-threaded, so worker count cannot affect it), and
    safety invariants hold over 1000 randomized scenarios."""
    failures = []
    machines, enodeb = reference_scenario()
    first = protosim.format_trace_dump(protosim.run_handshake(machines, enodeb, 0))
    second = protosim.format_trace_dump(protosim.run_handshake(machines, enodeb, 0))
    if first != second:
        failures.append("re-run trace differs")
    if len(first.splitlines()) != 11:
        failures.append(f"golden trace has {len(first.splitlines())} events, not 11")
    expected_kinds = [
        "sync_acquired", "mib_decoded", "random_access_request",
        "group_id_request", "group_id_report", "carrier_switch_command",
        "sync_acquired", "random_access_request", "data_grant",
        "data_exchange", "data_exchange",
    ]
    kinds = [line.split("\t")[1] for line in first.splitlines()]
    if kinds != expected_kinds:
        failures.append(f"event order {kinds}")

    rng = np.random.default_rng(SEED)
    for i in range(1000):
        sim = run_random_scenario(rng, seed=i)
        problems = protosim.trace_violations(sim.trace, sim)
        if problems:
            failures.append(f"scenario {i}: {problems}")
            break
    report(6, "protocol golden trace and safety", failures)


def test_criterion_7_power_model():
    """Calibrated constants: duty 1.0 -> [6, 8] days, 0.25 -> [25, 35] days,
    0.01 -> >= 365 days; lifetime strictly decreasing in duty."""
    failures = []
    powers = protosim.ledger_for_duty(1.0)
    days = {d: protosim.lifetime_hours(d, powers) / 24.0
            for d in (1.0, 0.25, 0.01)}
    if not 6.0 <= days[1.0] <= 8.0:
        failures.append(f"duty 1.0 -> {days[1.0]:.2f} days")
    if not 25.0 <= days[0.25] <= 35.0:
        failures.append(f"duty 0.25 -> {days[0.25]:.2f} days")
    if not days[0.01] >= 365.0:
        failures.append(f"duty 0.01 -> {days[0.01]:.2f} days")
    grid = np.linspace(0.001, 1.0, 200)
    lifetimes = [protosim.lifetime_hours(d, powers) for d in grid]
    if not all(a > b for a, b in zip(lifetimes, lifetimes[1:])):
        failures.append("lifetime not strictly decreasing in duty")
    report(7, "DRX power model anchors", failures)


def test_criterion_8_cli_determinism(tmp_path):
    """Every CLI experiment re-run with identical config and seed produces
    byte-identical output files."""
    failures = []
    fig6_ini = tmp_path / "fig6.ini"
    fig6_ini.write_text(
        "[experiment]\ntrials = 1000\nsnr_grid_db = -5, 0\n"
        "[detector]\ncalibration_trials = 20000\n"
        "[cs]\nblock_len = 1024\ncheck_ratios = 0.5\ncalibration_trials = 1500\n")
    fig5_ini = tmp_path / "fig5.ini"
    fig5_ini.write_text(
        "[experiment]\nratio_grid = 0.25, 1.0\n"
        "[cs]\nblock_len = 1024\nsparsities = 2\nsnr_grid_db = 20\n"
        "trials = 1000\ncalibration_trials = 1200\n")

    runs = [
        ("fig6", ["fig6", "--config", str(fig6_ini), "--seed", "4", "--no-plot"],
         ["fig6.csv"]),
        ("fig5", ["fig5", "--config", str(fig5_ini), "--seed", "4", "--no-plot"],
         ["fig5.csv"]),
        ("proto", ["proto", "--seed", "4"], ["proto_trace.txt", "proto_trace.tsv"]),
        ("power", ["power", "--no-plot"], ["power.csv"]),
        ("calibrate", ["calibrate", "--config", str(fig6_ini), "--seed", "4"],
         ["calibration.txt"]),
    ]
    for name, argv, outputs in runs:
        blobs = []
        for attempt in ("first", "second"):
            subdir = tmp_path / f"{name}-{attempt}"
            subdir.mkdir()
            out_args = []
            for out in outputs[:1]:
                out_args = ["--out", str(subdir / out)]
            cli_main(argv + out_args)
            blobs.append(tuple((subdir / out).read_bytes()
                               for out in outputs))
        if blobs[0] != blobs[1]:
            failures.append(f"{name}: outputs differ between runs")
    report(8, "CLI end-to-end determinism", failures)
