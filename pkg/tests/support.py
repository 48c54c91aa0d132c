"""Shared helpers for protocol-simulation tests."""

import numpy as np

from cogm2m import protosim
from cogm2m.protosim import (LICENSED, UNLICENSED, CarrierDescriptor,
                             EnodebConfig, GroupId, MachineConfig,
                             SchedulingError, Simulation)


def reference_scenario():
    carriers = (
        CarrierDescriptor("L0", LICENSED),
        CarrierDescriptor("U1", UNLICENSED, relative_timing=3, tolerance_class=1),
    )
    machines = [MachineConfig("m1", GroupId("g-alpha", 1))]
    return machines, EnodebConfig(carriers=carriers)


def random_scenario(rng: np.random.Generator):
    """A randomized small cell: machines, carriers, and driver injections."""
    n_machines = int(rng.integers(1, 4))
    n_unlicensed = int(rng.integers(0, 4))
    carriers = [CarrierDescriptor("L0", LICENSED)]
    for i in range(n_unlicensed):
        occupied = float(rng.uniform(0, 15)) if rng.random() < 0.5 else None
        carriers.append(CarrierDescriptor(
            f"U{i + 1}", UNLICENSED,
            relative_timing=int(rng.integers(0, 8)),
            tolerance_class=int(rng.integers(0, 3)),
            occupied_snr_db=occupied))
    machines = [
        MachineConfig(
            f"m{j + 1}",
            GroupId(f"g{j}", int(rng.integers(0, 3))),
            powered_on=bool(rng.random() < 0.9),
            power_on_at=int(rng.integers(0, 4)))
        for j in range(n_machines)
    ]
    enodeb = EnodebConfig(
        carriers=tuple(carriers),
        calibration_delay=int(rng.integers(1, 4)),
        scan_delay=int(rng.integers(1, 4)),
        switch_delay=int(rng.integers(1, 4)),
        gap_len=int(rng.integers(64, 512)),
        data_messages=int(rng.integers(1, 4)),
    )

    injections = []
    if n_unlicensed >= 1 and rng.random() < 0.6:
        target = carriers[int(rng.integers(1, len(carriers)))]
        injections.append(("gap", f"m{int(rng.integers(0, n_machines)) + 1}",
                           target, int(rng.integers(5, 40))))
    if n_unlicensed >= 2 and rng.random() < 0.5:
        old = carriers[int(rng.integers(1, len(carriers)))].carrier_id
        new = carriers[int(rng.integers(1, len(carriers)))].carrier_id
        injections.append(("change", old, new, int(rng.integers(5, 40))))
    return machines, enodeb, injections


def run_random_scenario(rng: np.random.Generator, seed: int) -> Simulation:
    """Build, inject, and drain a randomized scenario; rejected commands are
    an expected outcome, not a failure."""
    machines, enodeb, injections = random_scenario(rng)
    sim = Simulation(machines, enodeb, seed=seed)
    for inj in injections:
        if inj[0] == "gap":
            sim.enqueue_measurement_gap(inj[1], inj[2], inj[3])
        else:
            sim.enqueue_carrier_change(inj[1], inj[2], inj[3])
    while True:
        try:
            sim.run()
            break
        except SchedulingError:
            continue
    return sim


def assert_trace_safe(sim: Simulation):
    problems = protosim.trace_violations(sim.trace, sim)
    assert problems == [], problems
