"""Deterministic simulation of the MTC machine / Smart-eNodeB handshake.

Models the call procedure for bringing a machine onto an unlicensed
carrier: licensed-cell scanning and sync, MIB decode, random access, group
ID exchange over the uplink control channel, the carrier switch command
carrying the full unlicensed-carrier description, re-sync and random access
on the unlicensed carrier, grant, and data exchange. Measurement gaps and
dynamic carrier changes interrupt connected machines; the DRX duty-cycle
ledger turns radio-on fractions into battery-lifetime estimates.

Time is an integer tick counter. The event queue orders same-tick events by
(endpoint id, message kind rank, insertion order), so a trace is a pure
function of (scenario, seed) regardless of how the driver interleaves calls.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .seeds import spawn_rng

LICENSED = "licensed"
UNLICENSED = "unlicensed"

# machine phases
OFF = "off"
CALIBRATING = "calibrating"
SCANNING = "scanning"
SYNCED_LICENSED = "synced_licensed"
RANDOM_ACCESS_LICENSED = "random_access_licensed"
REPORTING_GROUP_ID = "reporting_group_id"
SWITCHING = "switching"
SYNCED_UNLICENSED = "synced_unlicensed"
RANDOM_ACCESS_UNLICENSED = "random_access_unlicensed"
CONNECTED = "connected"
MEASUREMENT_GAP = "measurement_gap"
DRX_SLEEP = "drx_sleep"

# message kinds, in rank order used for same-tick tie-breaking
MESSAGE_KINDS = (
    "sync_acquired",
    "mib_decoded",
    "random_access_request",
    "group_id_request",
    "group_id_report",
    "carrier_switch_command",
    "data_grant",
    "data_exchange",
    "measurement_gap_command",
    "measurement_report",
    "carrier_change_command",
)
_KIND_RANK = {k: i for i, k in enumerate(MESSAGE_KINDS)}

DRX_CYCLE_CAP_S = 2.56


class SchedulingError(RuntimeError):
    """A protocol command was issued against a machine in the wrong phase."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class CarrierDescriptor:
    """One carrier the S-eNodeB knows about.

    relative_timing is the frame-clock offset against the licensed carrier
    and exists only for unlicensed carriers. tolerance_class states which
    machine performance class the carrier is meant to serve; occupied_snr_db
    models primary-user activity seen by measurement gaps (None = vacant).
    """

    carrier_id: str
    band: str
    modulation: str = "qpsk"
    coding: str = "rate-1/2"
    relative_timing: int | None = None
    tolerance_class: int = 0
    occupied_snr_db: float | None = None

    def __post_init__(self):
        _require(self.band in (LICENSED, UNLICENSED), f"unknown band {self.band!r}")
        if self.band == UNLICENSED:
            _require(self.relative_timing is not None,
                     "unlicensed carriers need a relative_timing offset")
        else:
            _require(self.relative_timing is None,
                     "relative_timing is defined only for unlicensed carriers")


@dataclass(frozen=True)
class GroupId:
    id: str
    tolerance_class: int


@dataclass(frozen=True)
class MachineConfig:
    machine_id: str
    group: GroupId
    powered_on: bool = True
    power_on_at: int = 0


@dataclass(frozen=True)
class EnodebConfig:
    carriers: tuple[CarrierDescriptor, ...]
    enodeb_id: str = "enb"
    calibration_delay: int = 2
    scan_delay: int = 2
    switch_delay: int = 2
    gap_len: int = 256
    noise_floor_db: float = 0.0
    data_messages: int = 1  # uplink/downlink exchange pairs after a grant

    def __post_init__(self):
        _require(any(c.band == LICENSED for c in self.carriers),
                 "at least one licensed carrier must be configured")


@dataclass
class MachineState:
    phase: str = OFF
    current_carrier: str | None = None
    pending_report: float | None = None
    epoch: int = 0  # bumped on carrier change; cancels stale scheduled steps
    data_remaining: int = 0


@dataclass
class SeNodeBState:
    known_carriers: dict[str, CarrierDescriptor] = field(default_factory=dict)
    allocations: dict[str, str] = field(default_factory=dict)
    neighbor_announcements: set[str] = field(default_factory=set)
    sensing_reports: list = field(default_factory=list)


@dataclass(frozen=True)
class Message:
    time: int
    kind: str
    src: str
    dst: str
    payload: dict

    def summary(self) -> str:
        if not self.payload:
            return "-"
        parts = []
        for key in sorted(self.payload):
            value = self.payload[key]
            if isinstance(value, float):
                parts.append(f"{key}={value:.3f}")
            else:
                parts.append(f"{key}={value}")
        return ",".join(parts)


def format_trace_text(trace: list[Message]) -> str:
    """Human-readable trace: one `time kind from to payload-summary` line per message."""
    return "".join(f"{m.time} {m.kind} {m.src} {m.dst} {m.summary()}\n" for m in trace)


def format_trace_dump(trace: list[Message]) -> str:
    """Machine-readable tab-delimited dump for golden-trace comparison."""
    return "".join(f"{m.time}\t{m.kind}\t{m.src}\t{m.dst}\t{m.summary()}\n"
                   for m in trace)


class Simulation:
    """Event-driven run of one S-eNodeB cell and its machines."""

    def __init__(self, machines, enodeb: EnodebConfig, seed: int = 0):
        machines = tuple(machines)
        ids = [m.machine_id for m in machines]
        _require(len(set(ids)) == len(ids), "machine ids must be unique")
        self.machine_cfgs = {m.machine_id: m for m in machines}
        self.cfg = enodeb
        self.seed = int(seed)
        self.now = 0
        self.trace: list[Message] = []
        self._queue: list = []
        self._seq = 0

        self.enodeb = SeNodeBState(
            known_carriers={c.carrier_id: c for c in enodeb.carriers})
        # unlicensed carriers are announced to the neighbours up front, before
        # any allocation can reference them
        self.enodeb.neighbor_announcements = {
            c.carrier_id for c in enodeb.carriers if c.band == UNLICENSED}

        self.machines = {m.machine_id: MachineState() for m in machines}
        self._licensed_id = next(c.carrier_id for c in enodeb.carriers
                                 if c.band == LICENSED)
        for m in machines:
            if m.powered_on:
                st = self.machines[m.machine_id]
                st.phase = CALIBRATING
                self._schedule(m.power_on_at + enodeb.calibration_delay,
                               m.machine_id, 99, self._step_scan, m.machine_id)

    # -- queue ------------------------------------------------------------

    def _schedule(self, time: int, endpoint: str, kind_rank: int, fn, *args):
        heapq.heappush(self._queue, (time, endpoint, kind_rank, self._seq, fn, args))
        self._seq += 1

    def run_until(self, t: int) -> None:
        while self._queue and self._queue[0][0] <= t:
            time, _, _, _, fn, args = heapq.heappop(self._queue)
            self.now = time
            fn(*args)
        self.now = max(self.now, t)

    def run(self) -> list[Message]:
        while self._queue:
            time, _, _, _, fn, args = heapq.heappop(self._queue)
            self.now = time
            fn(*args)
        return self.trace

    def _emit(self, kind: str, src: str, dst: str, **payload) -> Message:
        msg = Message(time=self.now, kind=kind, src=src, dst=dst, payload=payload)
        self.trace.append(msg)
        return msg

    # -- licensed-side call procedure --------------------------------------

    def _step_scan(self, mid: str):
        self.machines[mid].phase = SCANNING
        self._schedule(self.now + self.cfg.scan_delay, mid,
                       _KIND_RANK["sync_acquired"], self._step_sync_licensed, mid)

    def _step_sync_licensed(self, mid: str):
        st = self.machines[mid]
        st.phase = SYNCED_LICENSED
        st.current_carrier = self._licensed_id
        self._emit("sync_acquired", mid, self.cfg.enodeb_id,
                   carrier=self._licensed_id)
        self._schedule(self.now + 1, mid, _KIND_RANK["mib_decoded"],
                       self._step_mib, mid)

    def _step_mib(self, mid: str):
        self._emit("mib_decoded", mid, self.cfg.enodeb_id,
                   carrier=self._licensed_id)
        self._schedule(self.now + 1, mid, _KIND_RANK["random_access_request"],
                       self._step_random_access_licensed, mid)

    def _step_random_access_licensed(self, mid: str):
        self.machines[mid].phase = RANDOM_ACCESS_LICENSED
        self._emit("random_access_request", mid, self.cfg.enodeb_id,
                   carrier=self._licensed_id)
        self._schedule(self.now + 1, self.cfg.enodeb_id,
                       _KIND_RANK["group_id_request"], self._enb_group_request, mid)

    def _enb_group_request(self, mid: str):
        self._emit("group_id_request", self.cfg.enodeb_id, mid)
        self._schedule(self.now + 1, mid, _KIND_RANK["group_id_report"],
                       self._step_group_report, mid)

    def _step_group_report(self, mid: str):
        st = self.machines[mid]
        st.phase = REPORTING_GROUP_ID
        group = self.machine_cfgs[mid].group
        self._emit("group_id_report", mid, self.cfg.enodeb_id,
                   group=group.id, tolerance_class=group.tolerance_class,
                   channel="uplink_control")
        self._schedule(self.now + 1, self.cfg.enodeb_id,
                       _KIND_RANK["carrier_switch_command"],
                       self._enb_assign_carrier, mid)

    def _pick_unlicensed(self, tolerance_class: int) -> CarrierDescriptor | None:
        announced = [c for c in self.cfg.carriers
                     if c.band == UNLICENSED
                     and c.carrier_id in self.enodeb.neighbor_announcements]
        exact = [c for c in announced if c.tolerance_class == tolerance_class]
        pool = exact or announced
        if not pool:
            return None
        return min(pool, key=lambda c: c.carrier_id)

    def _enb_assign_carrier(self, mid: str):
        group = self.machine_cfgs[mid].group
        carrier = self._pick_unlicensed(group.tolerance_class)
        if carrier is None:
            # no unlicensed capacity: keep the machine served on the licensed
            # carrier so an alternative band always exists
            self.enodeb.allocations[mid] = self._licensed_id
            self.machines[mid].phase = CONNECTED
            self._emit("data_grant", self.cfg.enodeb_id, mid,
                       carrier=self._licensed_id)
            return
        assert carrier.carrier_id in self.enodeb.neighbor_announcements
        self.enodeb.allocations[mid] = carrier.carrier_id
        self._emit("carrier_switch_command", self.cfg.enodeb_id, mid,
                   carrier=carrier.carrier_id, band=carrier.band,
                   modulation=carrier.modulation, coding=carrier.coding,
                   timing=carrier.relative_timing)
        st = self.machines[mid]
        st.phase = SWITCHING
        st.epoch += 1
        self._schedule(self.now + self.cfg.switch_delay, mid,
                       _KIND_RANK["sync_acquired"], self._step_sync_unlicensed,
                       mid, carrier.carrier_id, st.epoch)

    # -- unlicensed-side steps ---------------------------------------------

    def _step_sync_unlicensed(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return  # superseded by a carrier change
        st.phase = SYNCED_UNLICENSED
        st.current_carrier = carrier_id
        self._emit("sync_acquired", mid, self.cfg.enodeb_id, carrier=carrier_id)
        self._schedule(self.now + 1, mid, _KIND_RANK["random_access_request"],
                       self._step_random_access_unlicensed, mid, carrier_id, epoch)

    def _step_random_access_unlicensed(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return
        st.phase = RANDOM_ACCESS_UNLICENSED
        self._emit("random_access_request", mid, self.cfg.enodeb_id,
                   carrier=carrier_id)
        self._schedule(self.now + 1, self.cfg.enodeb_id, _KIND_RANK["data_grant"],
                       self._enb_grant, mid, carrier_id, epoch)

    def _enb_grant(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return
        st.phase = CONNECTED
        st.data_remaining = self.cfg.data_messages
        self._emit("data_grant", self.cfg.enodeb_id, mid, carrier=carrier_id)
        self._schedule(self.now + 1, mid, _KIND_RANK["data_exchange"],
                       self._step_data_uplink, mid, carrier_id, epoch)

    def _step_data_uplink(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch or st.phase != CONNECTED or st.data_remaining <= 0:
            return
        self._emit("data_exchange", mid, self.cfg.enodeb_id,
                   carrier=carrier_id, channel="uplink_shared")
        self._schedule(self.now + 1, self.cfg.enodeb_id,
                       _KIND_RANK["data_exchange"], self._step_data_downlink,
                       mid, carrier_id, epoch)

    def _step_data_downlink(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch or st.phase != CONNECTED:
            return
        self._emit("data_exchange", self.cfg.enodeb_id, mid,
                   carrier=carrier_id, channel="downlink_shared")
        st.data_remaining -= 1
        if st.data_remaining > 0:
            self._schedule(self.now + 1, mid, _KIND_RANK["data_exchange"],
                           self._step_data_uplink, mid, carrier_id, epoch)

    # -- driver-level operations --------------------------------------------

    def enqueue_measurement_gap(self, machine_id: str,
                                target_carrier: CarrierDescriptor, at: int):
        """Queue a gap command for execution at tick `at` (no run)."""
        _require(machine_id in self.machines, f"unknown machine {machine_id!r}")
        _require(at >= self.now, "cannot schedule a gap in the past")
        st = self.machines[machine_id]
        self._schedule(at, self.cfg.enodeb_id,
                       _KIND_RANK["measurement_gap_command"],
                       self._exec_measurement_gap, machine_id, target_carrier,
                       at, st.epoch)

    def _exec_measurement_gap(self, mid: str, target: CarrierDescriptor,
                              at: int, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return  # canceled by a carrier change
        if st.phase != CONNECTED:
            raise SchedulingError(
                f"measurement gap for {mid} rejected: phase is {st.phase}")
        self._emit("measurement_gap_command", self.cfg.enodeb_id, mid,
                   carrier=target.carrier_id, gap=self.cfg.gap_len)
        st.phase = MEASUREMENT_GAP
        rng = spawn_rng(self.seed, "gap", mid, at)
        snr_lin = (10.0 ** (target.occupied_snr_db / 10.0)
                   if target.occupied_snr_db is not None else 0.0)
        # average of gap_len unit-mean power samples on the target carrier
        sample_mean = rng.gamma(shape=self.cfg.gap_len) / self.cfg.gap_len
        power_db = self.cfg.noise_floor_db + 10.0 * math.log10(
            (1.0 + snr_lin) * sample_mean)
        st.pending_report = power_db
        self._schedule(self.now + 1, mid, _KIND_RANK["measurement_report"],
                       self._step_measurement_report, mid, target.carrier_id,
                       epoch)

    def _step_measurement_report(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return
        msg = self._emit("measurement_report", mid, self.cfg.enodeb_id,
                         carrier=carrier_id, power_db=st.pending_report)
        self.enodeb.sensing_reports.append(msg)
        st.pending_report = None
        st.phase = CONNECTED

    def enqueue_carrier_change(self, carrier_old: str, carrier_new: str, at: int):
        """Queue a dynamic carrier change for execution at tick `at`."""
        _require(at >= self.now, "cannot schedule a change in the past")
        _require(carrier_new in self.enodeb.known_carriers,
                 f"unknown carrier {carrier_new!r}")
        _require(carrier_new in self.enodeb.neighbor_announcements,
                 f"carrier {carrier_new!r} was never announced to the neighbours")
        self._schedule(at, self.cfg.enodeb_id,
                       _KIND_RANK["carrier_change_command"],
                       self._exec_carrier_change, carrier_old, carrier_new)

    def _exec_carrier_change(self, carrier_old: str, carrier_new: str):
        if carrier_old == carrier_new:
            return
        carrier = self.enodeb.known_carriers[carrier_new]
        affected = sorted(m for m, c in self.enodeb.allocations.items()
                          if c == carrier_old)
        for mid in affected:
            st = self.machines[mid]
            st.epoch += 1  # cancels pending gaps and data on the old carrier
            st.pending_report = None
            self.enodeb.allocations[mid] = carrier_new
            self._emit("carrier_change_command", self.cfg.enodeb_id, mid,
                       carrier=carrier.carrier_id, band=carrier.band,
                       modulation=carrier.modulation, coding=carrier.coding,
                       timing=carrier.relative_timing)
            st.phase = SWITCHING
            self._schedule(self.now + self.cfg.switch_delay, mid,
                           _KIND_RANK["sync_acquired"],
                           self._step_resync_after_change, mid,
                           carrier.carrier_id, st.epoch)

    def _step_resync_after_change(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return
        st.phase = SYNCED_UNLICENSED
        st.current_carrier = carrier_id
        self._emit("sync_acquired", mid, self.cfg.enodeb_id, carrier=carrier_id)
        self._schedule(self.now + 1, self.cfg.enodeb_id, _KIND_RANK["data_grant"],
                       self._step_regrant_after_change, mid, carrier_id, epoch)

    def _step_regrant_after_change(self, mid: str, carrier_id: str, epoch: int):
        st = self.machines[mid]
        if st.epoch != epoch:
            return
        st.phase = CONNECTED
        self._emit("data_grant", self.cfg.enodeb_id, mid, carrier=carrier_id)


def run_handshake(machines, enodeb: EnodebConfig, seed: int = 0) -> list[Message]:
    """Run the call procedure for every powered-on machine to completion."""
    sim = Simulation(machines, enodeb, seed)
    return sim.run()


def schedule_measurement_gap(sim: Simulation, machine_id: str,
                             target_carrier: CarrierDescriptor,
                             at: int) -> tuple[Message, Message]:
    """Interrupt a connected machine at tick `at`: it measures the target
    carrier's power and reports it, then data exchange resumes.

    Returns the (command, report) message pair. Raises SchedulingError when
    the machine is not connected at `at`.
    """
    sim.run_until(at - 1)
    before = len(sim.trace)
    sim.enqueue_measurement_gap(machine_id, target_carrier, at)
    sim.run()
    emitted = sim.trace[before:]
    command = next(m for m in emitted if m.kind == "measurement_gap_command"
                   and m.dst == machine_id)
    report = next(m for m in emitted if m.kind == "measurement_report"
                  and m.src == machine_id)
    return command, report


def trigger_carrier_change(sim: Simulation, carrier_old: str, carrier_new: str,
                           at: int | None = None) -> list[Message]:
    """Move every machine allocated to carrier_old onto carrier_new.

    Returns the trace fragment the change produced (empty for a change to
    the same carrier). Rejects carriers that were never announced.
    """
    when = sim.now + 1 if at is None else at
    before = len(sim.trace)
    sim.enqueue_carrier_change(carrier_old, carrier_new, when)
    sim.run()
    return sim.trace[before:]


# ---------------------------------------------------------------------------
# Safety checks over generated traces
# ---------------------------------------------------------------------------

def trace_violations(trace: list[Message], sim: Simulation) -> list[str]:
    """Protocol-safety violations in a finished run (empty list = clean).

    Checks: monotone timestamps; no unlicensed data exchange before both a
    sync and a grant on that carrier; group-ID report before any carrier
    switch for the same machine; every allocated or commanded carrier
    announced to the neighbours before use.
    """
    problems = []
    unlicensed = {c.carrier_id for c in sim.cfg.carriers if c.band == UNLICENSED}
    announced = sim.enodeb.neighbor_announcements

    last_t = None
    synced: set[tuple[str, str]] = set()
    granted: set[tuple[str, str]] = set()
    reported: set[str] = set()
    for m in trace:
        if last_t is not None and m.time < last_t:
            problems.append(f"timestamp decreased at {m}")
        last_t = m.time
        machine = m.src if m.src != sim.cfg.enodeb_id else m.dst
        carrier = m.payload.get("carrier")
        if m.kind == "sync_acquired":
            synced.add((machine, carrier))
        elif m.kind == "data_grant":
            granted.add((machine, carrier))
        elif m.kind == "data_exchange" and carrier in unlicensed:
            if (machine, carrier) not in synced:
                problems.append(f"data before sync on {carrier} for {machine}")
            if (machine, carrier) not in granted:
                problems.append(f"data before grant on {carrier} for {machine}")
        elif m.kind == "group_id_report":
            reported.add(machine)
        elif m.kind == "carrier_switch_command":
            if machine not in reported:
                problems.append(f"switch before group-id report for {machine}")
            if carrier not in announced:
                problems.append(f"switch to unannounced carrier {carrier}")
        elif m.kind == "carrier_change_command":
            if carrier not in announced:
                problems.append(f"change to unannounced carrier {carrier}")
    for machine, carrier in sim.enodeb.allocations.items():
        if carrier in unlicensed and carrier not in announced:
            problems.append(f"allocation of unannounced carrier {carrier}")
    return problems


# ---------------------------------------------------------------------------
# DRX duty cycle and battery lifetime
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrxConfig:
    """Sleep-cycle settings. Cycles above 2.56 s need the extended flag."""

    cycle_period_s: float
    on_duration_s: float
    wakeup_margin_s: float = 0.0
    extended: bool = False

    def __post_init__(self):
        _require(self.cycle_period_s > 0.0, "cycle period must be positive")
        _require(self.on_duration_s >= 0.0 and self.wakeup_margin_s >= 0.0,
                 "durations must be nonnegative")
        _require(self.on_duration_s + self.wakeup_margin_s <= self.cycle_period_s,
                 "on duration plus wakeup margin cannot exceed the cycle")
        if not self.extended:
            _require(self.cycle_period_s <= DRX_CYCLE_CAP_S,
                     f"cycle period above {DRX_CYCLE_CAP_S} s requires extended=True")

    @property
    def duty_cycle(self) -> float:
        return (self.on_duration_s + self.wakeup_margin_s) / self.cycle_period_s


@dataclass(frozen=True)
class PowerLedger:
    """Radio-on bookkeeping plus the calibrated power constants.

    The default constants are calibrated once so a always-on radio empties
    the budget in 7 days, then frozen: 2016 mWh at 12 mW active draw, with
    0.06 mW sleep draw.
    """

    radio_on_time: float
    total_time: float
    duty_cycle: float
    battery_capacity_mwh: float = 2016.0
    active_power_mw: float = 12.0
    sleep_power_mw: float = 0.06

    def __post_init__(self):
        _require(0.0 <= self.duty_cycle <= 1.0, "duty cycle must be in [0, 1]")
        _require(self.radio_on_time <= self.total_time,
                 "radio-on time cannot exceed total time")
        _require(self.battery_capacity_mwh > 0.0, "battery capacity must be positive")
        _require(self.active_power_mw > self.sleep_power_mw >= 0.0,
                 "need active power > sleep power >= 0")


def ledger_for_duty(duty: float, battery_capacity_mwh: float = 2016.0,
                    active_power_mw: float = 12.0,
                    sleep_power_mw: float = 0.06) -> PowerLedger:
    return PowerLedger(radio_on_time=duty, total_time=1.0, duty_cycle=duty,
                       battery_capacity_mwh=battery_capacity_mwh,
                       active_power_mw=active_power_mw,
                       sleep_power_mw=sleep_power_mw)


def lifetime_hours(duty: float, powers: PowerLedger) -> float:
    """Battery lifetime in hours at the given radio duty cycle."""
    _require(0.0 <= duty <= 1.0, "duty cycle must be in [0, 1]")
    drain_mw = duty * powers.active_power_mw + (1.0 - duty) * powers.sleep_power_mw
    if drain_mw == 0.0:
        return math.inf  # unbounded: nothing draws power
    return powers.battery_capacity_mwh / drain_mw


def drx_lifetime(drx: DrxConfig, powers: PowerLedger) -> float:
    """Lifetime in hours for a DRX configuration under the given constants."""
    return lifetime_hours(drx.duty_cycle, powers)
