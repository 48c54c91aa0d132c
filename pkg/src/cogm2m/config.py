"""Line-oriented `key = value` configuration files with [section] headers.

Unknown sections and unknown keys are hard errors: a typo in an experiment
config must fail fast, not silently fall back to a default. Values are
converted according to the type of the corresponding default, so the typed
settings dataclasses below are the single source of schema truth.

Dynamic sections describe protocol scenarios: every `[carrier.<id>]`
section defines a carrier, every `[machine.<id>]` a machine.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from . import protosim


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict[str, dict[str, str]]:
    """Raw sections; duplicate sections/keys and header-less keys are errors."""
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{source}:{lineno}: empty section header")
            if name in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{name}]")
            current = {}
            sections[name] = current
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected `key = value`, got {line!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in current:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        current[key] = value.strip()
    return sections


def load_config_file(path: str) -> dict[str, dict[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def _convert(raw: str, default, key: str):
    if isinstance(default, bool):
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        elem = default[0] if default else 0.0
        return tuple(_convert(s, elem, key) for s in items)
    return raw


def apply_section(settings, section: dict[str, str], section_name: str):
    """Overlay raw key/value pairs onto a settings dataclass instance."""
    known = {f.name: getattr(settings, f.name) for f in dataclasses.fields(settings)}
    updates = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section [{section_name}]")
        updates[key] = _convert(raw, known[key], f"[{section_name}] {key}")
    return dataclasses.replace(settings, **updates)


# ---------------------------------------------------------------------------
# Typed settings
# ---------------------------------------------------------------------------

def _float_range(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


@dataclass(frozen=True)
class ExperimentSettings:
    trials: int = 10_000
    seed: int = 1
    snr_grid_db: tuple = _float_range(-20.0, 5.0, 2.5)
    ratio_grid: tuple = _float_range(0.05, 1.0, 0.05)


@dataclass(frozen=True)
class DetectorSettings:
    window_len: int = 32
    period_samples: int = 32
    cyclo_window_len: int = 512
    template_id: str = "hann_half"
    timing_offset: int = 4
    noise_uncertainty_db: float = 0.5
    target_pfa: float = 0.01
    calibration_trials: int = 100_000


@dataclass(frozen=True)
class FusionSettings:
    k: int = 5
    n: int = 10


@dataclass(frozen=True)
class CsSettings:
    num_bands: int = 16
    band_width_hz: float = 1e6
    block_len: int = 4096
    sparsities: tuple = (4, 7)
    snr_grid_db: tuple = (5.0, 20.0)
    trials: int = 1000
    target_fa: float = 0.01
    calibration_trials: int = 2000
    check_ratios: tuple = (0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class PowerSettings:
    battery_capacity_mwh: float = 2016.0
    active_power_mw: float = 12.0
    sleep_power_mw: float = 0.06
    duty_grid: tuple = (1.0, 0.5, 0.25, 0.1, 0.05, 0.01)


@dataclass(frozen=True)
class DrxSettings:
    cycle_period_s: float = 2.56
    on_duration_s: float = 0.0256
    wakeup_margin_s: float = 0.0
    extended: bool = False


@dataclass(frozen=True)
class ProtoSettings:
    calibration_delay: int = 2
    scan_delay: int = 2
    switch_delay: int = 2
    gap_len: int = 256
    noise_floor_db: float = 0.0
    data_messages: int = 1


@dataclass(frozen=True)
class CarrierSettings:
    band: str = "licensed"
    modulation: str = "qpsk"
    coding: str = "rate-1/2"
    relative_timing: int = 0
    tolerance_class: int = 0
    occupied_snr_db: float = -1000.0  # sentinel: at/below noise floor means vacant


@dataclass(frozen=True)
class MachineSettings:
    group: str = "g0"
    tolerance_class: int = 0
    powered_on: bool = True
    power_on_at: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    trials: int
    seed: int
    snr_grid_db: tuple
    ratio_grid: tuple
    detector: DetectorSettings = field(default_factory=DetectorSettings)
    fusion: FusionSettings = field(default_factory=FusionSettings)
    cs: CsSettings = field(default_factory=CsSettings)
    power: PowerSettings = field(default_factory=PowerSettings)
    drx: DrxSettings = field(default_factory=DrxSettings)


_STATIC_SECTIONS = {
    "experiment": ExperimentSettings,
    "detector": DetectorSettings,
    "fusion": FusionSettings,
    "cs": CsSettings,
    "power": PowerSettings,
    "drx": DrxSettings,
    "proto": ProtoSettings,
}


def build_experiment_config(raw: dict[str, dict[str, str]], experiment: str,
                            seed=None, trials=None, out_unknown_ok=False) -> ExperimentConfig:
    """Typed experiment config from raw sections plus CLI overrides."""
    for name in raw:
        if name in _STATIC_SECTIONS:
            continue
        if name.startswith("carrier.") or name.startswith("machine."):
            continue
        raise ConfigError(f"unknown section [{name}]")

    exp = apply_section(ExperimentSettings(), raw.get("experiment", {}), "experiment")
    detector = apply_section(DetectorSettings(), raw.get("detector", {}), "detector")
    fus = apply_section(FusionSettings(), raw.get("fusion", {}), "fusion")
    cs = apply_section(CsSettings(), raw.get("cs", {}), "cs")
    power = apply_section(PowerSettings(), raw.get("power", {}), "power")
    drx = apply_section(DrxSettings(), raw.get("drx", {}), "drx")
    if trials is not None and experiment == "fig5":
        cs = dataclasses.replace(cs, trials=int(trials))
    return ExperimentConfig(
        experiment=experiment,
        trials=int(trials) if trials is not None else exp.trials,
        seed=int(seed) if seed is not None else exp.seed,
        snr_grid_db=exp.snr_grid_db,
        ratio_grid=exp.ratio_grid,
        detector=detector,
        fusion=fus,
        cs=cs,
        power=power,
        drx=drx,
    )


def build_scenario(raw: dict[str, dict[str, str]]):
    """(machines, enodeb_config) from the proto/carrier/machine sections.

    Without any carrier/machine sections the built-in reference scenario is
    returned: one licensed carrier, one unlicensed carrier, one machine.
    """
    proto = apply_section(ProtoSettings(), raw.get("proto", {}), "proto")

    carriers = []
    for name, section in raw.items():
        if not name.startswith("carrier."):
            continue
        cid = name.split(".", 1)[1]
        cs = apply_section(CarrierSettings(), section, name)
        occupied = cs.occupied_snr_db if cs.occupied_snr_db > -999.0 else None
        carriers.append(protosim.CarrierDescriptor(
            carrier_id=cid,
            band=cs.band,
            modulation=cs.modulation,
            coding=cs.coding,
            relative_timing=cs.relative_timing if cs.band == protosim.UNLICENSED else None,
            tolerance_class=cs.tolerance_class,
            occupied_snr_db=occupied,
        ))
    machines = []
    for name, section in sorted(raw.items()):
        if not name.startswith("machine."):
            continue
        mid = name.split(".", 1)[1]
        ms = apply_section(MachineSettings(), section, name)
        machines.append(protosim.MachineConfig(
            machine_id=mid,
            group=protosim.GroupId(ms.group, ms.tolerance_class),
            powered_on=ms.powered_on,
            power_on_at=ms.power_on_at,
        ))

    if not carriers:
        carriers = [
            protosim.CarrierDescriptor("L0", protosim.LICENSED),
            protosim.CarrierDescriptor("U1", protosim.UNLICENSED,
                                       relative_timing=3, tolerance_class=1),
        ]
    if not machines:
        machines = [protosim.MachineConfig(
            "m1", protosim.GroupId("g-alpha", 1))]

    carriers.sort(key=lambda c: c.carrier_id)
    enodeb = protosim.EnodebConfig(
        carriers=tuple(carriers),
        calibration_delay=proto.calibration_delay,
        scan_delay=proto.scan_delay,
        switch_delay=proto.switch_delay,
        gap_len=proto.gap_len,
        noise_floor_db=proto.noise_floor_db,
        data_messages=proto.data_messages,
    )
    return machines, enodeb
