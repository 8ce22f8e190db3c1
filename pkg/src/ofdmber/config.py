"""Experiment configuration: one declarative YAML file per experiment."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .channel import BandPlan
from .errors import ConfigError
from .interference import InterferenceSpec, ToneInterferer
from .presets import mbofdm_system, toy_system
from .system import SystemSpec

__all__ = ["ExperimentConfig", "load_experiment"]


@dataclass
class ExperimentConfig:
    name: str
    system: SystemSpec
    method: str                       # "1", "2", or "sim"
    ebn0_db: list
    channel_file: str | None = None
    channel_count: int = 0
    channel_seed: int = 0
    channel_model: str = "cm1"
    correlation_file: str | None = None
    correlation_count: int = 0
    correlation_seed: int = 0
    interference: dict | None = None  # raw block; specs built per sweep point
    positions: list = field(default_factory=list)
    sir_db: list = field(default_factory=list)
    phases: int = 1
    erasures: list = field(default_factory=lambda: [0])
    outage_percent: float | None = None
    shadow_std_db: float = 0.0
    codeword_seed: int = 1
    codeword_draws: int = 1
    sim_min_errors: int = 200
    sim_max_packets: int = 100_000
    sim_batch: int = 256
    output: str = "results.csv"
    seed: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.method not in ("1", "2", "sim"):
            raise ConfigError(f"method must be 1, 2 or sim, not {self.method!r}")
        sources = (self.channel_file is not None) + (self.channel_count > 0)
        if self.method in ("1", "sim") and sources != 1:
            raise ConfigError("exactly one channel source (file or generate) required")
        if self.method == "2":
            if not (self.correlation_file or self.correlation_count > 0):
                raise ConfigError(
                    "method 2 requires a correlation matrix source "
                    "(correlation.file or correlation.count)"
                )
        if not self.ebn0_db:
            raise ConfigError("empty Eb/N0 sweep axis")
        if self.interference is not None and not self.positions:
            raise ConfigError("interference block without a position axis")
        if self.phases < 1:
            raise ConfigError("phases must be >= 1")
        return self

    # --- interference sweeps ---

    def has_interference(self) -> bool:
        return self.interference is not None

    def tone_spec(self, position: float, sir_db: float, phase: float) -> InterferenceSpec:
        raw = self.interference or {}
        fading = raw.get("fading", "none")
        extra = []
        for t in raw.get("extra_tones", []):
            extra.append(
                ToneInterferer(
                    amplitude=float(t.get("amplitude", 1.0)),
                    frequency=float(t["position"]),
                    phase=float(t.get("phase", 0.0)),
                    fading=fading,
                )
            )
        tones = [
            ToneInterferer(amplitude=1.0, frequency=position, phase=phase, fading=fading)
        ] + extra
        return InterferenceSpec(
            tones=tuple(tones),
            dft_size=self.system.plan.dft_size,
            target_sir_db=sir_db,
            replicate_bands=bool(raw.get("replicate_bands", False)),
        )


def load_experiment(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: not a mapping")
    try:
        return _from_mapping(raw, os.path.dirname(os.path.abspath(path)))
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc}") from exc


def _from_mapping(raw: dict, base: str) -> ExperimentConfig:
    sys_raw = raw.get("system", {})
    preset = sys_raw.get("preset", "mbofdm")
    if preset == "toy":
        system = toy_system(
            n_tones=int(sys_raw.get("n_tones", 8)), M=int(sys_raw.get("M", 4))
        )
    else:
        system = mbofdm_system(
            rate=str(sys_raw.get("rate", "1/2")),
            M=int(sys_raw.get("M", 4)),
            interleaver=sys_raw.get("interleaver", "mbofdm"),
        )

    chan = raw.get("channel", {})
    corr = raw.get("correlation", {})
    sweep = raw.get("sweep", {})
    sim = raw.get("sim", {})
    intf = raw.get("interference")

    def _resolve(p):
        if p is None:
            return None
        p = str(p)
        return p if os.path.isabs(p) else os.path.join(base, p)

    cfg = ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        system=system,
        method=str(raw.get("method", "1")),
        ebn0_db=[float(x) for x in sweep.get("ebn0_db", [])],
        channel_file=_resolve(chan.get("file")),
        channel_count=int(chan.get("count", 0)),
        channel_seed=int(chan.get("seed", 0)),
        channel_model=str(chan.get("model", "cm1")),
        correlation_file=_resolve(corr.get("file")),
        correlation_count=int(corr.get("count", 0)),
        correlation_seed=int(corr.get("seed", 0)),
        interference=intf,
        positions=[float(x) for x in sweep.get("position", [])]
        or ([float(intf["position"])] if intf and "position" in intf else []),
        sir_db=[float(x) for x in sweep.get("sir_db", [])]
        or ([float(intf["sir_db"])] if intf and "sir_db" in intf else []),
        phases=int(raw.get("phases", intf.get("phases", 1) if intf else 1)),
        erasures=[int(x) for x in sweep.get("erasures", [0])],
        outage_percent=(
            None if raw.get("outage_percent") is None
            else float(raw["outage_percent"])
        ),
        shadow_std_db=float(raw.get("shadow_std_db", 0.0)),
        codeword_seed=int(raw.get("codeword_seed", 1)),
        codeword_draws=int(raw.get("codeword_draws", 1)),
        sim_min_errors=int(sim.get("min_errors", 200)),
        sim_max_packets=int(sim.get("max_packets", 100_000)),
        sim_batch=int(sim.get("batch", 256)),
        output=_resolve(raw.get("output", "results.csv")),
        seed=int(raw.get("seed", 1)),
    )
    return cfg.validate()
