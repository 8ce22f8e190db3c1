"""Named presets: codes, channel parameters, band plan, full system configs.

Everything here is plain data that can be overridden from an experiment
config file; the presets are the configurations the shipped experiment files
and the acceptance suite run against.
"""

from __future__ import annotations

from fractions import Fraction

import yaml

from .channel import BandPlan, SvParams
from .convcode import ConvCode
from .errors import ConfigError
from .modem import Interleaver, QamConstellation
from .system import SystemSpec

__all__ = [
    "code_preset",
    "load_code_config",
    "sv_preset",
    "default_band_plan",
    "mbofdm_system",
    "toy_system",
    "CHANNEL_SET_SEEDS",
]

_MOTHER = ("133", "165", "171")  # octal, constraint length 7

# puncture masks: one 0/1 string per output stream, columns = input steps
_CODE_PRESETS = {
    "mbofdm-r13": {"puncture": ("1", "1", "1"), "repetition": 1},
    # dropping the middle stream recovers the industry-standard K=7 pair
    "mbofdm-r12": {"puncture": ("1", "0", "1"), "repetition": 1},
    "mbofdm-r58": {"puncture": ("11111", "00000", "11010"), "repetition": 1},
    "mbofdm-r34": {"puncture": ("110", "000", "101"), "repetition": 1},
    # low-rate modes: symbol repetition over the rate-1/2 pattern
    "mbofdm-r14": {"puncture": ("1", "0", "1"), "repetition": 2},
    "mbofdm-r18": {"puncture": ("1", "0", "1"), "repetition": 4},
}

_RATE_TO_PRESET = {
    Fraction(1, 3): "mbofdm-r13",
    Fraction(1, 2): "mbofdm-r12",
    Fraction(5, 8): "mbofdm-r58",
    Fraction(3, 4): "mbofdm-r34",
    Fraction(1, 4): "mbofdm-r14",
    Fraction(1, 8): "mbofdm-r18",
}

# fixed-seed named 100-realization channel sets
CHANNEL_SET_SEEDS = {
    "cm1-100-a": 11001,
    "cm1-100-b": 11002,
    "cm1-100-c": 11003,
    "cm1-100-d": 11004,
    "cm1-100-e": 11005,
}


def code_preset(name: str) -> ConvCode:
    if name not in _CODE_PRESETS:
        raise ConfigError(
            f"unknown code preset {name!r}; have {sorted(_CODE_PRESETS)}"
        )
    p = _CODE_PRESETS[name]
    return ConvCode(
        generators=tuple(int(g, 8) for g in _MOTHER),
        constraint_length=7,
        puncture=p["puncture"],
        repetition_factor=p["repetition"],
        name=name,
    )


def code_for_rate(rate: str | Fraction) -> ConvCode:
    frac = Fraction(rate)
    if frac not in _RATE_TO_PRESET:
        raise ConfigError(f"no shipped puncture preset for rate {frac}")
    return code_preset(_RATE_TO_PRESET[frac])


def load_code_config(path) -> ConvCode:
    """Code from a YAML file: octal generator strings plus per-stream masks."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    try:
        return ConvCode(
            generators=tuple(int(str(g), 8) for g in raw["generators"]),
            constraint_length=int(raw["constraint_length"]),
            puncture=tuple(str(m) for m in raw.get("puncture", ())),
            repetition_factor=int(raw.get("repetition_factor", 1)),
            name=str(raw.get("name", "")),
        )
    except KeyError as exc:
        raise ConfigError(f"code config missing field {exc}") from exc


_SV_PRESETS = {
    # short-range line-of-sight UWB parameter set
    "cm1": dict(
        cluster_rate=0.0233,
        ray_rate=2.5,
        cluster_decay=7.1,
        ray_decay=4.3,
        cluster_fade_std_db=3.3941,
        ray_fade_std_db=3.3941,
        shadow_std_db=3.0,
        max_delay_ns=60.0,
    ),
}


def sv_preset(name: str, **overrides) -> SvParams:
    if name not in _SV_PRESETS:
        raise ConfigError(f"unknown channel preset {name!r}; have {sorted(_SV_PRESETS)}")
    params = dict(_SV_PRESETS[name])
    params.update(overrides)
    return SvParams(name=name, **params)


def default_band_plan() -> BandPlan:
    return BandPlan()


def mbofdm_system(rate="1/2", M: int = 4, interleaver: str = "mbofdm",
                  plan: BandPlan | None = None) -> SystemSpec:
    """The 3-band, 300-data-tone system at a given code rate and QAM order.

    ``interleaver`` is "mbofdm" (two-stage block preset), "identity", or a
    path to a permutation file of newline-separated 1-based indices.
    """
    plan = plan or default_band_plan()
    code = code_for_rate(rate)
    const = QamConstellation(M=M, energy=1.0)
    n_bits = plan.n_data * const.bits_per_symbol
    if interleaver == "mbofdm":
        iv = Interleaver.multistage_block(n_bits, n_symbols=plan.n_bands)
    elif interleaver == "identity":
        iv = Interleaver.identity(n_bits)
    else:
        iv = Interleaver.from_file(interleaver)
        if iv.size != n_bits:
            raise ConfigError(
                f"permutation file has {iv.size} entries, need {n_bits}"
            )
    return SystemSpec(
        code=code, constellation=const, interleaver=iv, plan=plan,
        name=f"mbofdm-{rate}-{M}qam",
    )


def toy_system(n_tones: int = 8, M: int = 4) -> SystemSpec:
    """Small single-band system with a K=3 rate-1/2 code, for oracle tests."""
    offsets = tuple(k for k in range(-(n_tones // 2), n_tones // 2 + 1) if k != 0)[
        :n_tones
    ]
    plan = BandPlan(
        n_bands=1,
        dft_size=max(16, 2 * n_tones),
        tone_spacing_hz=4.125e6,
        first_center_hz=3432e6,
        cp_ns=60.6,
        data_offsets=offsets,
    )
    code = ConvCode(generators=(0o5, 0o7), constraint_length=3, name="k3-57")
    const = QamConstellation(M=M, energy=1.0)
    n_bits = plan.n_data * const.bits_per_symbol
    return SystemSpec(
        code=code,
        constellation=const,
        interleaver=Interleaver.identity(n_bits),
        plan=plan,
        name=f"toy-{n_tones}",
    )
