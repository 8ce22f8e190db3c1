"""Sum-of-tones narrowband interference and its DFT-window leakage.

A tone at frequency f (in tone-spacing units on the equivalent multi-band
grid) impairs the sub-band containing f. Sampling one OFDM symbol and taking
the unnormalized forward DFT spreads an off-bin tone over neighboring bins
with the Dirichlet (periodic sinc) kernel; an on-bin tone hits exactly one
bin with amplitude ``dft_size * alpha``. All power bookkeeping (SIR,
Parseval) uses the unnormalized-DFT convention consistently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import BandPlan
from .errors import ConfigError

__all__ = [
    "ToneInterferer",
    "InterferenceSpec",
    "FreqInterference",
    "tones_to_freq",
    "calibrate_sir",
    "rayleigh_covariance",
    "phase_grid",
]


@dataclass(frozen=True)
class ToneInterferer:
    """One complex-exponential interferer.

    ``frequency`` is in tone-spacing units on the equivalent grid (52.5 sits
    midway between tones 52 and 53 of the first band). For Rayleigh-faded
    tones ``amplitude`` is the root-mean-square value E[alpha^2]^(1/2).
    """

    amplitude: float
    frequency: float
    phase: float = 0.0
    fading: str = "none"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("tone amplitude must be >= 0")
        if self.fading not in ("none", "rayleigh"):
            raise ConfigError(f"unknown fading kind {self.fading!r}")
        object.__setattr__(self, "phase", float(self.phase) % (2 * math.pi))


@dataclass(frozen=True)
class InterferenceSpec:
    """A set of tones plus the DFT geometry they leak through."""

    tones: tuple = ()
    dft_size: int = 128
    target_sir_db: float | None = None
    replicate_bands: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        if self.dft_size < 1:
            raise ConfigError("dft_size must be >= 1")

    @property
    def n_tones(self) -> int:
        return len(self.tones)

    @property
    def fading(self) -> str:
        kinds = {t.fading for t in self.tones}
        if len(kinds) > 1:
            raise ConfigError("mixed faded/non-faded tones in one spec are unsupported")
        return kinds.pop() if kinds else "none"

    def with_phase(self, phase: float, tone_index: int = 0) -> "InterferenceSpec":
        tones = list(self.tones)
        tones[tone_index] = replace(tones[tone_index], phase=phase)
        return replace(self, tones=tuple(tones))

    def scaled(self, factor: float) -> "InterferenceSpec":
        return replace(
            self,
            tones=tuple(replace(t, amplitude=t.amplitude * factor) for t in self.tones),
        )


@dataclass(frozen=True)
class FreqInterference:
    """Frequency-domain interference over the data tones of a band plan."""

    J: np.ndarray               # complex, length n_data
    leakage: np.ndarray         # (n_tones, n_data) unit-amplitude leakage vectors
    mean_square_amplitudes: np.ndarray  # E[alpha_k^2] per tone
    total_power: float          # E over phases/fading of ||J||^2 across all DFT bins
    fading: str = "none"

    @property
    def per_tone_power(self) -> np.ndarray:
        return np.abs(self.J) ** 2

    def rayleigh_covariance(self) -> np.ndarray:
        if self.fading != "rayleigh":
            raise ConfigError("covariance is defined for Rayleigh-faded tones only")
        d = self.leakage
        return (d.T * self.mean_square_amplitudes) @ d.conj()


def _dirichlet(nu, m, n: int) -> np.ndarray:
    """sum_{t=0}^{n-1} exp(j 2 pi (nu - m) t / n), vectorized over m.

    Integer offsets are resolved exactly (n on the hit bin, 0 elsewhere) so
    an on-bin tone leaks onto no other subcarrier.
    """
    x = np.subtract(float(nu), np.asarray(m, dtype=np.float64))
    nearest = np.round(x)
    integral = np.abs(x - nearest) < 1e-9
    out = np.zeros(x.shape, dtype=np.complex128)
    out[integral & (nearest.astype(np.int64) % n == 0)] = float(n)
    off = ~integral
    if np.any(off):
        xo = x[off]
        out[off] = (1.0 - np.exp(2j * np.pi * xo)) / (1.0 - np.exp(2j * np.pi * xo / n))
    return out


def tones_to_freq(spec: InterferenceSpec, plan: BandPlan) -> FreqInterference:
    """DFT-window leakage of each tone onto the plan's data tones.

    Each interferer impairs only the band containing its frequency (leakage
    landing on guard/pilot bins is dropped with them); with
    ``replicate_bands`` the same local frequency impairs every band.
    """
    if spec.dft_size != plan.dft_size:
        raise ConfigError("spec dft_size disagrees with the band plan")
    n = plan.dft_size
    n_data = plan.n_data
    idx = plan.data_tone_global_indices()
    band_of = plan.band_of_data_tone()
    local_bin = idx - band_of * n

    leak_rows = []
    msq = []
    J = np.zeros(n_data, dtype=np.complex128)
    total_power = 0.0
    fading = spec.fading
    for tone in spec.tones:
        f = tone.frequency
        band = int(f // n)
        if not (0 <= band < plan.n_bands) or f < 0:
            raise ConfigError(
                f"tone frequency {f} lies outside the {plan.n_bands}-band grid"
            )
        bands = range(plan.n_bands) if spec.replicate_bands else (band,)
        row = np.zeros(n_data, dtype=np.complex128)
        for b in bands:
            sel = band_of == b
            row[sel] = _dirichlet(f % n, local_bin[sel].astype(np.float64), n)
        leak_rows.append(row)
        msq.append(tone.amplitude**2)
        J += tone.amplitude * np.exp(1j * tone.phase) * row
        # Parseval over all bins of each impaired band: n * sum |i(t)|^2 = n^2 a^2
        total_power += len(list(bands)) * (n * tone.amplitude) ** 2

    leakage = (
        np.asarray(leak_rows)
        if leak_rows
        else np.zeros((0, n_data), dtype=np.complex128)
    )
    return FreqInterference(
        J=J,
        leakage=leakage,
        mean_square_amplitudes=np.asarray(msq, dtype=np.float64),
        total_power=total_power,
        fading=fading,
    )


def calibrate_sir(
    spec: InterferenceSpec,
    plan: BandPlan,
    symbol_energy: float,
    *,
    channel_power: float = 1.0,
) -> InterferenceSpec:
    """Rescale all tone amplitudes to hit ``spec.target_sir_db``.

    SIR = E(||Hx||^2) / E(||J||^2) over the full equivalent grid: the signal
    power is ``n_total * E_s * channel_power`` and the interference power is
    the phase/fading-averaged DFT power over all bins (Parseval), so for a
    single on-bin tone the impaired tone sits 10*log10(n_total) below the
    average SIR.
    """
    if spec.target_sir_db is None:
        raise ConfigError("spec has no target SIR")
    if math.isinf(spec.target_sir_db):
        return spec.scaled(0.0)
    if not spec.tones or all(t.amplitude == 0 for t in spec.tones):
        raise ConfigError("cannot calibrate an all-zero tone set to a finite SIR")
    fi = tones_to_freq(spec, plan)
    signal = plan.n_total * symbol_energy * channel_power
    target = 10.0 ** (spec.target_sir_db / 10.0)
    factor = math.sqrt(signal / (target * fi.total_power))
    return spec.scaled(factor)


def rayleigh_covariance(spec: InterferenceSpec, plan: BandPlan) -> np.ndarray:
    """E(J J^H) over data tones for independently Rayleigh-faded tones."""
    if spec.fading != "rayleigh" or not spec.tones:
        raise ConfigError("rayleigh_covariance needs a non-empty all-Rayleigh spec")
    return tones_to_freq(spec, plan).rayleigh_covariance()


def full_bin_response(spec: InterferenceSpec, plan: BandPlan) -> np.ndarray:
    """Deterministic J over all n_total DFT bins (guards and pilots included)."""
    n = plan.dft_size
    J = np.zeros(plan.n_total, dtype=np.complex128)
    for tone in spec.tones:
        band = int(tone.frequency // n)
        bands = range(plan.n_bands) if spec.replicate_bands else (band,)
        for b in bands:
            bins = np.arange(n, dtype=np.float64)
            J[b * n : (b + 1) * n] += (
                tone.amplitude
                * np.exp(1j * tone.phase)
                * _dirichlet(tone.frequency % n, bins, n)
            )
    return J


def phase_grid(n_phases: int) -> np.ndarray:
    """n uniformly spaced initial phases on [0, 2 pi)."""
    if n_phases < 1:
        raise ValueError("need at least one phase")
    return 2.0 * np.pi * np.arange(n_phases) / n_phases
