"""System configuration tying code, interleaver, constellation and band plan."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import BandPlan
from .convcode import ConvCode, encode
from .errors import ConfigError
from .modem import Interleaver, QamConstellation

__all__ = ["SystemSpec"]


@dataclass(frozen=True)
class SystemSpec:
    """A complete coded-OFDM link configuration."""

    code: ConvCode
    constellation: QamConstellation
    interleaver: Interleaver
    plan: BandPlan = field(default_factory=BandPlan)
    name: str = ""

    def __post_init__(self):
        if self.interleaver.size != self.coded_length:
            raise ConfigError(
                f"interleaver size {self.interleaver.size} != coded length "
                f"{self.coded_length}"
            )
        if self.coded_length % self.code.period:
            raise ConfigError("coded length incompatible with the puncture period")
        rate = self.code.rate
        if (self.coded_length * rate.numerator) % rate.denominator:
            raise ConfigError("coded length does not map to an integer info length")

    @property
    def n_tones(self) -> int:
        return self.plan.n_data

    @property
    def bits_per_symbol(self) -> int:
        return self.constellation.bits_per_symbol

    @property
    def coded_length(self) -> int:
        """L_c: transmitted coded bits per codeword."""
        return self.n_tones * self.bits_per_symbol

    @property
    def n_trellis_steps(self) -> int:
        """Input steps (message plus zero tail) spanned by one codeword."""
        rate = self.code.rate
        return (self.coded_length * rate.numerator) // rate.denominator

    @property
    def n_info(self) -> int:
        """Message bits per codeword; the K-1 tail bits fill the remainder,
        so the terminated codeword occupies exactly L_c coded bits."""
        n = self.n_trellis_steps - (self.code.constraint_length - 1)
        if n < 1:
            raise ConfigError("codeword too short for the tail termination")
        return n

    @property
    def symbol_energy(self) -> float:
        return self.constellation.energy

    def n0_from_ebn0_db(self, ebn0_db: float) -> float:
        """Noise variance per complex tone sample at the given Eb/N0 (dB)."""
        ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)
        rc = float(self.code.rate)
        eb = self.symbol_energy / (rc * self.bits_per_symbol)
        return eb / ebn0

    def random_codeword(self, rng) -> np.ndarray:
        """Tail-terminated encoding of a uniformly random message."""
        rng = np.random.default_rng(rng)
        info = rng.integers(0, 2, size=self.n_info).astype(np.uint8)
        return encode_terminated(self.code, info)

    def zero_codeword(self) -> np.ndarray:
        return np.zeros(self.coded_length, dtype=np.uint8)
