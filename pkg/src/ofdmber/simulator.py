"""Monte Carlo link-level oracle for validating the analytical methods.

Per packet: random message -> encode -> interleave -> Gray map -> one
quasi-static channel pass with additive interference and circular complex
Gaussian noise (variance N0 per tone) -> max-log soft detection -> optional
genie erasure of the most interference-impaired tones -> deinterleave,
depuncture -> Viterbi decode -> count message-bit errors.

Runs are deterministic given (seed, config); the stop rule and batch size are
part of the configuration since they shape the random stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convcode import depuncture, encode_batch, viterbi_decode_batch
from .errors import ConfigError
from .interference import FreqInterference, InterferenceSpec, tones_to_freq
from .modem import soft_detect_batch
from .system import SystemSpec

__all__ = ["StopRule", "SimPoint", "genie_erase", "erased_tone_set", "simulate_point"]


@dataclass(frozen=True)
class StopRule:
    """Stop at min_errors bit errors, or flag the point at max_packets."""

    min_errors: int = 200
    max_packets: int = 100_000
    batch: int = 256

    def __post_init__(self):
        if self.min_errors < 1 or self.max_packets < 1 or self.batch < 1:
            raise ConfigError("stop rule fields must be positive")


@dataclass(frozen=True)
class SimPoint:
    """Empirical result for one grid point."""

    ber: float
    errors: int
    bits: int
    packets: int
    flagged: bool          # stopped by the packet cap short of min_errors
    erased: tuple = ()


def genie_erase(tone_powers, n_erase: int) -> np.ndarray:
    """Indices of the n largest interference powers, ties to the lowest index."""
    p = np.asarray(tone_powers, dtype=np.float64)
    if n_erase < 0 or n_erase > p.size:
        raise ValueError(f"cannot erase {n_erase} of {p.size} tones")
    if n_erase == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(p.size), -p))
    return np.sort(order[:n_erase])


def erased_tone_set(fi: FreqInterference, n_erase: int) -> np.ndarray:
    """Data-tone indices the genie erases (expected powers for faded tones)."""
    if fi.fading == "rayleigh":
        powers = np.einsum(
            "k,ki->i", fi.mean_square_amplitudes, np.abs(fi.leakage) ** 2
        )
    else:
        powers = fi.per_tone_power
    return genie_erase(powers, n_erase)


def simulate_point(
    system: SystemSpec,
    h,
    ebn0_db: float,
    rng,
    *,
    spec: InterferenceSpec | None = None,
    stop: StopRule = StopRule(),
    n_erase: int = 0,
    erase_tones=None,
    uncoded: bool = False,
) -> SimPoint:
    """Empirical BER at one (channel realization, Eb/N0) point.

    ``erase_tones`` overrides the genie's power-ranked choice with an explicit
    data-tone index set (e.g. to puncture tones in an interference-free run).
    """
    rng = np.random.default_rng(rng)
    h = np.asarray(h, dtype=np.complex128)
    if h.size != system.n_tones:
        raise ConfigError(f"channel has {h.size} tones, system expects {system.n_tones}")
    const = system.constellation
    rm = system.bits_per_symbol
    n_tones = system.n_tones

    fi = tones_to_freq(spec, system.plan) if spec is not None else None
    rayleigh = fi is not None and fi.fading == "rayleigh"
    j_fixed = None
    if fi is not None and not rayleigh:
        j_fixed = fi.J
    if erase_tones is not None:
        erased = np.asarray(sorted(int(t) for t in erase_tones), dtype=np.int64)
    elif fi is not None:
        erased = erased_tone_set(fi, n_erase)
    elif n_erase:
        raise ConfigError("n_erase > 0 needs an interference spec or erase_tones")
    else:
        erased = np.zeros(0, dtype=np.int64)

    if uncoded:
        n0 = const.energy / (rm * 10.0 ** (ebn0_db / 10.0))
    else:
        n0 = float(system.n0_from_ebn0_db(ebn0_db))

    errors = 0
    bits = 0
    packets = 0
    n_info = system.coded_length if uncoded else system.n_info
    while errors < stop.min_errors and packets < stop.max_packets:
        n_pkt = min(stop.batch, stop.max_packets - packets)
        info = rng.integers(0, 2, size=(n_pkt, n_info), dtype=np.uint8)
        if uncoded:
            tx_bits = info
        else:
            coded = encode_batch(system.code, info)
            tx_bits = system.interleaver.apply(coded)
        x = const.points[const.codes_from_bits(tx_bits)]  # (n_pkt, n_tones)

        r = h[None, :] * x
        if rayleigh:
            coef = (
                rng.standard_normal((n_pkt, fi.leakage.shape[0]))
                + 1j * rng.standard_normal((n_pkt, fi.leakage.shape[0]))
            ) * np.sqrt(fi.mean_square_amplitudes / 2.0)
            r = r + coef @ fi.leakage
        elif j_fixed is not None:
            r = r + j_fixed[None, :]
        noise = (
            rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape)
        ) * np.sqrt(n0 / 2.0)
        r = r + noise

        llr_sym = soft_detect_batch(const, r, h[None, :], n0)  # (n_pkt, N, R_m)
        if erased.size:
            llr_sym[:, erased, :] = 0.0
        llrs = llr_sym.reshape(n_pkt, -1)

        if uncoded:
            decoded = (llrs < 0).astype(np.uint8)
        else:
            coded_llrs = system.interleaver.invert(llrs)
            mother = depuncture(system.code, coded_llrs, system.n_info)
            decoded = viterbi_decode_batch(system.code, mother)

        errors += int(np.count_nonzero(decoded != info))
        bits += n_pkt * n_info
        packets += n_pkt

    return SimPoint(
        ber=errors / bits if bits else 0.0,
        errors=errors,
        bits=bits,
        packets=packets,
        flagged=errors < stop.min_errors,
        erased=tuple(int(e) for e in erased),
    )
