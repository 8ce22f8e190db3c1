"""Bit interleaving and Gray-labeled M-QAM mapping with max-log soft output.

Labeling convention: the first bit of each group selects the I axis, Gray
coded per axis as 00, 01, 11, 10 from the most positive level downwards. For
4-QAM that puts bits 00 on the (+1+j)/sqrt(2) corner (at unit symbol energy).
LLRs are ``(min_{bit=1} d^2 - min_{bit=0} d^2) / N0``: positive favors bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError

__all__ = [
    "Interleaver",
    "QamConstellation",
    "interleave",
    "deinterleave",
    "map_qam",
    "soft_detect",
    "soft_detect_batch",
]


@dataclass(frozen=True)
class Interleaver:
    """A bijection on bit positions, stored 0-based."""

    permutation: np.ndarray  # position p of the input goes to output index permutation[p]

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.ndim != 1:
            raise ConfigError("permutation must be 1-D")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ConfigError("permutation is not a bijection on 0..n-1")
        object.__setattr__(self, "permutation", perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        object.__setattr__(self, "_inverse", inv)

    @property
    def size(self) -> int:
        return self.permutation.size

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != self.size:
            raise ValueError(f"expected length {self.size}, got {x.shape[-1]}")
        out = np.empty_like(x)
        out[..., self.permutation] = x
        return out

    def invert(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != self.size:
            raise ValueError(f"expected length {self.size}, got {x.shape[-1]}")
        out = np.empty_like(x)
        out[..., self._inverse] = x
        return out

    # --- constructors ---

    @staticmethod
    def identity(n: int) -> "Interleaver":
        return Interleaver(np.arange(n))

    @staticmethod
    def block(rows: int, cols: int) -> "Interleaver":
        """Write row-by-row, read column-by-column."""
        n = rows * cols
        order = np.arange(n).reshape(rows, cols).T.ravel()
        # order[k] = input position read k-th; invert to per-position targets
        perm = np.empty(n, dtype=np.int64)
        perm[order] = np.arange(n)
        return Interleaver(perm)

    @staticmethod
    def multistage_block(n_bits: int, n_symbols: int, tone_rows: int = 10) -> "Interleaver":
        """Two-stage block interleaver spanning the whole codeword.

        Stage 1 spreads adjacent coded bits round-robin across the
        ``n_symbols`` OFDM symbols; stage 2 block-interleaves each symbol's
        bits with ``tone_rows`` rows (write row-wise, read column-wise).
        """
        if n_bits % n_symbols:
            raise ConfigError("n_bits must divide evenly across symbols")
        per_sym = n_bits // n_symbols
        if per_sym % tone_rows:
            raise ConfigError("bits per symbol must be a multiple of tone_rows")
        s1 = Interleaver.block(per_sym, n_symbols)  # round-robin across symbols
        cols = per_sym // tone_rows
        stage2 = Interleaver.block(tone_rows, cols).permutation
        perm2 = np.concatenate(
            [stage2 + k * per_sym for k in range(n_symbols)]
        )
        return Interleaver(perm2[s1.permutation])

    @staticmethod
    def from_file(path) -> "Interleaver":
        """Load a permutation file of newline-separated 1-based indices."""
        vals = np.loadtxt(path, dtype=np.int64, ndmin=1)
        return Interleaver(vals - 1)

    def to_file(self, path) -> None:
        np.savetxt(path, self.permutation + 1, fmt="%d")


def interleave(iv: Interleaver, bits) -> np.ndarray:
    return iv.apply(bits)


def deinterleave(iv: Interleaver, bits) -> np.ndarray:
    return iv.invert(bits)


@lru_cache(maxsize=8)
def _gray_axis_levels(bits_per_axis: int):
    """Axis levels indexed by the Gray code of the axis bits (0 -> most positive)."""
    n = 1 << bits_per_axis
    i = np.arange(n)
    gray = i ^ (i >> 1)
    levels = np.empty(n)
    levels[gray] = n - 1 - 2 * i  # code order 00,01,11,10 -> +3,+1,-1,-3
    return levels


@dataclass(frozen=True)
class QamConstellation:
    """Gray-labeled square M-QAM normalized to average symbol energy E_s."""

    M: int
    energy: float = 1.0

    def __post_init__(self):
        if self.M not in (4, 16):
            raise ConfigError("only 4-QAM and 16-QAM are supported")
        if self.energy <= 0:
            raise ConfigError("symbol energy must be positive")
        rm = self.bits_per_symbol
        half = rm // 2
        lev = _gray_axis_levels(half)
        codes = np.arange(self.M)
        i_lev = lev[codes >> half]
        q_lev = lev[codes & ((1 << half) - 1)]
        pts = i_lev + 1j * q_lev
        pts = pts * np.sqrt(self.energy / np.mean(np.abs(pts) ** 2))
        object.__setattr__(self, "points", pts)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.M))

    def codes_from_bits(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        rm = self.bits_per_symbol
        if bits.shape[-1] % rm:
            raise ValueError(f"bit count not divisible by {rm}")
        groups = bits.reshape(*bits.shape[:-1], -1, rm)
        weights = 1 << np.arange(rm - 1, -1, -1)
        return groups @ weights

    def bits_from_codes(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        rm = self.bits_per_symbol
        shifts = np.arange(rm - 1, -1, -1)
        bits = (codes[..., None] >> shifts) & 1
        return bits.reshape(*codes.shape[:-1], -1).astype(np.uint8)

    def map_bits(self, bits) -> np.ndarray:
        return self.points[self.codes_from_bits(bits)]

    def hard_demap(self, symbols) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=np.complex128)
        d2 = np.abs(symbols[..., None] - self.points) ** 2
        return self.bits_from_codes(np.argmin(d2, axis=-1))

    def bit_sets(self):
        """For each bit position, the constellation codes where that bit is 0/1."""
        rm = self.bits_per_symbol
        codes = np.arange(self.M)
        zero = [np.flatnonzero(((codes >> (rm - 1 - b)) & 1) == 0) for b in range(rm)]
        one = [np.flatnonzero(((codes >> (rm - 1 - b)) & 1) == 1) for b in range(rm)]
        return zero, one


def map_qam(c: QamConstellation, bits) -> np.ndarray:
    """Gray-map bit groups onto constellation symbols."""
    return c.map_bits(bits)


def soft_detect(c: QamConstellation, r: complex, h: complex, n0: float):
    """Exact max-log bit LLRs for one received symbol with known gain."""
    return soft_detect_batch(
        c, np.asarray([r], dtype=np.complex128), np.asarray([h], dtype=np.complex128), n0
    )[0]


def soft_detect_batch(c: QamConstellation, r, h, n0: float) -> np.ndarray:
    """Max-log LLRs; ``r`` and ``h`` broadcast together, output (..., R_m).

    Positive LLR favors bit 0; the sign pattern of the LLRs equals the hard
    decision of the nearest constellation point.
    """
    if n0 <= 0:
        raise ValueError("N0 must be positive")
    r = np.asarray(r, dtype=np.complex128)
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape)
    d2 = np.abs(r[..., None] - h[..., None] * c.points) ** 2  # (..., M)
    zero, one = c.bit_sets()
    rm = c.bits_per_symbol
    llr = np.empty(r.shape + (rm,))
    for b in range(rm):
        llr[..., b] = (d2[..., one[b]].min(axis=-1) - d2[..., zero[b]].min(axis=-1)) / n0
    return llr
