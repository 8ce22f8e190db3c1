"""Per-realization BER approximation, ensemble averaging and outage BER.

For one channel/interference pair the BER is approximated by a truncated
union bound over the enumerated error events: every event is slid over all
codeword start positions, each placement's pairwise error probability is
weighted by its information-bit multiplicity, the per-position sums are
capped at 1/2, and the cap-limited sums are averaged over positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .convcode import ErrorVectorSet
from .interference import InterferenceSpec, phase_grid, tones_to_freq
from .placement import PlacementTable, build_placement
from .system import SystemSpec

__all__ = [
    "RealizationBer",
    "OutageResult",
    "q_function",
    "pep_realization",
    "RealizationEvaluator",
    "ber_realization",
    "average_ber_method1",
    "outage_ber",
    "phase_averaged_ber",
]

_Q_CLAMP = 38.0


def q_function(x) -> np.ndarray:
    """Standard normal tail probability, clamped to exact {0, 1} beyond +-38."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(np.clip(x, -_Q_CLAMP, _Q_CLAMP) / math.sqrt(2.0))
    out = np.where(x > _Q_CLAMP, 0.0, out)
    out = np.where(x < -_Q_CLAMP, 1.0, out)
    return out


def pep_realization(h, J, x, z, n0: float) -> float:
    """Pairwise error probability of mistaking z for x on a known channel.

    Computes Q((||H(x-z)||^2 / 2 + Re{J^H H (x-z)}) / sqrt(N0 ||H(x-z)||^2 / 2))
    for the Euclidean-metric decoder that ignores the interference. With J = 0
    this reduces to Q(sqrt(||H(x-z)||^2 / (2 N0))).
    """
    if n0 <= 0:
        raise ValueError("N0 must be positive")
    h = np.asarray(h, dtype=np.complex128)
    d = np.asarray(x, dtype=np.complex128) - np.asarray(z, dtype=np.complex128)
    hd = h * d
    num1 = float(np.sum(np.abs(hd) ** 2))
    if num1 == 0.0:
        raise ValueError("x and z agree on every tone (or differ only on nulls)")
    num2 = 0.0
    if J is not None:
        num2 = float(np.real(np.vdot(np.asarray(J, dtype=np.complex128), hd)))
    return float(q_function((0.5 * num1 + num2) / math.sqrt(0.5 * n0 * num1)))


@dataclass(frozen=True)
class RealizationBer:
    """BER approximation for one (channel, interference) pair."""

    value: float
    channel_id: str = ""
    interference_id: str = ""
    per_start: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 0.5 + 1e-12:
            raise ValueError(f"per-realization BER {self.value} outside [0, 1/2]")

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class OutageResult:
    """Worst in-set BER after removing the worst X% of realizations."""

    outage_ber: float
    percent: float
    in_ids: tuple
    out_ids: tuple


class RealizationEvaluator:
    """Caches the competing-codeword geometry for one transmitted codeword.

    The geometry depends only on (system, events, c); evaluating a channel,
    interference vector or noise grid against it is a vectorized pass.
    """

    def __init__(self, system: SystemSpec, events: ErrorVectorSet, c=None, rng=None):
        self.system = system
        self.events = events
        if c is None:
            c = (
                system.zero_codeword()
                if system.constellation.M == 4
                else system.random_codeword(rng)
            )
        self.codeword = np.asarray(c, dtype=np.uint8)
        self.table: PlacementTable = build_placement(system, events, self.codeword)

    def per_start_sums(self, h, J, n0, erased=()):
        """Union-bound sums per start position (before the 1/2 cap)."""
        num1, num2 = self.table.quad_terms(h, J, erased)
        sums = np.zeros(self.system.coded_length)
        pep = self._pep(num1, num2, n0)
        np.add.at(sums, self.table.start - 1, self.table.multiplicity * pep)
        return sums

    @staticmethod
    def _pep(num1, num2, n0):
        safe = num1 > 0.0
        arg = np.where(
            safe,
            (0.5 * num1 + num2) / np.sqrt(0.5 * n0 * np.where(safe, num1, 1.0)),
            0.0,
        )
        pep = q_function(arg)
        # indistinguishable hypotheses (all differing tones erased or nulled)
        return np.where(safe, pep, 0.5)

    def ber(self, h, n0: float, J=None, erased=(), keep_per_start=False,
            channel_id="", interference_id="") -> RealizationBer:
        sums = self.per_start_sums(h, J, n0, erased)
        value = float(np.minimum(0.5, sums).mean())
        return RealizationBer(
            value=value,
            channel_id=channel_id,
            interference_id=interference_id,
            per_start=sums if keep_per_start else None,
        )

    def ber_curve(self, h, n0_grid, J=None, erased=()) -> np.ndarray:
        """BER for each noise level; the channel geometry is reduced once."""
        num1, num2 = self.table.quad_terms(h, J, erased)
        out = np.empty(len(n0_grid))
        L_c = self.system.coded_length
        for i, n0 in enumerate(n0_grid):
            pep = self._pep(num1, num2, float(n0))
            sums = np.zeros(L_c)
            np.add.at(sums, self.table.start - 1, self.table.multiplicity * pep)
            out[i] = np.minimum(0.5, sums).mean()
        return out

    def ber_many_channels(self, h_matrix, n0: float) -> np.ndarray:
        """Interference-free BER for a stack of channel realizations.

        Reuses the same transmitted codeword for every realization (exact for
        4-QAM, where any codeword gives the identical result).
        """
        num1 = self.table.quad_terms_many(h_matrix)  # (n_real, n_terms)
        arg = np.zeros_like(num1)
        np.sqrt(num1 / (2.0 * n0), out=arg, where=num1 > 0)
        pep = np.where(num1 > 0, q_function(arg), 0.5)
        weighted = self.table.multiplicity[None, :] * pep
        L_c = self.system.coded_length
        sums = np.zeros((num1.shape[0], L_c))
        np.add.at(sums.T, self.table.start - 1, weighted.T)
        return np.minimum(0.5, sums).mean(axis=1)


def ber_realization(
    h,
    J,
    system: SystemSpec,
    events: ErrorVectorSet,
    n0: float,
    *,
    c=None,
    rng=None,
    draws: int = 1,
    erased=(),
    channel_id: str = "",
    interference_id: str = "",
) -> RealizationBer:
    """One-shot per-realization BER; draws a random codeword when c is None."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if c is not None and draws > 1:
        raise ValueError("multiple draws need c=None")
    rng = np.random.default_rng(rng)
    values = []
    for _ in range(draws):
        ev = RealizationEvaluator(system, events, c=c, rng=rng)
        values.append(
            ev.ber(h, n0, J=J, erased=erased).value
        )
    return RealizationBer(
        value=float(np.mean(values)),
        channel_id=channel_id,
        interference_id=interference_id,
    )


def average_ber_method1(ber_list) -> float:
    """Arithmetic mean over realizations."""
    vals = [float(b) for b in ber_list]
    if not vals:
        raise ValueError("empty BER list")
    return float(np.mean(vals))


def outage_ber(ber_list, percent: float) -> OutageResult:
    """Drop the worst ceil(X% * N) realizations; return the worst remaining."""
    items = list(ber_list)
    if not items:
        raise ValueError("empty BER list")
    if not 0.0 <= percent < 100.0:
        raise ValueError("outage percent must be in [0, 100)")
    vals = np.array([float(b) for b in items])
    ids = [
        getattr(b, "channel_id", "") or str(k) for k, b in enumerate(items)
    ]
    n_out = math.ceil(percent / 100.0 * len(items))
    if n_out >= len(items):
        raise ValueError("all realizations would be in outage")
    order = np.argsort(-vals, kind="stable")
    out_idx, in_idx = order[:n_out], order[n_out:]
    return OutageResult(
        outage_ber=float(vals[in_idx].max()),
        percent=percent,
        in_ids=tuple(ids[k] for k in sorted(in_idx)),
        out_ids=tuple(ids[k] for k in sorted(out_idx)),
    )


def phase_averaged_ber(ber_fn, n_phases: int = 32) -> float:
    """Mean of ``ber_fn(phase)`` over uniformly spaced initial phases."""
    phases = phase_grid(n_phases)
    return float(np.mean([float(ber_fn(p)) for p in phases]))
