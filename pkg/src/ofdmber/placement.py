"""Competing-codeword geometry shared by both analysis methods.

For a transmitted codeword c, every (error vector, start position) pair
defines a competing codeword differing from c in a handful of coded bits;
after interleaving and QAM mapping those flips touch a small set of tones.
This module enumerates all pairs once and stores, per pair, the affected
tone indices and complex symbol differences (x - z). Everything downstream
(per-realization PEP sums, correlation-based average PEP) is a cheap
vectorized pass over this table.

Start positions cycle through the error-vector alignment groups (exact
puncture-phase match when a group exists for the position's phase); events
that would run past the end of the codeword are skipped, not wrapped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convcode import ErrorVectorSet
from .system import SystemSpec

__all__ = ["PlacementTable", "build_placement"]


@dataclass(frozen=True)
class PlacementTable:
    """Flattened (start, event) pairs with their symbol-difference footprints.

    Arrays indexed by term t (one term = one competing codeword):
      start[t], event[t], multiplicity[t] (info errors a of the event),
      entries [offsets[t] : offsets[t+1]) in ``tone_idx``/``delta`` hold the
      affected tones and x - z values.
    """

    start: np.ndarray
    event: np.ndarray
    multiplicity: np.ndarray
    offsets: np.ndarray
    tone_idx: np.ndarray
    delta: np.ndarray
    coded_length: int
    n_tones: int

    @property
    def n_terms(self) -> int:
        return self.start.size

    def eta(self) -> np.ndarray:
        """Number of affected tones per term."""
        return np.diff(self.offsets)

    def term_slices(self):
        for t in range(self.n_terms):
            yield slice(self.offsets[t], self.offsets[t + 1])

    # --- vectorized per-(H, J) reductions used by the per-realization method ---

    def quad_terms(self, h, J=None, erased=()):
        """Per-term ||H (x - z)||^2 and Re{J^H H (x - z)} with erased tones removed.

        Erasing a tone deletes its contribution from both sums (extra
        puncturing), matching a receiver that zeroes the erased LLRs.
        """
        h_eff = np.asarray(h, dtype=np.complex128).copy()
        if len(erased):
            h_eff[np.asarray(erased, dtype=np.int64)] = 0.0
        habs2 = np.abs(h_eff) ** 2
        e_num1 = habs2[self.tone_idx] * np.abs(self.delta) ** 2
        num1 = np.add.reduceat(e_num1, self.offsets[:-1])
        if J is None:
            return num1, np.zeros_like(num1)
        j_eff = np.asarray(J, dtype=np.complex128)
        w = np.conj(j_eff) * h_eff
        e_num2 = (w[self.tone_idx] * self.delta).real
        num2 = np.add.reduceat(e_num2, self.offsets[:-1])
        return num1, num2

    def quad_terms_many(self, h_matrix):
        """||H (x - z)||^2 per (realization, term) for a stack of channels, J = 0."""
        habs2 = np.abs(np.asarray(h_matrix, dtype=np.complex128)) ** 2
        w2 = np.zeros((habs2.shape[0], self.n_tones))
        # accumulate |delta|^2 per tone per term would be ragged; use segment sums
        vals = habs2[:, self.tone_idx] * (np.abs(self.delta) ** 2)[None, :]
        return np.add.reduceat(vals, self.offsets[:-1], axis=1)


def build_placement(
    system: SystemSpec, events: ErrorVectorSet, c: np.ndarray
) -> PlacementTable:
    """Enumerate all (start, event) pairs for transmitted codeword ``c``."""
    L_c = system.coded_length
    rm = system.bits_per_symbol
    const = system.constellation
    iv = system.interleaver
    c = np.asarray(c, dtype=np.uint8)
    if c.size != L_c:
        raise ValueError(f"codeword length {c.size} != L_c = {L_c}")

    c_pi = iv.apply(c)
    sym_codes = const.codes_from_bits(c_pi)  # (n_tones,)
    x = const.points[sym_codes]
    # coded position p -> (tone, bit-within-symbol weight for the code integer)
    pos_tone = iv.permutation // rm
    pos_bitw = 1 << (rm - 1 - (iv.permutation % rm))

    groups = events.variant_groups()
    n_groups = len(groups)
    if n_groups == 0:
        return PlacementTable(
            start=np.zeros(0, dtype=np.int64),
            event=np.zeros(0, dtype=np.int64),
            multiplicity=np.zeros(0, dtype=np.float64),
            offsets=np.zeros(1, dtype=np.int64),
            tone_idx=np.zeros(0, dtype=np.int64),
            delta=np.zeros(0, dtype=np.complex128),
            coded_length=L_c,
            n_tones=system.n_tones,
        )

    ev_list = list(events)
    ev_index = {id(ev): k for k, ev in enumerate(ev_list)}

    starts_all, events_all, mult_all = [], [], []
    tone_chunks, delta_chunks, counts_all = [], [], []

    for g, group in enumerate(groups):
        # 1-based starts i with (i-1) mod n_groups == g (cyclic group selection)
        for ev in group:
            k = ev_index[id(ev)]
            one_off = np.flatnonzero(np.asarray(ev.bits, dtype=np.uint8))
            starts0 = np.arange(g, L_c - ev.length + 1, n_groups, dtype=np.int64)
            if starts0.size == 0:
                continue
            # flipped coded positions per start: (n_starts, n_flips)
            pos = starts0[:, None] + one_off[None, :]
            tones = pos_tone[pos]
            bitw = pos_bitw[pos]
            n_starts, n_flips = pos.shape
            # combine flips hitting the same tone: sort by tone within each row
            order = np.argsort(tones, axis=1, kind="stable")
            rows = np.arange(n_starts)[:, None]
            tones_s = tones[rows, order]
            bitw_s = bitw[rows, order]
            newseg = np.ones_like(tones_s, dtype=bool)
            newseg[:, 1:] = tones_s[:, 1:] != tones_s[:, :-1]
            flat_new = newseg.ravel()
            seg_ids = np.cumsum(flat_new) - 1
            masks = np.bincount(seg_ids, weights=bitw_s.ravel()).astype(np.int64)
            seg_tones = tones_s.ravel()[flat_new]
            seg_row = np.repeat(np.arange(n_starts), n_flips)[flat_new]
            z_codes = sym_codes[seg_tones] ^ masks
            deltas = x[seg_tones] - const.points[z_codes]
            counts = np.bincount(seg_row, minlength=n_starts)

            starts_all.append(starts0 + 1)
            events_all.append(np.full(n_starts, k, dtype=np.int64))
            mult_all.append(np.full(n_starts, float(ev.info_errors)))
            counts_all.append(counts)
            tone_chunks.append(seg_tones)
            delta_chunks.append(deltas)

    start = np.concatenate(starts_all)
    event = np.concatenate(events_all)
    mult = np.concatenate(mult_all)
    counts = np.concatenate(counts_all)
    offsets = np.zeros(start.size + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return PlacementTable(
        start=start,
        event=event,
        multiplicity=mult,
        offsets=offsets,
        tone_idx=np.concatenate(tone_chunks),
        delta=np.concatenate(delta_chunks),
        coded_length=L_c,
        n_tones=system.n_tones,
    )
