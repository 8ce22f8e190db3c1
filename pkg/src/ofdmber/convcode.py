"""Punctured convolutional codes: encoding, error-event enumeration, decoding.

Conventions
-----------
Generator polynomials are given in octal. The most significant bit of a
generator taps the current input bit, the least significant the oldest bit in
the window, so ``0o133`` on a constraint-length-7 code is the industry-standard
``1 + D^2 + D^3 + D^5 + D^6`` connection.

The puncture pattern is a per-stream periodic 0/1 mask over input steps:
``puncture[j][p]`` tells whether output stream ``j`` is kept at input phase
``p``. Codewords are tail-terminated; the ``K-1`` zero tail bits are fed
through the encoder but their outputs are not part of the returned codeword,
so a length-``k`` input maps to exactly ``k / R_c`` coded bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigError, EnumerationCapError

__all__ = [
    "ConvCode",
    "ErrorVector",
    "ErrorVectorSet",
    "encode",
    "enumerate_error_vectors",
    "build_error_codeword",
    "viterbi_decode",
    "viterbi_decode_batch",
]


def _as_bits(x) -> np.ndarray:
    b = np.asarray(x, dtype=np.uint8).ravel()
    if b.size and b.max() > 1:
        raise ValueError("bit sequence may contain only 0/1")
    return b


@dataclass(frozen=True)
class ConvCode:
    """A feed-forward convolutional code with optional puncturing/repetition.

    Parameters
    ----------
    generators : tuple of int
        Octal-specified polynomials, one per output stream (before repetition).
    constraint_length : int
        K; each polynomial has degree < K.
    puncture : tuple of str
        One 0/1 string per output stream, all of equal period length.
        Defaults to no puncturing.
    repetition_factor : int
        1, 2 or 4. Repetition is realized by repeating the generator
        polynomials (and their puncture rows), halving/quartering the rate.
    """

    generators: tuple
    constraint_length: int
    puncture: tuple = ()
    repetition_factor: int = 1
    name: str = ""

    def __post_init__(self):
        gens = tuple(int(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if len(gens) < 2:
            raise ConfigError("need at least 2 generator polynomials")
        K = self.constraint_length
        if K < 2:
            raise ConfigError("constraint length must be >= 2")
        for g in gens:
            if g <= 0 or g >= (1 << K):
                raise ConfigError(f"generator {g:o} (octal) has degree >= K={K}")
        if self.repetition_factor not in (1, 2, 4):
            raise ConfigError("repetition_factor must be 1, 2 or 4")
        punct = self.puncture or tuple("1" for _ in gens)
        punct = tuple(str(p) for p in punct)
        if len(punct) != len(gens):
            raise ConfigError("need one puncture mask per output stream")
        period = len(punct[0])
        if period == 0 or any(len(p) != period for p in punct):
            raise ConfigError("puncture masks must share a nonzero period")
        if any(c not in "01" for p in punct for c in p):
            raise ConfigError("puncture masks must be 0/1 strings")
        object.__setattr__(self, "puncture", punct)
        if self.kept_per_period == 0:
            raise ConfigError("puncture pattern keeps no bits per period")

    # --- derived structure (repetition expanded) ---

    @property
    def streams(self) -> tuple:
        """Generators with repetition expanded."""
        return self.generators * self.repetition_factor

    @property
    def n_streams(self) -> int:
        return len(self.streams)

    @property
    def period(self) -> int:
        """Puncture period in input steps."""
        return len(self.puncture[0])

    @property
    def keep_mask(self) -> np.ndarray:
        """(period, n_streams) boolean keep mask, repetition expanded."""
        base = np.array(
            [[c == "1" for c in p] for p in self.puncture], dtype=bool
        ).T  # (period, n_base_streams)
        return np.tile(base, (1, self.repetition_factor))

    @property
    def kept_per_period(self) -> int:
        base = sum(p.count("1") for p in self.puncture)
        return base * self.repetition_factor

    @property
    def rate(self) -> Fraction:
        """Effective code rate R_c."""
        return Fraction(self.period, self.kept_per_period)

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    def coded_length(self, n_info: int) -> int:
        if n_info % self.period:
            raise ConfigError(
                f"input length {n_info} is not a multiple of the puncture period "
                f"{self.period}"
            )
        return (n_info // self.period) * self.kept_per_period


@lru_cache(maxsize=32)
def _trellis(streams: tuple, K: int):
    """Transition tables: next_state[s,u] and out_bits[s,u,j]."""
    n_states = 1 << (K - 1)
    n_out = len(streams)
    nxt = np.zeros((n_states, 2), dtype=np.int64)
    out = np.zeros((n_states, 2, n_out), dtype=np.uint8)
    for s in range(n_states):
        for u in (0, 1):
            full = (u << (K - 1)) | s
            nxt[s, u] = full >> 1
            for j, g in enumerate(streams):
                out[s, u, j] = bin(full & g).count("1") & 1
    return nxt, out


def trellis_tables(code: ConvCode):
    return _trellis(code.streams, code.constraint_length)


def encode(code: ConvCode, info_bits) -> np.ndarray:
    """Encode and puncture; returns exactly ``len(info_bits)/R_c`` bits.

    The encoder starts in the all-zero state and is flushed back to it with
    K-1 zero tail bits whose outputs are dropped from the returned codeword.
    """
    u = _as_bits(info_bits)
    if u.size == 0:
        raise ValueError("empty input")
    return encode_batch(code, u[None, :])[0]


def encode_terminated(code: ConvCode, info_bits) -> np.ndarray:
    """Encode with the K-1 zero tail bits' outputs kept in the codeword.

    The transmitted-codeword form: a length-k message yields
    ``(k + K - 1) / R_c`` coded bits and the decoder ends in state zero with
    every trellis step observed.
    """
    u = _as_bits(info_bits)
    tail = np.zeros(code.constraint_length - 1, dtype=np.uint8)
    return encode_batch(code, np.concatenate([u, tail])[None, :])[0]


def encode_terminated_batch(code: ConvCode, info_bits) -> np.ndarray:
    u = np.asarray(info_bits, dtype=np.uint8)
    tail = np.zeros((u.shape[0], code.constraint_length - 1), dtype=np.uint8)
    return encode_batch(code, np.concatenate([u, tail], axis=1))


def encode_batch(code: ConvCode, info_bits) -> np.ndarray:
    """Encode a (batch, k) bit matrix; same contract as :func:`encode` per row."""
    u = np.asarray(info_bits, dtype=np.uint8)
    if u.ndim != 2:
        raise ValueError("expected a 2-D bit matrix")
    n = u.shape[1]
    n_coded = code.coded_length(n)
    K = code.constraint_length
    keep = code.keep_mask  # (period, n_streams)
    streams = code.streams

    # stream j output = XOR of the tapped input lags
    padded = np.concatenate(
        [np.zeros((u.shape[0], K - 1), dtype=np.uint8), u], axis=1
    )
    mother = np.zeros((u.shape[0], n, len(streams)), dtype=np.uint8)
    for j, g in enumerate(streams):
        acc = np.zeros((u.shape[0], n), dtype=np.uint8)
        for lag in range(K):
            if (g >> (K - 1 - lag)) & 1:
                acc ^= padded[:, K - 1 - lag : K - 1 - lag + n]
        mother[:, :, j] = acc
    phase = np.arange(n) % code.period
    coded = mother[:, keep[phase]]
    assert coded.shape[1] == n_coded
    return coded.astype(np.uint8)


@dataclass(frozen=True)
class ErrorVector:
    """One simple error event of the punctured code.

    ``bits`` is the punctured code output over the event span (first and last
    bit nonzero), ``info_errors`` the number of information-bit errors on the
    path, ``out_phase`` the kept-bit phase the event starts on and
    ``input_phase`` the input-step phase it was enumerated at.
    """

    bits: tuple
    info_errors: int
    input_phase: int = 0
    out_phase: int = 0

    def __post_init__(self):
        if not self.bits or self.bits[0] != 1 or self.bits[-1] != 1:
            raise ValueError("event bits must start and end with 1")
        if self.info_errors < 1:
            raise ValueError("a simple event flips at least one info bit")

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def weight(self) -> int:
        return int(sum(self.bits))


@dataclass(frozen=True)
class ErrorVectorSet:
    """All simple error events with punctured output weight <= w_max."""

    vectors: tuple
    w_max: int
    code_name: str = ""

    @property
    def L(self) -> int:
        return len(self.vectors)

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    @property
    def max_length(self) -> int:
        return max((ev.length for ev in self.vectors), default=0)

    @property
    def min_weight(self) -> int:
        return min((ev.weight for ev in self.vectors), default=0)

    def variant_groups(self):
        """Vectors grouped by starting alignment, ordered by out_phase.

        Start positions cycle through these groups; with a single-phase
        puncture pattern there is one group used at every position.
        """
        phases = sorted({ev.out_phase for ev in self.vectors})
        return [
            tuple(ev for ev in self.vectors if ev.out_phase == p) for p in phases
        ]


def _min_return_weight(nxt, out, keep, period):
    """Lower bound on remaining kept weight to reach state 0 from (state, phase)."""
    n_states = nxt.shape[0]
    INF = 1 << 30
    # step_w[s, u, p]: kept output weight of the (s, u) branch at input phase p
    step_w = np.einsum("suj,pj->sup", out.astype(np.int64), keep.astype(np.int64))
    mr = np.full((n_states, period), INF, dtype=np.int64)
    mr[0, :] = 0
    for _ in range(n_states * period + 1):
        changed = False
        for s in range(1, n_states):
            for p in range(period):
                for u in (0, 1):
                    cand = step_w[s, u, p] + mr[nxt[s, u], (p + 1) % period]
                    if cand < mr[s, p]:
                        mr[s, p] = cand
                        changed = True
        if not changed:
            break
    return mr


def enumerate_error_vectors(
    code: ConvCode,
    w_max: int,
    *,
    max_event_steps: int = 120,
    weight_on: str = "output",
) -> ErrorVectorSet:
    """Enumerate all simple error events with kept-output weight <= w_max.

    The trellis is searched depth-first from the single departure out of the
    all-zero state until the first return to it, once per input phase of the
    puncture pattern, pruning with a per-(state, phase) lower bound on the
    remaining weight. ``weight_on="input"`` thresholds the information-bit
    error count instead (for comparison runs).

    Raises
    ------
    EnumerationCapError
        If any surviving path exceeds ``max_event_steps`` trellis steps,
        which would mean the returned set is incomplete.
    """
    if w_max < 1:
        raise ValueError("w_max must be >= 1")
    if weight_on not in ("output", "input"):
        raise ConfigError(f"unknown weight_on={weight_on!r}")
    nxt, out = trellis_tables(code)
    period = code.period
    keep = code.keep_mask
    kept_counts = keep.sum(axis=1)  # kept bits per input phase
    by_output = weight_on == "output"
    mr = (
        _min_return_weight(nxt, out, keep, period)
        if by_output
        else np.zeros((code.n_states, period), dtype=np.int64)
    )

    found = {}
    for p0 in range(period):
        if kept_counts[p0] == 0:
            continue  # an event cannot begin on a fully punctured step
        kept0 = out[0, 1][keep[p0]]
        w0 = int(kept0.sum()) if by_output else 1
        if w0 + mr[nxt[0, 1], (p0 + 1) % period] > w_max:
            continue
        stack = [(int(nxt[0, 1]), list(kept0), 1, w0, 1)]
        while stack:
            state, bits, a, w, steps = stack.pop()
            if state == 0:
                _record(found, bits, a, p0, kept_counts)
                continue
            if steps >= max_event_steps:
                raise EnumerationCapError(max_event_steps)
            p = (p0 + steps) % period
            for u in (0, 1):
                kept = out[state, u][keep[p]]
                w2 = w + (int(kept.sum()) if by_output else u)
                ns = int(nxt[state, u])
                if w2 + mr[ns, (p + 1) % period] > w_max:
                    continue
                stack.append((ns, bits + list(kept), a + u, w2, steps + 1))

    vectors = tuple(
        ErrorVector(bits=b, info_errors=a, input_phase=p0, out_phase=oph)
        for (b, oph), (a, p0) in sorted(found.items())
    )
    return ErrorVectorSet(vectors=vectors, w_max=w_max, code_name=code.name)


def _record(found, bits, a, p0, kept_counts):
    """Trim zero edges, compute the start alignment, dedupe on (bits, phase)."""
    lead = 0
    while lead < len(bits) and bits[lead] == 0:
        lead += 1
    tail = len(bits)
    while tail > lead and bits[tail - 1] == 0:
        tail -= 1
    if tail == lead:
        trimmed = ()
    else:
        trimmed = tuple(int(b) for b in bits[lead:tail])
    keep_period = int(kept_counts.sum())
    out_phase = (int(kept_counts[:p0].sum()) + lead) % keep_period
    if not trimmed:
        # zero kept weight: keep a sentinel so the catastrophic check fires
        raise ConfigError("puncture pattern is catastrophic (zero-weight event)")
    key = (trimmed, out_phase)
    prev = found.get(key)
    # identical observable events: keep the larger info-error count
    if prev is None or a > prev[0]:
        found[key] = (a, p0)


def build_error_codeword(ev: ErrorVector, start: int, L_c: int) -> np.ndarray:
    """Zero-padded length-L_c vector with the event bits at 1-based ``start``."""
    if not 1 <= start <= L_c - ev.length + 1:
        raise ValueError(
            f"start={start} out of range for event length {ev.length}, L_c={L_c}"
        )
    q = np.zeros(L_c, dtype=np.uint8)
    q[start - 1 : start - 1 + ev.length] = ev.bits
    return q


# ---------------------------------------------------------------------------
# Viterbi decoding
# ---------------------------------------------------------------------------


def viterbi_decode(
    code: ConvCode, llrs, erasure_mask=None
) -> np.ndarray:
    """Maximum-likelihood decoding of mother-domain LLRs.

    ``llrs`` has one entry per mother output bit including the K-1 tail steps
    (punctured positions carry 0). Positive LLR favors bit 0. Erased positions
    (mask True) contribute zero metric. Ties prefer the lower predecessor
    state, so an all-zero metric decodes to the all-zero path.
    """
    out = viterbi_decode_batch(code, np.asarray(llrs, dtype=np.float64)[None, :],
                               erasure_mask)
    return out[0]


def viterbi_decode_batch(code: ConvCode, llrs, erasure_mask=None) -> np.ndarray:
    """Decode a batch of packets; ``llrs`` has shape (batch, n_mother_bits)."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 2:
        raise ValueError("llrs must be 2-D (batch, bits)")
    n_out = code.n_streams
    if llrs.shape[1] % n_out:
        raise ValueError(
            f"LLR length {llrs.shape[1]} is not a multiple of {n_out} output streams"
        )
    if erasure_mask is not None:
        mask = np.asarray(erasure_mask, dtype=bool)
        if mask.shape[-1] != llrs.shape[1]:
            raise ValueError("erasure mask length mismatch")
        llrs = np.where(mask, 0.0, llrs)
    n_steps = llrs.shape[1] // n_out
    K = code.constraint_length
    tail = K - 1
    if n_steps <= tail:
        raise ValueError("fewer trellis steps than tail bits")
    batch = llrs.shape[0]
    n_states = code.n_states
    nxt, out = trellis_tables(code)

    # branch sign matrix: +1 for output bit 0, -1 for bit 1
    sgn = 1.0 - 2.0 * out.astype(np.float64)  # (states, 2, n_out)
    # predecessor arrangement: state s' <- (pred_lo, u_lo), (pred_hi, u_hi)
    pred = np.zeros((n_states, 2), dtype=np.int64)
    pred_u = np.zeros((n_states, 2), dtype=np.int64)
    counts = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        for u in (0, 1):
            ns = nxt[s, u]
            k = counts[ns]
            pred[ns, k] = s
            pred_u[ns, k] = u
            counts[ns] += 1
    assert (counts == 2).all()
    # order so slot 0 holds the lower predecessor index (tie-break rule)
    swap = pred[:, 0] > pred[:, 1]
    pred[swap] = pred[swap][:, ::-1]
    pred_u[swap] = pred_u[swap][:, ::-1]

    NEG = -1e30
    pm = np.full((batch, n_states), NEG)
    pm[:, 0] = 0.0
    choice = np.zeros((n_steps, batch, n_states), dtype=np.uint8)
    step_llrs = llrs.reshape(batch, n_steps, n_out)
    sg0 = sgn[pred[:, 0], pred_u[:, 0]]  # (states, n_out)
    sg1 = sgn[pred[:, 1], pred_u[:, 1]]
    for t in range(n_steps):
        lt = step_llrs[:, t, :]  # (batch, n_out)
        cand0 = pm[:, pred[:, 0]] + lt @ sg0.T
        cand1 = pm[:, pred[:, 1]] + lt @ sg1.T
        take1 = cand1 > cand0  # strict: ties keep the lower predecessor
        choice[t] = take1
        pm = np.where(take1, cand1, cand0)

    # traceback from state 0 (tail-terminated)
    decoded = np.zeros((batch, n_steps), dtype=np.uint8)
    state = np.zeros(batch, dtype=np.int64)
    rows = np.arange(batch)
    for t in range(n_steps - 1, -1, -1):
        k = choice[t][rows, state]
        decoded[:, t] = pred_u[state, k]
        state = pred[state, k]
    return decoded[:, : n_steps - tail]


def depuncture(code: ConvCode, coded_llrs, n_steps: int) -> np.ndarray:
    """Spread punctured-domain LLRs over ``n_steps`` trellis steps of mother
    outputs, zeros at the punctured positions."""
    coded_llrs = np.atleast_2d(np.asarray(coded_llrs, dtype=np.float64))
    if coded_llrs.shape[1] != code.coded_length(n_steps):
        raise ValueError("coded LLR length does not match n_steps and the rate")
    keep = code.keep_mask[np.arange(n_steps) % code.period]  # (n_steps, n_streams)
    full = np.zeros((coded_llrs.shape[0], n_steps * code.n_streams))
    full[:, keep.ravel()] = coded_llrs
    return full


def puncture_positions(code: ConvCode, n_steps: int) -> np.ndarray:
    """Mother-domain indices of the kept (transmitted) bits, in order."""
    keep = code.keep_mask[np.arange(n_steps) % code.period]
    return np.flatnonzero(keep.ravel())
