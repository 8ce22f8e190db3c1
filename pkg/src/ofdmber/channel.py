"""Quasi-static frequency-selective channel realizations for multiband OFDM.

Impulse responses follow the clustered multipath (modified Saleh-Valenzuela)
UWB model: Poisson cluster/ray arrivals, lognormal ray amplitudes with random
polarity decaying double-exponentially, independent lognormal cluster fading,
per-realization energy normalized to one, and a separate outer lognormal
shadowing amplitude G applied to every tone. Frequency responses are direct
complex-exponential sums at the absolute tone frequencies of a 3-band plan
(no sample-grid quantization of the continuous tap delays).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "SvParams",
    "BandPlan",
    "ChannelRealization",
    "ChannelCorrelation",
    "generate_impulse_response",
    "to_frequency_domain",
    "generate_realizations",
    "estimate_correlation",
    "save_channel_set",
    "load_channel_set",
    "save_correlation",
    "load_correlation",
]


@dataclass(frozen=True)
class SvParams:
    """Clustered multipath model parameters (rates in 1/ns, decays in ns, fades in dB)."""

    cluster_rate: float
    ray_rate: float
    cluster_decay: float
    ray_decay: float
    cluster_fade_std_db: float
    ray_fade_std_db: float
    shadow_std_db: float
    max_delay_ns: float
    name: str = ""

    def __post_init__(self):
        for f in ("cluster_rate", "ray_rate", "cluster_decay", "ray_decay",
                  "max_delay_ns"):
            if getattr(self, f) <= 0:
                raise ConfigError(f"SvParams.{f} must be > 0")
        for f in ("cluster_fade_std_db", "ray_fade_std_db", "shadow_std_db"):
            if getattr(self, f) < 0:
                raise ConfigError(f"SvParams.{f} must be >= 0")


def _default_data_offsets() -> tuple:
    """100 data tones per 128-tone band: offsets 1..56 minus pilots, mirrored."""
    pilots = {5, 15, 25, 35, 45, 55}
    pos = [k for k in range(1, 57) if k not in pilots]
    return tuple(sorted([-k for k in pos] + pos))


@dataclass(frozen=True)
class BandPlan:
    """Tone layout of the band-hopped system, flattened into one wide grid.

    The ``n_bands`` sub-bands of ``dft_size`` tones are visited in order (one
    OFDM symbol each), giving an equivalent ``n_bands * dft_size`` tone system.
    """

    n_bands: int = 3
    dft_size: int = 128
    tone_spacing_hz: float = 4.125e6
    first_center_hz: float = 3432e6
    cp_ns: float = 60.6
    data_offsets: tuple = field(default_factory=_default_data_offsets)

    def __post_init__(self):
        offs = np.asarray(self.data_offsets, dtype=np.int64)
        half = self.dft_size // 2
        if offs.size == 0 or offs.min() < -half or offs.max() >= half:
            raise ConfigError("data offsets out of the DFT band")
        if np.unique(offs).size != offs.size:
            raise ConfigError("duplicate data offsets")

    @property
    def n_total(self) -> int:
        """Total equivalent subcarriers across bands."""
        return self.n_bands * self.dft_size

    @property
    def n_data(self) -> int:
        return self.n_bands * len(self.data_offsets)

    def band_centers_hz(self) -> np.ndarray:
        bw = self.dft_size * self.tone_spacing_hz
        return self.first_center_hz + bw * np.arange(self.n_bands)

    def data_tone_freqs_hz(self) -> np.ndarray:
        """Absolute frequencies of the data tones, concatenated in hop order."""
        offs = np.asarray(self.data_offsets, dtype=np.float64)
        return (
            self.band_centers_hz()[:, None] + offs[None, :] * self.tone_spacing_hz
        ).ravel()

    def data_tone_global_indices(self) -> np.ndarray:
        """Index of each data tone on the 0..n_total-1 equivalent grid."""
        offs = np.asarray(self.data_offsets, dtype=np.int64) + self.dft_size // 2
        return (
            np.arange(self.n_bands)[:, None] * self.dft_size + offs[None, :]
        ).ravel()

    def band_of_data_tone(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_bands), len(self.data_offsets))


@dataclass(frozen=True)
class ChannelRealization:
    """Frequency-domain gains over the data tones plus the shadowing split."""

    h: np.ndarray          # complex gains including shadowing, length n_data
    shadow: float          # lognormal amplitude G
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=np.complex128))
        if self.shadow <= 0:
            raise ConfigError("shadowing amplitude must be positive")

    @property
    def h_normalized(self) -> np.ndarray:
        """Gains with the common shadowing amplitude removed."""
        return self.h / self.shadow


@dataclass(frozen=True)
class ChannelCorrelation:
    """Sample correlation matrix of the normalized tone gains."""

    sigma: np.ndarray
    sample_count: int

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.complex128)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ConfigError("correlation matrix must be square")
        if not np.allclose(s, s.conj().T, atol=1e-10 * max(1.0, np.abs(s).max())):
            raise ConfigError("correlation matrix must be Hermitian")
        object.__setattr__(self, "sigma", s)

    @property
    def n_tones(self) -> int:
        return self.sigma.shape[0]


def generate_impulse_response(params: SvParams, rng):
    """Draw one multipath realization.

    Returns ``(delays_ns, amplitudes, shadow)``: real tap amplitudes with
    random polarity normalized to unit total energy, and the outer lognormal
    shadowing amplitude with 20*log10(shadow) ~ N(0, shadow_std_db^2).
    """
    rng = np.random.default_rng(rng)
    t_max = params.max_delay_ns

    cluster_times = [0.0]
    while True:
        t = cluster_times[-1] + rng.exponential(1.0 / params.cluster_rate)
        if t >= t_max:
            break
        cluster_times.append(t)

    delays = []
    profile_db = []
    n_rays_per_cluster = []
    for tl in cluster_times:
        span = t_max - tl
        n_exp = max(8, int(params.ray_rate * span * 1.5) + 8)
        gaps = rng.exponential(1.0 / params.ray_rate, size=n_exp)
        arr = np.concatenate([[0.0], np.cumsum(gaps)])
        while arr[-1] < span:
            more = rng.exponential(1.0 / params.ray_rate, size=n_exp)
            arr = np.concatenate([arr, arr[-1] + np.cumsum(more)])
        tau = arr[arr < span]
        delays.append(tl + tau)
        # mean power exp(-tl/Gamma - tau/gamma) expressed in dB
        profile_db.append(
            -10.0 / np.log(10.0)
            * (tl / params.cluster_decay + tau / params.ray_decay)
        )
        n_rays_per_cluster.append(tau.size)

    delays = np.concatenate(delays)
    profile_db = np.concatenate(profile_db)
    var_db = params.cluster_fade_std_db**2 + params.ray_fade_std_db**2
    # lognormal mean offset so E[amp^2] follows the decay profile exactly
    mean_db = profile_db - var_db * np.log(10.0) / 20.0
    cluster_fade = np.repeat(
        rng.normal(0.0, params.cluster_fade_std_db, size=len(cluster_times)),
        n_rays_per_cluster,
    )
    ray_fade = rng.normal(0.0, params.ray_fade_std_db, size=delays.size)
    amps = 10.0 ** ((mean_db + cluster_fade + ray_fade) / 20.0)
    amps *= rng.choice([-1.0, 1.0], size=delays.size)
    amps = amps / np.sqrt(np.sum(amps**2))

    shadow = 10.0 ** (rng.normal(0.0, params.shadow_std_db) / 20.0)
    return delays, amps, float(shadow)


def to_frequency_domain(taps, plan: BandPlan, n_tones: int) -> ChannelRealization:
    """Evaluate the tap response at the plan's data-tone frequencies.

    ``taps`` is the ``(delays_ns, amplitudes, shadow)`` triple. The maximum
    delay must fit inside the cyclic prefix, otherwise the frequency-domain
    per-tone model does not hold and a ConfigError is raised.
    """
    delays, amps, shadow = taps
    delays = np.asarray(delays, dtype=np.float64)
    amps = np.asarray(amps, dtype=np.float64)
    if n_tones != plan.n_data:
        raise ConfigError(
            f"n_tones={n_tones} does not match the band plan's {plan.n_data} data tones"
        )
    if delays.size and delays.max() >= plan.cp_ns:
        raise ConfigError(
            f"tap delay {delays.max():.1f} ns exceeds the cyclic prefix "
            f"{plan.cp_ns:.1f} ns"
        )
    freqs = plan.data_tone_freqs_hz()
    phase = np.exp(-2j * np.pi * np.outer(freqs, delays * 1e-9))
    h_n = phase @ amps.astype(np.complex128)
    return ChannelRealization(h=shadow * h_n, shadow=shadow)


def generate_realizations(
    params: SvParams, plan: BandPlan, count: int, seed
) -> list:
    """Fixed-seed ensemble; realization k uses child seed (seed, k)."""
    out = []
    for k in range(count):
        rng = np.random.default_rng([int(seed), k])
        taps = generate_impulse_response(params, rng)
        real = to_frequency_domain(taps, plan, plan.n_data)
        out.append(
            ChannelRealization(
                h=real.h,
                shadow=real.shadow,
                meta={"seed": int(seed), "index": k, "params": params.name},
            )
        )
    return out


def estimate_correlation(realizations) -> ChannelCorrelation:
    """Sample mean of h_n h_n^H over the ensemble (normalized gains)."""
    reals = list(realizations)
    if not reals:
        raise ValueError("need at least one realization")
    hn = np.stack([r.h_normalized for r in reals])
    sigma = (hn.conj().T @ hn).T.conj() / len(reals)
    sigma = 0.5 * (sigma + sigma.conj().T)  # exact Hermitian symmetry
    return ChannelCorrelation(sigma=sigma, sample_count=len(reals))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_channel_set(path, realizations) -> None:
    h = np.stack([r.h for r in realizations])
    g = np.array([r.shadow for r in realizations])
    np.savez_compressed(path, h=h, shadow=g)


def load_channel_set(path) -> list:
    data = np.load(path)
    h, g = data["h"], data["shadow"]
    return [
        ChannelRealization(h=h[k], shadow=float(g[k]), meta={"index": k})
        for k in range(h.shape[0])
    ]


def save_correlation(path, corr: ChannelCorrelation) -> None:
    np.savez_compressed(path, sigma=corr.sigma,
                        sample_count=np.array([corr.sample_count]))


def load_correlation(path) -> ChannelCorrelation:
    data = np.load(path)
    return ChannelCorrelation(
        sigma=data["sigma"], sample_count=int(data["sample_count"][0])
    )
