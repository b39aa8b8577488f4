"""Frame timing, Jakes-autocorrelation covariances, and channel sampling.

A frame carries N repetitions of a (pilot preamble + data block) unit: in
each repetition, transmit antenna t sends its pilot in slot t, and the K
data symbols occupy the following K slots.  The channel between each
antenna pair is a unit-variance complex Gaussian process whose
autocorrelation across m symbol slots is J0(2 pi f_D m T); distinct
antenna pairs fade independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .bessel import j0, j0_array
from .exceptions import NumericalError

__all__ = [
    "SystemConfig",
    "FrameTiming",
    "CovarianceSet",
    "ChannelRealization",
    "speed_to_doppler",
    "frame_timing",
    "build_pilot_cov",
    "build_cross_cov",
    "sample_channel",
    "substream",
    "complex_normal",
]

SPEED_OF_LIGHT = 299_792_458.0

# substream tags: one label per independent random quantity in a trial
STREAM_CHANNEL = 0
STREAM_PILOT_NOISE = 1
STREAM_DATA_NOISE = 2
STREAM_SYMBOLS = 3


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters for one link.

    Counts are 1-based sizes; energies are per-symbol; `noise_var` is the
    complex noise variance per received sample.  SNRs are derived, never
    stored: gamma_p = e_pilot/noise_var, gamma_c = e_data/noise_var.
    """

    n_tx: int = 4
    n_rx: int = 8
    k_block: int = 16
    n_rep: int = 15
    f_doppler: float = 200.0
    t_symbol: float = 1e-5
    e_pilot: float = 10.0
    e_data: float = 10.0
    noise_var: float = 1.0
    m_psk: int = 4

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "k_block", "n_rep"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        m = self.m_psk
        if not isinstance(m, (int, np.integer)) or m < 2 or (m & (m - 1)) != 0:
            raise ValueError(f"m_psk must be a power of two >= 2, got {m!r}")
        if not (self.f_doppler >= 0.0):
            raise ValueError(f"f_doppler must be >= 0, got {self.f_doppler!r}")
        if not (self.t_symbol > 0.0):
            raise ValueError(f"t_symbol must be > 0, got {self.t_symbol!r}")
        if not (self.e_pilot > 0.0 and self.e_data > 0.0):
            raise ValueError("pilot and data energies must be > 0")
        if not (self.noise_var > 0.0):
            raise ValueError(f"noise_var must be > 0, got {self.noise_var!r}")

    @property
    def t_pilot_interval(self) -> float:
        """Spacing between successive pilots of one antenna: (N_T + K) T."""
        return (self.n_tx + self.k_block) * self.t_symbol

    @property
    def gamma_p(self) -> float:
        return self.e_pilot / self.noise_var

    @property
    def gamma_c(self) -> float:
        return self.e_data / self.noise_var

    @property
    def gamma_t(self) -> float:
        return self.n_tx * self.gamma_c + self.gamma_p

    @property
    def delta(self) -> float:
        """Normalized Doppler per pilot interval, 2 pi f_D (N_T + K) T."""
        return 2.0 * np.pi * self.f_doppler * self.t_pilot_interval

    @property
    def estimation_valid(self) -> bool:
        """Pilot-spacing condition (N_T + K) T <= 0.5 / f_D.

        Violating configs are accepted everywhere but estimation quality
        degrades; the harness surfaces this flag as a warning.
        """
        if self.f_doppler == 0.0:
            return True
        return self.t_pilot_interval <= 0.5 / self.f_doppler

    @property
    def frame_length(self) -> int:
        return self.n_rep * (self.n_tx + self.k_block)


def speed_to_doppler(speed_kmh: float, carrier_hz: float) -> float:
    """Maximum Doppler shift v * f_c / c for a terminal at `speed_kmh`."""
    if speed_kmh < 0:
        raise ValueError(f"speed must be >= 0, got {speed_kmh!r}")
    if carrier_hz <= 0:
        raise ValueError(f"carrier frequency must be > 0, got {carrier_hz!r}")
    return (speed_kmh / 3.6) * carrier_hz / SPEED_OF_LIGHT


@dataclass(frozen=True)
class FrameTiming:
    """1-based slot indices of pilots and data symbols within a frame."""

    n_tx: int
    k_block: int
    n_rep: int

    def pilot_index(self, t: int, n: int) -> int:
        """Slot of antenna t's pilot in repetition n (both 1-based)."""
        self._check(t, 1, self.n_tx, "antenna"); self._check(n, 1, self.n_rep, "repetition")
        return t + (n - 1) * (self.n_tx + self.k_block)

    def data_index(self, k: int, n: int) -> int:
        """Slot of data symbol k in repetition n (both 1-based)."""
        self._check(k, 1, self.k_block, "symbol"); self._check(n, 1, self.n_rep, "repetition")
        return self.n_tx + k + (n - 1) * (self.n_tx + self.k_block)

    def pilot_indices(self, t: int) -> np.ndarray:
        return np.array([self.pilot_index(t, n) for n in range(1, self.n_rep + 1)])

    def data_indices(self, k: int) -> np.ndarray:
        return np.array([self.data_index(k, n) for n in range(1, self.n_rep + 1)])

    @staticmethod
    def _check(v: int, lo: int, hi: int, what: str):
        if not (lo <= v <= hi):
            raise ValueError(f"{what} index {v} outside [{lo}, {hi}]")


def frame_timing(cfg: SystemConfig) -> FrameTiming:
    return FrameTiming(cfg.n_tx, cfg.k_block, cfg.n_rep)


@lru_cache(maxsize=None)
def build_pilot_cov(cfg: SystemConfig) -> np.ndarray:
    """Autocovariance of one antenna's N pilot-instant channel samples.

    Symmetric Toeplitz with first column J0(2 pi f_D n T_P), n = 0..N-1.
    The same matrix is the data-instant autocovariance for any symbol k,
    because data instants of a fixed k are also spaced T_P apart.
    """
    n = cfg.n_rep
    first = j0_array(cfg.delta * np.arange(n))
    out = toeplitz(first)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def build_cross_cov(cfg: SystemConfig, t: int, k: int) -> np.ndarray:
    """Cross-covariance between symbol k's channel samples and antenna t's
    pilot samples (both length N), entry (m, n) = tau[n - m] with

        tau[j] = J0(2 pi f_D T (N_T + k - t - j (N_T + K))).

    Toeplitz but not symmetric: the data instant sits a fractional pilot
    interval after the pilot, so positive and negative lags differ.
    """
    if not (1 <= t <= cfg.n_tx):
        raise ValueError(f"antenna index {t} outside [1, {cfg.n_tx}]")
    if not (1 <= k <= cfg.k_block):
        raise ValueError(f"symbol index {k} outside [1, {cfg.k_block}]")
    n = cfg.n_rep
    j = np.arange(-(n - 1), n)
    lags = cfg.n_tx + k - t - j * (cfg.n_tx + cfg.k_block)
    tau = j0_array(2.0 * np.pi * cfg.f_doppler * cfg.t_symbol * lags)
    # tau is indexed j = -(n-1)..(n-1) at offset n-1
    col = tau[(n - 1) + (1 - np.arange(1, n + 1))]
    row = tau[(n - 1) + (np.arange(1, n + 1) - 1)]
    out = toeplitz(col, row)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CovarianceSet:
    """All second-order statistics for one (antenna, symbol) pair."""

    t: int
    k: int
    r_p: np.ndarray        # pilot autocovariance
    r_ptk: np.ndarray      # data-pilot cross-covariance
    r_k: np.ndarray        # data autocovariance (equals r_p)
    r_hat: np.ndarray      # covariance of the MMSE estimate
    r_tilde: np.ndarray    # covariance of the estimation error


@dataclass(frozen=True)
class ChannelRealization:
    """One frame's channel, sampled at pilot and requested data instants.

    h_pilot[t-1, r-1] is the length-N vector of antenna-pair (t, r) at
    antenna t's own pilot slots; h_data[t-1, r-1, i] is the length-N
    vector at the data slots of k_set[i].
    """

    cfg: SystemConfig
    k_set: tuple
    h_pilot: np.ndarray    # (n_tx, n_rx, n_rep) complex
    h_data: np.ndarray     # (n_tx, n_rx, len(k_set), n_rep) complex
    seed: int
    trial: int

    def data_column(self, k: int) -> np.ndarray:
        """True channel for symbol k, stacked (n_rx*n_rep, n_tx)."""
        i = self.k_set.index(k)
        return self.h_data[:, :, i, :].reshape(self.cfg.n_tx, -1).T


def substream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the (seed, *path) substream.

    Distinct paths give statistically independent streams, and a given
    path always reproduces the same draws, so results are bit-identical
    regardless of evaluation order or worker count.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seed=ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussians."""
    z = rng.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    # The f_D = 0 covariance is all-ones (rank 1), and slow fading makes
    # nearby instants nearly dependent, so a jitter ladder is required.
    for jitter in (1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        "channel covariance not factorizable even with jitter 1e-6")


@lru_cache(maxsize=None)
def _joint_chol(cfg: SystemConfig, t: int, k_set: tuple) -> np.ndarray:
    """Cholesky factor of the joint covariance over antenna t's pilot
    instants followed by the data instants of each k in k_set."""
    timing = frame_timing(cfg)
    instants = [timing.pilot_indices(t)]
    instants += [timing.data_indices(k) for k in k_set]
    inst = np.concatenate(instants)
    lag = np.abs(inst[:, None] - inst[None, :])
    distinct = np.unique(lag)
    table = {int(d): j0(2.0 * np.pi * cfg.f_doppler * cfg.t_symbol * d) for d in distinct}
    cov = np.vectorize(lambda d: table[int(d)])(lag)
    out = _cholesky_with_jitter(cov)
    out.setflags(write=False)
    return out


def sample_channel(cfg: SystemConfig, k_set, seed: int, trial: int = 0) -> ChannelRealization:
    """Draw one frame's channel for every antenna pair.

    Each (t, r) pair gets its own counter-based substream keyed by
    (seed, trial, t, r), so realizations are independent across pairs and
    reproducible regardless of execution order.
    """
    k_set = tuple(sorted(set(int(k) for k in k_set)))
    if any(k < 1 or k > cfg.k_block for k in k_set):
        raise ValueError(f"k_set {k_set} outside [1, {cfg.k_block}]")
    n, n_k = cfg.n_rep, len(k_set)
    h_pilot = np.empty((cfg.n_tx, cfg.n_rx, n), dtype=complex)
    h_data = np.empty((cfg.n_tx, cfg.n_rx, n_k, n), dtype=complex)
    for t in range(1, cfg.n_tx + 1):
        chol = _joint_chol(cfg, t, k_set)
        for r in range(1, cfg.n_rx + 1):
            rng = substream(seed, trial, STREAM_CHANNEL, t, r)
            h = chol @ complex_normal(rng, (chol.shape[0],))
            h_pilot[t - 1, r - 1] = h[:n]
            h_data[t - 1, r - 1] = h[n:].reshape(n_k, n)
    return ChannelRealization(cfg=cfg, k_set=k_set, h_pilot=h_pilot,
                              h_data=h_data, seed=int(seed), trial=int(trial))
