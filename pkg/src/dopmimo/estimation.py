"""MMSE channel estimation and the equivalent post-estimation signal model.

Pilots are fixed to p_i = 1 (any unit-modulus sequence is statistically
equivalent under circularly symmetric noise), so the pilot de-rotation is
the identity and one real N x N filter per (t, k) serves every receive
antenna.  The estimation error is folded into an effective colored noise
whose covariance is block-diagonal across receive antennas.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import solve

from .channel import (
    STREAM_PILOT_NOISE,
    ChannelRealization,
    CovarianceSet,
    SystemConfig,
    build_cross_cov,
    build_pilot_cov,
    complex_normal,
    substream,
)
from .linalg import symmetrize

__all__ = [
    "EstimationResult",
    "estimate_for_antenna",
    "EquivalentModel",
    "mmse_filter",
    "mmse_estimate",
    "estimation_covariances",
    "covariance_set",
    "build_equivalent_model",
    "pilot_observations",
]


@lru_cache(maxsize=None)
def mmse_filter(cfg: SystemConfig, t: int, k: int) -> np.ndarray:
    """Linear MMSE filter sqrt(E_P) R_{P,t,k} (E_P R_P + sigma^2 I)^-1.

    Applied to the de-rotated pilot observations of any receive antenna;
    real-valued because the covariances are.
    """
    r_p = build_pilot_cov(cfg)
    r_ptk = build_cross_cov(cfg, t, k)
    gram = cfg.e_pilot * r_p + cfg.noise_var * np.eye(cfg.n_rep)
    # solve instead of explicit inverse; gram is PD for noise_var > 0
    filt = np.sqrt(cfg.e_pilot) * solve(gram, r_ptk.T, assume_a="pos").T
    filt.setflags(write=False)
    return filt


def mmse_estimate(y_pilot: np.ndarray, cfg: SystemConfig, t: int, k: int) -> np.ndarray:
    """Estimate the symbol-k channel of antenna pair (t, .) from that
    antenna's received pilot vector (length N, or N x m for a batch)."""
    y_pilot = np.asarray(y_pilot)
    if y_pilot.shape[0] != cfg.n_rep:
        raise ValueError(f"pilot vector has length {y_pilot.shape[0]}, expected {cfg.n_rep}")
    return mmse_filter(cfg, t, k) @ y_pilot


@lru_cache(maxsize=None)
def estimation_covariances(cfg: SystemConfig, t: int, k: int):
    """Covariances of the MMSE estimate and of the estimation error.

    r_hat = R_{P,t,k} (R_P + I/gamma_p)^-1 R_{P,t,k}^T and
    r_tilde = R_P - r_hat; they sum to the data autocovariance exactly.
    """
    r_p = build_pilot_cov(cfg)
    r_ptk = build_cross_cov(cfg, t, k)
    m = r_p + np.eye(cfg.n_rep) / cfg.gamma_p
    r_hat = symmetrize(r_ptk @ solve(m, r_ptk.T, assume_a="pos"))
    r_tilde = symmetrize(r_p - r_hat)
    r_hat.setflags(write=False)
    r_tilde.setflags(write=False)
    return r_hat, r_tilde


@lru_cache(maxsize=None)
def _summed_covariances(cfg: SystemConfig, k: int):
    """(sum_t r_hat, sum_t r_tilde) over all transmit antennas."""
    n = cfg.n_rep
    s_hat = np.zeros((n, n))
    s_til = np.zeros((n, n))
    for t in range(1, cfg.n_tx + 1):
        r_hat, r_tilde = estimation_covariances(cfg, t, k)
        s_hat = s_hat + r_hat
        s_til = s_til + r_tilde
    s_hat.setflags(write=False)
    s_til.setflags(write=False)
    return s_hat, s_til


def covariance_set(cfg: SystemConfig, t: int, k: int) -> CovarianceSet:
    r_p = build_pilot_cov(cfg)
    r_hat, r_tilde = estimation_covariances(cfg, t, k)
    return CovarianceSet(t=t, k=k, r_p=r_p, r_ptk=build_cross_cov(cfg, t, k),
                         r_k=r_p, r_hat=r_hat, r_tilde=r_tilde)


@dataclass(frozen=True)
class EstimationResult:
    """Estimates for one (t, k) across receive antennas, plus the filter."""

    t: int
    k: int
    h_hat: np.ndarray   # (n_rx, n_rep)
    filter: np.ndarray  # (n_rep, n_rep)


def estimate_for_antenna(y_pilot: np.ndarray, cfg: SystemConfig,
                         t: int, k: int) -> EstimationResult:
    """Bundle the per-receive-antenna estimates for one (t, k) with the
    filter that produced them; y_pilot is (n_rx, n_rep)."""
    y_pilot = np.asarray(y_pilot)
    h_hat = mmse_estimate(y_pilot.T, cfg, t, k).T
    return EstimationResult(t=t, k=k, h_hat=h_hat,
                            filter=mmse_filter(cfg, t, k))


@dataclass(frozen=True)
class EquivalentModel:
    """Post-estimation signal model for one data symbol k.

    y = sqrt(e_data) Hhat s + z_eff, where column t of Hhat stacks the
    per-receive-antenna estimates and z_eff has covariance
    e_data * I_{n_rx} (x) (sum_t r_tilde_t + noise_var/e_data * I).
    Covariance blocks are snapshots taken at build time so the model can
    be re-scored under rescaled (e_data, noise_var).
    """

    k: int
    h_hat: np.ndarray           # (n_tx, n_rx, n_rep) complex
    r_hat_blocks: np.ndarray    # (n_tx, n_rep, n_rep)
    r_tilde_blocks: np.ndarray  # (n_tx, n_rep, n_rep)
    e_data: float
    noise_var: float
    m_psk: int

    @property
    def n_tx(self) -> int:
        return self.h_hat.shape[0]

    @property
    def n_rx(self) -> int:
        return self.h_hat.shape[1]

    @property
    def n_rep(self) -> int:
        return self.h_hat.shape[2]

    @property
    def gamma_c(self) -> float:
        return self.e_data / self.noise_var

    @property
    def h_hat_mat(self) -> np.ndarray:
        """(n_rx * n_rep, n_tx): column t stacks estimates over r."""
        return self.h_hat.reshape(self.n_tx, -1).T

    def h_col(self, t: int) -> np.ndarray:
        return self.h_hat[t - 1].reshape(-1)

    def r_hat_block(self, t: int) -> np.ndarray:
        return self.r_hat_blocks[t - 1]

    def r_tilde_block(self, t: int) -> np.ndarray:
        return self.r_tilde_blocks[t - 1]

    def noise_cov_block(self) -> np.ndarray:
        """Block of cov(z_eff)/e_data: sum_t r_tilde_t + I/gamma_c."""
        return self.r_tilde_blocks.sum(axis=0) + np.eye(self.n_rep) / self.gamma_c

    def rescaled(self, factor: float) -> "EquivalentModel":
        """Same estimates with e_data and noise_var both scaled."""
        return replace(self, e_data=self.e_data * factor, noise_var=self.noise_var * factor)


def pilot_observations(realization: ChannelRealization, noise_seed: int) -> np.ndarray:
    """Simulated de-rotated pilot receptions, shape (n_tx, n_rx, n_rep).

    Noise is drawn from the (noise_seed, trial) pilot-noise substream, so
    repeated calls for the same frame reuse identical noise - estimates
    for different data symbols stay mutually consistent.
    """
    cfg = realization.cfg
    rng = substream(noise_seed, realization.trial, STREAM_PILOT_NOISE)
    noise = np.sqrt(cfg.noise_var) * complex_normal(rng, (cfg.n_tx, cfg.n_rx, cfg.n_rep))
    return np.sqrt(cfg.e_pilot) * realization.h_pilot + noise


def build_equivalent_model(realization: ChannelRealization, noise_seed: int,
                           cfg: SystemConfig, k: int) -> EquivalentModel:
    """Simulate pilot reception and assemble the equivalent model for k."""
    if k not in realization.k_set:
        raise ValueError(f"realization does not cover symbol k={k}")
    if cfg != realization.cfg:
        raise ValueError("config mismatch between realization and model request")
    y_pilot = pilot_observations(realization, noise_seed)
    n = cfg.n_rep
    h_hat = np.empty((cfg.n_tx, cfg.n_rx, n), dtype=complex)
    r_hat_blocks = np.empty((cfg.n_tx, n, n))
    r_tilde_blocks = np.empty((cfg.n_tx, n, n))
    for t in range(1, cfg.n_tx + 1):
        h_hat[t - 1] = mmse_estimate(y_pilot[t - 1].T, cfg, t, k).T
        r_hat_blocks[t - 1], r_tilde_blocks[t - 1] = estimation_covariances(cfg, t, k)
    return EquivalentModel(k=k, h_hat=h_hat, r_hat_blocks=r_hat_blocks,
                           r_tilde_blocks=r_tilde_blocks, e_data=cfg.e_data,
                           noise_var=cfg.noise_var, m_psk=cfg.m_psk)
