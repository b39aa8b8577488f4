"""Finite-size linear receivers: per-stream SINR, detection, sum rate.

All three receivers operate on the equivalent post-estimation model.  The
effective noise covariance and the whitening matrices are block-diagonal
(identity across receive antennas), so every solve runs at the N x N
block size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky

from .estimation import EquivalentModel
from .exceptions import NumericalError
from .linalg import KronCov, psd_inv_sqrt

__all__ = [
    "Receiver",
    "SinrReport",
    "DetectionOutput",
    "mrc_sinr",
    "mmse_sinr",
    "mrc_like_sinr",
    "interference_whitener",
    "sinr_report",
    "normalized_sum_rate",
    "detect",
    "constellation",
    "decide_mpsk",
]


class Receiver(enum.Enum):
    MRC = "mrc"
    MMSE = "mmse"
    MRC_LIKE = "mrc_like"


@dataclass(frozen=True)
class SinrReport:
    receiver: Receiver
    sinr: tuple
    rate: float


@dataclass(frozen=True)
class DetectionOutput:
    s_hat: np.ndarray    # (n_tx,) decision statistics
    decided: np.ndarray  # (n_tx,) constellation indices


def _noise_kron(model: EquivalentModel) -> KronCov:
    return KronCov(model.noise_cov_block(), model.n_rx)


def mrc_sinr(model: EquivalentModel, t: int) -> float:
    """Matched-filter SINR: |h_t^H h_t|^2 over interference plus the
    quadratic form of the effective-noise covariance."""
    h_t = model.h_col(t)
    sig = np.vdot(h_t, h_t).real
    if sig == 0.0:
        return 0.0
    noise = _noise_kron(model)
    den = noise.quadratic(h_t).real
    hmat = model.h_hat_mat
    for l in range(1, model.n_tx + 1):
        if l != t:
            den += abs(np.vdot(h_t, hmat[:, l - 1])) ** 2
    return sig * sig / den


def mmse_sinr(model: EquivalentModel, t: int) -> float:
    """SINR of the optimal linear filter, h_t^H (B B^H + C)^-1 h_t.

    Computed by whitening with the Cholesky factor of the noise block and
    a rank-(n_tx - 1) Woodbury step, never at full stacked size.
    """
    try:
        chol = cholesky(model.noise_cov_block(), lower=True)
    except np.linalg.LinAlgError as e:  # unreachable for gamma_c finite
        raise NumericalError(f"effective-noise block not factorizable: {e}") from e
    # whiten every column blockwise: solve L x = h per receive antenna
    hw = np.linalg.solve(chol[None, :, :], np.swapaxes(model.h_hat, 1, 2))
    hw = np.swapaxes(hw, 1, 2).reshape(model.n_tx, -1).T  # (n_rx*n_rep, n_tx)
    h_t = hw[:, t - 1]
    others = [l - 1 for l in range(1, model.n_tx + 1) if l != t]
    b = hw[:, others]
    if b.size == 0:
        return np.vdot(h_t, h_t).real
    u = b.conj().T @ h_t
    small = np.eye(len(others)) + b.conj().T @ b
    x = np.linalg.solve(small, u)
    return (np.vdot(h_t, h_t) - np.vdot(u, x)).real


def interference_whitener(model: EquivalentModel, t: int) -> np.ndarray:
    """Block of the statistical interference-plus-noise whitener for
    stream t: the PSD inverse square root of
    e_data (sum_{l != t} r_hat_l + sum_l r_tilde_l) + noise_var I."""
    target = _whitener_target(model, t)
    return psd_inv_sqrt(target)


def _whitener_target(model: EquivalentModel, t: int) -> np.ndarray:
    s_hat = model.r_hat_blocks.sum(axis=0) - model.r_hat_block(t)
    s_til = model.r_tilde_blocks.sum(axis=0)
    return model.e_data * (s_hat + s_til) + model.noise_var * np.eye(model.n_rep)


def mrc_like_sinr(model: EquivalentModel, t: int) -> float:
    """MRC after statistical whitening of interference-plus-noise.

    Uses covariance knowledge only (no instantaneous interferer CSI):
    whiten with the block inverse square root, then matched-filter.
    """
    w = interference_whitener(model, t)
    wk = KronCov(w, model.n_rx)
    hbar = wk.apply(model.h_col(t))
    sig = np.vdot(hbar, hbar).real
    if sig == 0.0:
        return 0.0
    den = 0.0
    for l in range(1, model.n_tx + 1):
        if l != t:
            den += abs(np.vdot(hbar, wk.apply(model.h_col(l)))) ** 2
    noise_block = w @ model.noise_cov_block() @ w.conj().T
    den += KronCov(noise_block, model.n_rx).quadratic(hbar).real
    return sig * sig / den


_DISPATCH = {}


def sinr_report(model: EquivalentModel, receiver: Receiver) -> SinrReport:
    fn = _DISPATCH[receiver]
    sinrs = tuple(fn(model, t) for t in range(1, model.n_tx + 1))
    return SinrReport(receiver=receiver, sinr=sinrs,
                      rate=normalized_sum_rate(sinrs, model.n_rep))


_DISPATCH.update({Receiver.MRC: mrc_sinr, Receiver.MMSE: mmse_sinr,
                  Receiver.MRC_LIKE: mrc_like_sinr})


def normalized_sum_rate(sinrs, n_rep: int) -> float:
    """Sum of log2(1 + sinr_t) divided by the repetition count."""
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0):
        raise ValueError("SINRs must be nonnegative")
    return float(np.sum(np.log2(1.0 + sinrs)) / n_rep)


def constellation(m_psk: int) -> np.ndarray:
    """Unit-energy MPSK points exp(2 pi i m / M), m = 0..M-1."""
    return np.exp(2j * np.pi * np.arange(m_psk) / m_psk)


def decide_mpsk(s_hat: np.ndarray, m_psk: int) -> np.ndarray:
    """Nearest constellation index by angular distance.

    Exact ties (statistic on a decision boundary) resolve to the lowest
    index, which argmin's first-match rule implements directly.
    """
    phases = np.angle(np.atleast_1d(s_hat))
    targets = 2.0 * np.pi * np.arange(m_psk) / m_psk
    diff = phases[..., None] - targets
    dist = np.abs((diff + np.pi) % (2.0 * np.pi) - np.pi)
    return np.argmin(dist, axis=-1)


def detect(model: EquivalentModel, y: np.ndarray, receiver: Receiver) -> DetectionOutput:
    """Filter a stacked received vector y (length n_rx * n_rep) and map
    each stream's statistic to the nearest MPSK symbol."""
    y = np.asarray(y).reshape(-1)
    stats = np.empty(model.n_tx, dtype=complex)
    if receiver is Receiver.MRC:
        for t in range(1, model.n_tx + 1):
            stats[t - 1] = np.vdot(model.h_col(t), y)
    elif receiver is Receiver.MMSE:
        hmat = model.h_hat_mat
        c = cho_factor(model.noise_cov_block(), lower=True)

        def csolve(x):
            xr = x.reshape(model.n_rx, model.n_rep)
            return cho_solve(c, xr.T).T.reshape(-1)

        for t in range(1, model.n_tx + 1):
            others = [l - 1 for l in range(1, model.n_tx + 1) if l != t]
            # f = (H_[t] H_[t]^H + C)^-1 h_t via blockwise Woodbury
            ci_h = csolve(hmat[:, t - 1])
            if others:
                b = hmat[:, others]
                ci_b = np.column_stack([csolve(b[:, i]) for i in range(b.shape[1])])
                small = np.eye(len(others)) + b.conj().T @ ci_b
                f = ci_h - ci_b @ np.linalg.solve(small, b.conj().T @ ci_h)
            else:
                f = ci_h
            stats[t - 1] = np.vdot(f, y)
    elif receiver is Receiver.MRC_LIKE:
        for t in range(1, model.n_tx + 1):
            w = interference_whitener(model, t)
            m2 = KronCov(w.conj().T @ w, model.n_rx)  # whitener applied twice
            stats[t - 1] = np.sqrt(model.e_data) * np.vdot(model.h_col(t), m2.apply(y))
    else:
        raise ValueError(f"unknown receiver {receiver!r}")
    return DetectionOutput(s_hat=stats, decided=decide_mpsk(stats, model.m_psk))
