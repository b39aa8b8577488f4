"""Large-dimension SINR and rate approximations.

MRC and the whitened MRC variant admit closed trace formulas; the MMSE
receiver needs a deterministic-equivalent fixed point.  Every quantity is
computed on N x N covariance blocks; the receive-antenna dimension enters
only as a multiplicity factor on traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve

from .channel import SystemConfig
from .estimation import _summed_covariances, estimation_covariances
from .exceptions import ConvergenceError
from .linalg import psd_inv_sqrt, psd_sqrt, symmetrize
from .receivers import Receiver

__all__ = [
    "DeqSolution",
    "mrc_asymptotic_sinr",
    "mrc_like_asymptotic_sinr",
    "deq_fixed_point",
    "asymptotic_rate",
]

DEQ_TOL = 1e-10
DEQ_MAX_ITER = 1000


def _interference_block(cfg: SystemConfig, t: int, k: int) -> np.ndarray:
    """sum_{l != t} r_hat_l + sum_l r_tilde_l + I/gamma_c."""
    s_hat, s_til = _summed_covariances(cfg, k)
    r_hat_t, _ = estimation_covariances(cfg, t, k)
    return s_hat - r_hat_t + s_til + np.eye(cfg.n_rep) / cfg.gamma_c


def mrc_asymptotic_sinr(cfg: SystemConfig, t: int, k: int) -> float:
    """Trace-ratio limit of the matched-filter SINR:
    N_R Tr^2(r_hat_t) / [sum_{l != t} Tr(r_hat_l r_hat_t)
                         + Tr(r_hat_t (sum_l r_tilde_l + I/gamma_c))].
    """
    r_hat_t, _ = estimation_covariances(cfg, t, k)
    tr = np.trace(r_hat_t)
    if tr == 0.0:
        return 0.0
    s_hat, s_til = _summed_covariances(cfg, k)
    interference = np.trace((s_hat - r_hat_t) @ r_hat_t)
    noise = np.trace(r_hat_t @ (s_til + np.eye(cfg.n_rep) / cfg.gamma_c))
    return float(cfg.n_rx * tr * tr / (interference + noise))


def mrc_like_asymptotic_sinr(cfg: SystemConfig, t: int, k: int) -> float:
    """Limit of the whitened-MRC SINR:
    N_R Tr(r_hat_t^(1/2) M^-1 r_hat_t^(1/2)) with M the statistical
    interference-plus-noise block."""
    r_hat_t, _ = estimation_covariances(cfg, t, k)
    root = psd_sqrt(r_hat_t, floor=0.0)
    m = _interference_block(cfg, t, k)
    return float(cfg.n_rx * np.trace(root @ solve(m, root, assume_a="pos")))


@dataclass(frozen=True)
class DeqSolution:
    """Converged deterministic-equivalent state for one (t, k)."""

    t: int
    k: int
    e: np.ndarray          # per-interferer auxiliaries, order l != t
    interferers: tuple     # the l indices matching e
    t_block: np.ndarray    # N x N factor of the resolvent limit
    reps: int              # multiplicity (receive antennas)
    sinr_deq: float        # Tr(Q T) at full stacked size
    iterations: int
    residual: float


def deq_fixed_point(cfg: SystemConfig, t: int, k: int, tol: float = DEQ_TOL,
                    max_iter: int = DEQ_MAX_ITER, e_init: float = 0.0) -> DeqSolution:
    """Solve the fixed point e_l = Tr(Phi_l T), T = (sum_l Phi_l/(1+e_l) + I)^-1.

    Phi_l and Q are the interferer and target covariances after whitening
    by the effective-noise block; all iterations run at N x N size and
    traces carry the I_{N_R} multiplicity.  The returned sinr_deq is the
    deterministic equivalent of the MMSE output SINR.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n = cfg.n_rep
    _, s_til = _summed_covariances(cfg, k)
    w = psd_inv_sqrt(s_til + np.eye(n) / cfg.gamma_c)
    r_hat_t, _ = estimation_covariances(cfg, t, k)
    q_block = symmetrize(w @ r_hat_t @ w)
    interferers = tuple(l for l in range(1, cfg.n_tx + 1) if l != t)
    phi = []
    for l in interferers:
        r_hat_l, _ = estimation_covariances(cfg, l, k)
        phi.append(symmetrize(w @ r_hat_l @ w))
    e = np.full(len(phi), float(e_init))
    if e_init < 0:
        raise ValueError("e_init must be nonnegative")
    t_block = np.eye(n)
    iterations = 0
    residual = 0.0
    while True:
        iterations += 1
        denom = np.eye(n)
        for p, e_l in zip(phi, e):
            denom = denom + p / (1.0 + e_l)
        t_block = np.linalg.inv(denom)
        e_new = np.array([cfg.n_rx * np.trace(p @ t_block) for p in phi])
        residual = float(np.sum(np.abs(e_new - e) ** 2))
        e = e_new
        if np.any(e < 0):
            raise ConvergenceError("auxiliary variables went negative",
                                   residual, iterations)
        if residual <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"fixed point not converged after {iterations} iterations "
                f"(residual {residual:.3e} > {tol:.3e})", residual, iterations)
    sinr = float(cfg.n_rx * np.trace(q_block @ t_block))
    return DeqSolution(t=t, k=k, e=e, interferers=interferers, t_block=t_block,
                       reps=cfg.n_rx, sinr_deq=sinr, iterations=iterations,
                       residual=residual)


def asymptotic_sinr(cfg: SystemConfig, receiver: Receiver, t: int, k: int) -> float:
    if receiver is Receiver.MRC:
        return mrc_asymptotic_sinr(cfg, t, k)
    if receiver is Receiver.MRC_LIKE:
        return mrc_like_asymptotic_sinr(cfg, t, k)
    if receiver is Receiver.MMSE:
        return deq_fixed_point(cfg, t, k).sinr_deq
    raise ValueError(f"unknown receiver {receiver!r}")


def asymptotic_rate(cfg: SystemConfig, receiver: Receiver, k: int) -> float:
    """Normalized sum rate with each stream's SINR replaced by its limit."""
    total = 0.0
    for t in range(1, cfg.n_tx + 1):
        total += np.log2(1.0 + asymptotic_sinr(cfg, receiver, t, k))
    return float(total / cfg.n_rep)
