"""Large-N Doppler-diversity analytics.

The pilot-sampled fading process has the arcsine-shaped band spectrum of
isotropic scattering; its Toeplitz covariances have an explicit limiting
eigenvalue density, which yields a closed-form limit for the log
determinant behind the SER, the achievable diversity order, and the dB
coding-gain loss of pilot-based estimation together with the optimal
pilot/data power split.

All logarithms here are natural; dB outputs convert explicitly.  The
closed-form log-determinant limit drops the inter-stream interference
term, so it describes a single transmit stream (n_tx = 1) and needs
reasonably high SNR; see `log_psi_limit`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .channel import SystemConfig
from .exceptions import NumericalError
from .linalg import gauss_legendre

__all__ = [
    "PowerSplit",
    "DiversityReport",
    "lambda_pp",
    "limit_spectrum",
    "log_psi_limit",
    "diversity_order",
    "coding_gain_bounds",
    "coding_gain_loss",
    "optimal_power_split",
    "diversity_report",
    "config_for_total_snr",
    "log_sin_integral",
]

LN10 = np.log(10.0)


@dataclass(frozen=True)
class PowerSplit:
    """Pilot SNR tied to data SNR as gamma_p = b * gamma_c^xi."""

    b: float
    xi: float = 1.0

    def __post_init__(self):
        if not (self.b > 0):
            raise ValueError(f"b must be > 0, got {self.b!r}")


@dataclass(frozen=True)
class DiversityReport:
    order: float
    gain_loss_db: float
    optimal_b: float
    min_loss_db: float


def lambda_pp(omega: float, delta: float) -> float:
    """Limiting spectrum of the pilot-sampled process at frequency omega:
    2 / sqrt(delta^2 - omega^2) inside the band |omega| < delta, else 0.

    The band edge (where the density diverges) is mapped to 0; it is a
    measure-zero set and keeps grid evaluations deterministic.
    """
    if not (delta > 0):
        raise ValueError(f"delta must be > 0, got {delta!r}")
    if abs(omega) > np.pi:
        raise ValueError(f"omega must lie in [-pi, pi], got {omega!r}")
    if abs(omega) >= delta:
        return 0.0
    return 2.0 / np.sqrt(delta * delta - omega * omega)


def limit_spectrum(cfg: SystemConfig, n_points: int) -> np.ndarray:
    """Limiting eigenvalues of the SER determinant matrix on the DFT grid
    omega_n = 2 pi (n-1)/n_points, folded to (-pi, pi].

    Out-of-band frequencies give exactly 0 (the limit of the formula as
    the spectrum vanishes).
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    delta = cfg.delta
    omega = 2.0 * np.pi * np.arange(n_points) / n_points
    omega = np.where(omega > np.pi, omega - 2.0 * np.pi, omega)
    lam = np.array([lambda_pp(w, delta) if delta > 0 else 0.0 for w in omega])
    out = np.zeros(n_points)
    inside = lam > 0
    l_in = lam[inside]
    g_p, g_c, n_tx = cfg.gamma_p, cfg.gamma_c, cfg.n_tx
    inner = l_in * l_in / ((n_tx / g_p) * l_in + (1.0 / g_c) * l_in + 1.0 / (g_p * g_c))
    out[inside] = 1.0 / (n_tx - 1.0 + 1.0 / inner)
    return out


def log_psi_limit(cfg: SystemConfig, c: float, perfect_csi: bool = False) -> float:
    """Closed-form limit of log det(I + c A)/N as N grows.

    With estimated CSI this is the five-term expression in delta, gamma_p,
    gamma_c and gamma_t; with perfect CSI it collapses to two terms.
    Natural logarithm.  Valid for a single transmit stream at high SNR:
    the derivation drops interference from other streams, so for n_tx > 1
    it does not track the finite-N determinant (tested at n_tx = 1 only).

    Raises ValueError when delta >= 2 gamma_t (outside the formula's
    region) and returns the continuous extension 0.0 at f_doppler = 0.
    """
    if not (c > 0):
        raise ValueError(f"c must be > 0, got {c!r}")
    delta = cfg.delta
    if delta == 0.0:
        return 0.0
    g_p, g_c, g_t = cfg.gamma_p, cfg.gamma_c, cfg.gamma_t
    if delta >= 2.0 * g_t:
        raise ValueError(f"delta {delta:.4g} >= 2 gamma_t {2 * g_t:.4g}")
    if perfect_csi:
        return float(delta / np.pi * np.log(2.0 * c * g_c)
                     - (delta * np.log(2.0 * delta) - delta) / np.pi)
    root = np.sqrt(4.0 * g_t * g_t - delta * delta)
    return float(
        delta / np.pi * np.log(4.0 * g_p * g_c * c)
        - (delta * np.log(2.0 * delta) - 2.0 * delta) / np.pi
        - delta * np.log(2.0 * g_t) / np.pi
        - (g_t - 0.5 * root)
        - root / np.pi * np.arctan(np.sqrt(delta * delta / (4.0 * g_t * g_t - delta * delta)))
    )


def diversity_order(f_doppler: float, n_rx: int, xi: float) -> float:
    """Normalized Doppler diversity order 2 f_D N_R min(xi, 1/xi);
    maximal (2 f_D N_R) at xi = 1."""
    if not (xi > 0):
        raise ValueError(f"xi must be > 0, got {xi!r}")
    return 2.0 * f_doppler * n_rx * (xi if xi <= 1.0 else 1.0 / xi)


def log_sin_integral(upper: float, tol: float = 1e-6) -> float:
    """integral_0^upper 2 ln(sin theta) d theta by Gauss-Legendre node
    doubling.  The integrable ln(theta) endpoint singularity is split off
    in closed form; GL (which never samples the endpoint) then sees the
    analytic remainder 2 ln(sin theta / theta) and converges fast."""
    closed = 2.0 * (upper * np.log(upper) - upper)
    prev = None
    nodes = 64
    while nodes <= 1024:
        x, w = gauss_legendre(nodes)
        theta = 0.5 * upper * (x + 1.0)
        val = closed + float(np.sum(
            0.5 * upper * w * 2.0 * np.log(np.sin(theta) / theta)))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        nodes *= 2
    raise NumericalError("log-sin quadrature not converged")


def coding_gain_bounds(cfg: SystemConfig, split: PowerSplit,
                       perfect_csi: bool = False) -> tuple:
    """Lower and upper coding-gain bounds in dB (natural-log internals).

    Only derived for xi = 1; other exponents raise ValueError.  The
    upper-lower gap is the sin-integral correction alone, so it is
    independent of b and K.
    """
    if split.xi != 1.0:
        raise ValueError(f"coding gain bounds require xi = 1, got {split.xi!r}")
    delta = cfg.delta
    if not (delta > 0):
        raise ValueError("coding gain bounds need f_doppler > 0")
    v = 1.0 - 1.0 / cfg.m_psk
    c_m = np.sin(np.pi / cfg.m_psk) ** 2
    log_cl = np.log(2.0 * c_m) + 1.0 - np.log(2.0 * delta)
    if not perfect_csi:
        b, k, n_tx = split.b, cfg.k_block, cfg.n_tx
        log_cl += np.log(k * b / ((k + b) * (n_tx + b)))
    # 2 f_D T_P = delta / pi, so the prefactor is 1/(delta * v)
    correction = log_sin_integral(np.pi * v) / (delta * v)
    log_cu = log_cl - correction
    to_db = 10.0 / LN10
    return float(to_db * log_cl), float(to_db * log_cu)


def coding_gain_loss(n_tx: int, k_block: int, b: float) -> float:
    """dB coding-gain loss of pilot-based estimation at power split b:
    10 log10[(K + b)(N_T + b) / (K b)]."""
    if not (b > 0):
        raise ValueError(f"b must be > 0, got {b!r}")
    return float(10.0 * np.log10((k_block + b) * (n_tx + b) / (k_block * b)))


def optimal_power_split(n_tx: int, k_block: int) -> tuple:
    """The loss-minimizing split: b = sqrt(N_T K) at xi = 1, with minimum
    loss 20 log10(1 + sqrt(N_T / K)) dB.  Returns (PowerSplit, loss_db)."""
    if n_tx < 1 or k_block < 1:
        raise ValueError("antenna and block counts must be >= 1")
    b = float(np.sqrt(n_tx * k_block))
    loss = float(20.0 * np.log10(1.0 + np.sqrt(n_tx / k_block)))
    return PowerSplit(b=b, xi=1.0), loss


def diversity_report(cfg: SystemConfig, split: PowerSplit) -> DiversityReport:
    opt, min_loss = optimal_power_split(cfg.n_tx, cfg.k_block)
    return DiversityReport(
        order=diversity_order(cfg.f_doppler, cfg.n_rx, split.xi),
        gain_loss_db=coding_gain_loss(cfg.n_tx, cfg.k_block, split.b),
        optimal_b=opt.b,
        min_loss_db=min_loss,
    )


def config_for_total_snr(cfg: SystemConfig, gamma0_db: float,
                         split: PowerSplit) -> SystemConfig:
    """Config whose energies realize total SNR gamma_0 = gamma_p/K + gamma_c
    under the split gamma_p = b gamma_c^xi (gamma_0 given in dB).

    gamma_0 prices the pilot energy at 1/K per data symbol, i.e. the
    energy cost of transmitting one coded symbol.
    """
    g0 = 10.0 ** (gamma0_db / 10.0)
    b, xi = split.b, split.xi
    k = cfg.k_block
    if xi == 1.0:
        g_c = g0 / (1.0 + b / k)
    else:
        g_c = brentq(lambda g: b * g ** xi / k + g - g0, 1e-15, g0)
    g_p = b * g_c ** xi
    return replace(cfg, e_pilot=g_p * cfg.noise_var, e_data=g_c * cfg.noise_var)
