"""Dense reference implementations used as oracles in tests.

Everything here materializes full (n_rx * n_rep)-sized matrices and takes
the formulas literally, trading speed for transparency; the package's
structured implementations must match these.
"""

import numpy as np

from dopmimo import EquivalentModel, SystemConfig, build_pilot_cov, build_cross_cov
from dopmimo.linalg import psd_inv_sqrt


def dense_noise_cov(model: EquivalentModel) -> np.ndarray:
    return np.kron(np.eye(model.n_rx), model.noise_cov_block())


def dense_mrc_sinr(model: EquivalentModel, t: int) -> float:
    h = model.h_col(t)
    hmat = model.h_hat_mat
    others = np.delete(hmat, t - 1, axis=1)
    mid = others @ others.conj().T + dense_noise_cov(model)
    return float(abs(np.vdot(h, h)) ** 2 / np.real(h.conj() @ mid @ h))


def dense_mmse_sinr(model: EquivalentModel, t: int) -> float:
    h = model.h_col(t)
    others = np.delete(model.h_hat_mat, t - 1, axis=1)
    mid = others @ others.conj().T + dense_noise_cov(model)
    return float(np.real(h.conj() @ np.linalg.solve(mid, h)))


def dense_mrc_like_sinr(model: EquivalentModel, t: int) -> float:
    s_hat = model.r_hat_blocks.sum(axis=0) - model.r_hat_block(t)
    s_til = model.r_tilde_blocks.sum(axis=0)
    target = model.e_data * (s_hat + s_til) + model.noise_var * np.eye(model.n_rep)
    w = np.kron(np.eye(model.n_rx), psd_inv_sqrt(target))
    hbar = w @ model.h_col(t)
    hmat_bar = w @ model.h_hat_mat
    others = np.delete(hmat_bar, t - 1, axis=1)
    mid = others @ others.conj().T + w @ dense_noise_cov(model) @ w.conj().T
    return float(abs(np.vdot(hbar, hbar)) ** 2 / np.real(hbar.conj() @ mid @ hbar))


def eq_unreduced_estimate(y_pilot: np.ndarray, cfg: SystemConfig, t: int, k: int) -> np.ndarray:
    """MMSE estimator in its unreduced form (inversion on the observation
    side), with unit pilots: sqrt(E_P) R_ptk X^H (E_P X R_P X^H + s2 I)^-1 y."""
    n = cfg.n_rep
    x_p = np.eye(n)
    r_p = build_pilot_cov(cfg)
    r_ptk = build_cross_cov(cfg, t, k)
    gram = cfg.e_pilot * x_p @ r_p @ x_p.conj().T + cfg.noise_var * np.eye(n)
    return np.sqrt(cfg.e_pilot) * r_ptk @ x_p.conj().T @ np.linalg.solve(gram, y_pilot)


def random_model(cfg: SystemConfig, k: int = 1, seed: int = 0) -> EquivalentModel:
    """An equivalent model from one seeded end-to-end frame."""
    import dopmimo as dm

    real = dm.sample_channel(cfg, (k,), seed)
    return dm.build_equivalent_model(real, seed, cfg, k)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
