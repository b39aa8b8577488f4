"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Monte Carlo tolerances follow the frame-level standard error reported by
the simulator (conservative under within-frame correlation).  Runtime of
the whole module is a few minutes on a laptop-class machine.
"""

import time

import numpy as np
import pytest

import dopmimo as dm
from dopmimo import Receiver
from dopmimo.channel import complex_normal
from dopmimo.diversity import PowerSplit, config_for_total_snr
from dopmimo.estimation import estimation_covariances
from dopmimo.linalg import KronCov, psd_inv_sqrt

from helpers import eq_unreduced_estimate

SV = dict(n_tx=4, k_block=16, t_symbol=1e-5, e_pilot=10.0, e_data=10.0,
          noise_var=1.0, m_psk=4)
RECEIVERS = (Receiver.MRC, Receiver.MRC_LIKE, Receiver.MMSE)


def report(criterion: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}"
    if detail:
        line += f" :: {detail}"
    print(line)
    return ok


# ---------------------------------------------------------------------------


def test_criterion_1_rate_agreement():
    """Monte Carlo mean rates vs asymptotic rates, every receiver,
    N in {5, 10, 15} at 200 Hz with 4 receive antennas: within 5%."""
    start = time.time()
    rows = []
    worst = 0.0
    for n in (5, 10, 15):
        cfg = dm.SystemConfig(n_rx=4, n_rep=n, f_doppler=200.0, **SV)
        mc = dm.monte_carlo_rates(cfg, 1, RECEIVERS, trials=2000, seed=1)
        for rec in RECEIVERS:
            asym = dm.asymptotic_rate(cfg, rec, 1)
            rel = abs(mc[rec][0] - asym) / asym
            worst = max(worst, rel)
            rows.append((n, rec.value, mc[rec][0], asym, rel))
    elapsed = time.time() - start
    detail = "; ".join(f"N={n} {r}: mc={m:.4f} asym={a:.4f} rel={e:.1%}"
                       for n, r, m, a, e in rows)
    ok = worst < 0.05 and elapsed < 300
    report("criterion 1: asymptotic-vs-ergodic rate agreement (<5%)", ok, detail)
    assert elapsed < 300
    assert worst < 0.05, (
        "finite-size mean rates deviate from the large-system limits by "
        f"up to {worst:.1%} at these dimensions; see decisions ledger")


def test_criterion_2_receiver_ordering():
    """MMSE >= whitened-MRC >= MRC in both Monte Carlo (within one
    standard error) and asymptotic rates at the acceptance scenarios."""
    ok = True
    details = []
    scenarios = [dm.SystemConfig(n_rx=4, n_rep=n, f_doppler=200.0, **SV)
                 for n in (5, 10, 15, 30)]
    scenarios += [dm.SystemConfig(n_rx=8, n_rep=15, f_doppler=f, **SV)
                  for f in (200.0, 1000.0)]
    for cfg in scenarios:
        asym = {rec: dm.asymptotic_rate(cfg, rec, 1) for rec in RECEIVERS}
        if not (asym[Receiver.MMSE] >= asym[Receiver.MRC_LIKE] >= asym[Receiver.MRC]):
            ok = False
            details.append(f"asym ordering broken at {cfg.n_rep=}, {cfg.f_doppler=}")
        mc = dm.monte_carlo_rates(cfg, 1, RECEIVERS, trials=400, seed=2)
        se = {rec: mc[rec][1] / 1.96 for rec in RECEIVERS}
        pairs = ((Receiver.MMSE, Receiver.MRC_LIKE), (Receiver.MRC_LIKE, Receiver.MRC))
        for hi, lo in pairs:
            if mc[hi][0] < mc[lo][0] - (se[hi] + se[lo]):
                ok = False
                details.append(f"mc ordering broken at {cfg.n_rep=}: {hi} < {lo}")
    report("criterion 2: receiver ordering MMSE >= MRC-like >= MRC", ok,
           "; ".join(details) or f"{len(scenarios)} scenarios")
    assert ok, details


def test_criterion_3_rate_decreases_and_gap_shrinks():
    """Normalized rates strictly decrease in N; the MMSE-MRC gap at
    N = 30 is below the N = 5 gap."""
    rates = {}
    for n in (5, 10, 15, 30):
        cfg = dm.SystemConfig(n_rx=4, n_rep=n, f_doppler=200.0, **SV)
        for rec in RECEIVERS:
            rates[(rec, n)] = dm.asymptotic_rate(cfg, rec, 1)
    decreasing = all(rates[(rec, a)] > rates[(rec, b)]
                     for rec in RECEIVERS for a, b in ((5, 10), (10, 15), (15, 30)))
    gap5 = rates[(Receiver.MMSE, 5)] - rates[(Receiver.MRC, 5)]
    gap30 = rates[(Receiver.MMSE, 30)] - rates[(Receiver.MRC, 30)]
    ok = decreasing and gap30 < gap5
    report("criterion 3: rates decrease in N and the receiver gap shrinks", ok,
           f"gap N=5: {gap5:.3f} -> N=30: {gap30:.3f}")
    assert ok


def test_criterion_4_doppler_benefit():
    """Higher Doppler helps MRC-style receivers; MMSE barely moves."""
    changes = {}
    for rec in RECEIVERS:
        lo = dm.asymptotic_rate(dm.SystemConfig(n_rx=8, n_rep=15, f_doppler=200.0, **SV), rec, 1)
        hi = dm.asymptotic_rate(dm.SystemConfig(n_rx=8, n_rep=15, f_doppler=1000.0, **SV), rec, 1)
        changes[rec] = (lo, hi, (hi - lo) / lo)
    ok = (changes[Receiver.MRC][1] > changes[Receiver.MRC][0]
          and changes[Receiver.MRC_LIKE][1] > changes[Receiver.MRC_LIKE][0]
          and abs(changes[Receiver.MMSE][2]) < abs(changes[Receiver.MRC][2]))
    report("criterion 4: Doppler increase benefits MRC receivers most", ok,
           "; ".join(f"{r.value}: {a:.3f}->{b:.3f} ({c:+.1%})"
                     for r, (a, b, c) in changes.items()))
    assert ok


def test_criterion_5_analytic_ser_validity():
    """Monte Carlo SER (>= 1e5 decisions) within the 3-sigma band of the
    analytic value at each scenario; high-Doppler SER falls faster in N."""
    ok = True
    details = []
    slopes = {}
    for f_d in (200.0, 1000.0):
        sers = {}
        for n in (4, 8, 15):
            cfg = dm.SystemConfig(n_rx=4, n_rep=n, f_doppler=f_d, **SV)
            ana = dm.analytic_ser_mean(cfg).ser
            mc = dm.monte_carlo_ser(cfg, Receiver.MRC_LIKE, trials=1600, seed=3)
            assert mc.decisions >= 100_000
            sigma = mc.ci_halfwidth / 1.96
            z = abs(mc.ser - ana) / sigma
            sers[n] = ana
            details.append(f"fD={f_d:.0f} N={n}: ana={ana:.5f} mc={mc.ser:.5f} z={z:.2f}")
            if z > 3.0:
                ok = False
        slopes[f_d] = np.log(sers[4]) - np.log(sers[15])
    if not slopes[1000.0] > slopes[200.0]:
        ok = False
        details.append("high-Doppler SER does not decay faster in N")
    report("criterion 5: analytic SER matches Monte Carlo within 3 sigma", ok,
           "; ".join(details))
    assert ok, details


def test_criterion_6_power_split_optimum():
    """Closed-form loss has its stated minimum at b = 8; the end-to-end
    Monte Carlo SER over the same b grid attains its minimum there too
    (within one standard error)."""
    loss8 = dm.coding_gain_loss(4, 16, 8.0)
    closed_ok = abs(loss8 - 3.5218) < 0.001 and all(
        dm.coding_gain_loss(4, 16, b) > loss8 for b in (2.0, 4.0, 16.0, 32.0))
    base = dm.SystemConfig(n_rx=4, n_rep=8, f_doppler=1000.0, **SV)
    mc = {}
    for b in (2.0, 4.0, 8.0, 16.0, 32.0):
        cfg = config_for_total_snr(base, 5.0, PowerSplit(b=b, xi=1.0))
        mc[b] = dm.monte_carlo_ser(cfg, Receiver.MRC_LIKE, trials=1600, seed=4)
    se = {b: r.ci_halfwidth / 1.96 for b, r in mc.items()}
    mc_ok = all(mc[8.0].ser <= mc[b].ser + se[b] for b in mc)
    ok = closed_ok and mc_ok
    report("criterion 6: pilot/data split optimal at b = sqrt(N_T K)", ok,
           f"loss(8)={loss8:.4f} dB; mc: " +
           " ".join(f"b={b:.0f}:{r.ser:.5f}" for b, r in mc.items()))
    assert ok


def test_criterion_7_exponent_optimum():
    """xi = 1 gives the lowest analytic SER at 15 dB total SNR and the
    maximal diversity order 2 f_D N_R."""
    base = dm.SystemConfig(n_rx=4, n_rep=8, f_doppler=1000.0, **SV)
    sers = {}
    for xi in (0.5, 1.0, 2.0):
        cfg = config_for_total_snr(base, 15.0, PowerSplit(b=8.0, xi=xi))
        sers[xi] = dm.analytic_ser_mean(cfg).ser
    orders = {xi: dm.diversity_order(base.f_doppler, base.n_rx, xi)
              for xi in (0.25, 0.5, 1.0, 2.0, 4.0)}
    ok = (sers[1.0] < sers[0.5] and sers[1.0] < sers[2.0]
          and max(orders, key=orders.get) == 1.0
          and orders[1.0] == pytest.approx(2 * base.f_doppler * base.n_rx))
    report("criterion 7: xi = 1 optimal (SER and diversity order)", ok,
           f"ser: {sers}; order(1)={orders[1.0]:.0f}")
    assert ok


def test_criterion_8_oracle_equivalences():
    """Covariance identity and both estimator forms over 50 random
    configs; block-factored fixed point vs dense; MGF vs simulation."""
    rng = np.random.default_rng(8)
    worst_ident = worst_est = 0.0
    for _ in range(50):
        cfg = dm.SystemConfig(
            n_tx=int(rng.integers(1, 5)), n_rx=int(rng.integers(1, 4)),
            k_block=int(rng.integers(1, 17)), n_rep=int(rng.integers(1, 13)),
            f_doppler=float(rng.uniform(0.0, 2500.0)), t_symbol=1e-5,
            e_pilot=float(10 ** rng.uniform(-1, 2)),
            e_data=float(10 ** rng.uniform(-1, 2)))
        t = int(rng.integers(1, cfg.n_tx + 1))
        k = int(rng.integers(1, cfg.k_block + 1))
        r_hat, r_tilde = estimation_covariances(cfg, t, k)
        worst_ident = max(worst_ident, float(np.max(np.abs(
            r_hat + r_tilde - dm.build_pilot_cov(cfg)))))
        y = complex_normal(rng, (cfg.n_rep,))
        worst_est = max(worst_est, float(np.max(np.abs(
            dm.mmse_estimate(y, cfg, t, k) - eq_unreduced_estimate(y, cfg, t, k)))))

    cfg_deq = dm.SystemConfig(n_tx=3, n_rx=2, k_block=4, n_rep=2, f_doppler=2000.0)
    sol = dm.deq_fixed_point(cfg_deq, 1, 1, tol=1e-24)
    s_til = sum(estimation_covariances(cfg_deq, l, 1)[1] for l in (1, 2, 3))
    w = psd_inv_sqrt(s_til + np.eye(2) / cfg_deq.gamma_c)
    eye = np.eye(cfg_deq.n_rx * cfg_deq.n_rep)
    phi = [np.kron(np.eye(cfg_deq.n_rx), w @ estimation_covariances(cfg_deq, l, 1)[0] @ w)
           for l in (2, 3)]
    q = np.kron(np.eye(cfg_deq.n_rx), w @ estimation_covariances(cfg_deq, 1, 1)[0] @ w)
    e = np.zeros(2)
    for _ in range(2000):
        t_full = np.linalg.inv(sum(p / (1 + el) for p, el in zip(phi, e)) + eye)
        e_new = np.array([np.trace(p @ t_full) for p in phi])
        done = np.sum(np.abs(e_new - e) ** 2) <= 1e-24
        e = e_new
        if done:
            break
    deq_gap = abs(sol.sinr_deq - np.trace(q @ t_full))

    cfg_m = dm.SystemConfig(n_tx=2, n_rx=2, k_block=4, n_rep=6, f_doppler=1000.0)
    r_hat, _ = estimation_covariances(cfg_m, 1, 1)
    s_hat = sum(estimation_covariances(cfg_m, l, 1)[0] for l in (1, 2))
    s_til = sum(estimation_covariances(cfg_m, l, 1)[1] for l in (1, 2))
    target = cfg_m.e_data * (s_hat - r_hat + s_til) + cfg_m.noise_var * np.eye(6)
    weight = cfg_m.e_data * np.linalg.inv(target)
    mu = -0.1
    mgf = dm.mgf_quadratic_form(KronCov(r_hat, cfg_m.n_rx), weight, mu)
    chol = np.linalg.cholesky(r_hat + 1e-12 * np.eye(6))
    draws = 100_000
    beta = np.zeros(draws)
    rng2 = np.random.default_rng(9)
    for _ in range(cfg_m.n_rx):
        h = chol @ complex_normal(rng2, (6, draws))
        beta += np.real(np.einsum("it,ij,jt->t", h.conj(), weight, h))
    samples = np.exp(mu * beta)
    mgf_gap_sigmas = abs(samples.mean() - mgf) / (samples.std(ddof=1) / np.sqrt(draws))

    ok = worst_ident < 1e-10 and worst_est < 1e-10 and deq_gap < 1e-8 \
        and mgf_gap_sigmas < 3.0
    report("criterion 8: oracle equivalences", ok,
           f"identity {worst_ident:.2e}; estimator forms {worst_est:.2e}; "
           f"deq dense gap {deq_gap:.2e}; MGF {mgf_gap_sigmas:.2f} sigma")
    assert ok


def test_criterion_9_spectrum_and_logdet_limits():
    """Finite covariance spectra and log determinants against their
    closed-form limits.  The log-det form drops inter-stream
    interference, so its check runs single-stream (see ledger)."""
    from dopmimo.ser import _a_spectrum

    cfg = dm.SystemConfig(n_rx=4, n_rep=256, f_doppler=200.0, **SV)
    finite = np.sort(np.asarray(_a_spectrum(cfg, 1, 1)))[::-1]
    lim = np.sort(dm.limit_spectrum(cfg, 256))[::-1]
    m = int(np.sum(lim > 0))
    lo, hi = int(np.ceil(0.05 * m)), int(np.floor(0.95 * m))
    spec_err = float(np.max(np.abs(finite[lo:hi] - lim[lo:hi]) / lim[lo:hi]))

    cfg1 = dm.SystemConfig(n_tx=1, n_rx=4, k_block=16, n_rep=512,
                           f_doppler=1000.0, e_pilot=100.0, e_data=100.0)
    c = np.sin(np.pi / cfg1.m_psk) ** 2
    ev = np.asarray(_a_spectrum(cfg1, 1, 1))
    finite_ld = float(np.sum(np.log1p(c * ev)) / cfg1.n_rep)
    limit_ld = dm.log_psi_limit(cfg1, c)
    ld_err = abs(finite_ld - limit_ld) / abs(limit_ld)

    ok = spec_err < 0.05 and ld_err < 0.05
    report("criterion 9: limiting spectrum and log-determinant", ok,
           f"bulk spectrum err {spec_err:.2%}; logdet err {ld_err:.2%}")
    assert ok


def test_criterion_10_determinism(tmp_path):
    """Byte-identical CSV across reruns and worker counts."""
    docs = [
        {"name": "det-rate", "kind": "rate_sweep",
         "base_config": {"n_tx": 2, "n_rx": 2, "k_block": 4, "n_rep": 4,
                         "f_doppler": 1000.0, "t_symbol": 1e-5,
                         "pilot_snr_db": 10.0, "data_snr_db": 10.0, "m_psk": 4},
         "sweep": {"parameter": "n_rep", "values": [3, 4]},
         "trials": 12, "seed": 31},
        {"name": "det-ser", "kind": "ser_sweep",
         "base_config": {"n_tx": 2, "n_rx": 2, "k_block": 4, "n_rep": 4,
                         "f_doppler": 1000.0, "t_symbol": 1e-5,
                         "pilot_snr_db": 10.0, "data_snr_db": 10.0, "m_psk": 4},
         "sweep": {"parameter": "snr_db", "values": [5, 10]},
         "trials": 12, "seed": 32, "receivers": ["mrc_like"]},
    ]
    ok = True
    for doc in docs:
        spec = dm.parse_spec(doc)
        outputs = []
        for threads in (1, 3, 1):
            path = tmp_path / f"{doc['name']}-{len(outputs)}.csv"
            dm.emit_csv(dm.run_experiment(spec, threads=threads), path)
            outputs.append(path.read_bytes())
        ok = ok and outputs[0] == outputs[1] == outputs[2]
    report("criterion 10: byte-identical CSV across worker counts", ok)
    assert ok
