import numpy as np
import pytest

from dopmimo import SystemConfig


@pytest.fixture
def small_cfg():
    """Cheap, well-conditioned config for unit checks."""
    return SystemConfig(n_tx=2, n_rx=2, k_block=4, n_rep=6,
                        f_doppler=1000.0, t_symbol=1e-5,
                        e_pilot=10.0, e_data=10.0, noise_var=1.0, m_psk=4)


@pytest.fixture
def ref_cfg():
    """Default evaluation scenario (10 dB SNRs, 4PSK, 200 Hz)."""
    return SystemConfig()


@pytest.fixture
def fig3_cfg():
    """Rate-comparison scenario: 4 receive antennas at 200 Hz."""
    return SystemConfig(n_rx=4)


@pytest.fixture(autouse=True)
def _seeded_numpy():
    # a few tests use module-level randomness through helpers; make the
    # suite order-independent
    np.random.seed(0)
