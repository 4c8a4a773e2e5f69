import numpy as np
import pytest

from coaxline import kernels
from coaxline.resonance import HangerModelParams, synthesize_trace


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the JIT kernels once so timed tests exclude compilation."""
    kernels.warmup()


@pytest.fixture(scope="session")
def sample_params():
    """Representative published-device parameters used as round-trip targets."""
    return HangerModelParams(
        f0=7.7e9, qi=5.98e6, qc_mag=4.27e6, phi=0.1, amp=0.9, theta0=0.3, tau=40e-9
    )


@pytest.fixture(scope="session")
def sample_trace(sample_params):
    span = 5.0 * sample_params.f0 / sample_params.ql
    return synthesize_trace(sample_params, 401, span, snr_db=60, seed=42)


def make_device_table_csv() -> str:
    """Thirteen-device readout/storage table (MHz and microseconds)."""
    rows = [
        # device, w_q, w_s, w_r, chi_qr, chi_qs, kappa_r, t1, t2*, t2, t1_s,
        ("1A", 5509.3, 6990.0, 9350.9, 3.10, 1.84, 4.14, 47, 28, 62, 37),
        ("1C", 5431.1, 7125.7, 9406.5, None, 2.00, 0.34, 68, 26, 41, 143),
        ("2B", 5423.7, 7035.1, 9377.7, 2.55, 1.76, 4.50, 43, 18, 47, 37),
        ("2C", 5362.8, 7124.8, 9436.1, None, 1.34, 0.46, 51, 13, 78, 85),
        ("3A", 5573.9, 7065.5, 9447.5, 2.38, 1.85, 2.88, 62, 9, 51, 121),
        ("3B", 5345.8, 7066.2, 9442.8, 2.47, 1.59, 2.15, 62, 49, 59, 91),
        ("3C", 5378.8, 7160.7, 9493.3, None, 1.58, 1.02, 72, 23, 69, 250),
        ("4A", 5551.2, 7093.6, 9464.7, 2.64, 1.97, 5.43, 55, 33, 41, 112),
        ("4B", 5417.2, 7098.2, 9475.0, 1.60, 1.59, 5.89, 41, 15, 56, 121),
        ("4C", 5269.8, 7158.0, 9511.7, None, 1.35, 0.27, 13, 0.2, 4, 154),
        ("5A", 5672.8, 7108.0, 9542.1, 1.62, 1.97, 9.47, 23, 21, 20, 25),
        ("5B", 5540.8, 7098.0, 9536.0, 0.08, 1.68, 8.65, 26, 18, 21, 66),
        ("5C", 5459.6, 7228.0, 9607.2, None, 1.67, 2.57, 36, 14, 33, 154),
    ]
    header = (
        "device,omega_q_mhz,omega_s_mhz,omega_r_mhz,chi_qr_mhz,chi_qs_mhz,"
        "kappa_r_mhz,t1_us,t2_star_us,t2_us,t1_s_us"
    )
    lines = [header]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    return "\n".join(lines) + "\n"


def make_loss_budget_csv() -> str:
    """Five-source loss budget with established material bounds."""
    lines = [
        "name,p_min,p_max,q_material,bound_kind",
        "substrate_sapphire,0.4,0.5,1e6:5e6,established_lower_bound",
        "enclosure_conductor,1e-6,1e-5,4400,established_lower_bound",
        "stripline_conductor,1e-3,4e-3,4800,established_lower_bound",
        "stripline_dielectric_interfaces,1e-5,3e-5,380,established_lower_bound",
        "enclosure_dielectric,8e-7,8e-7,750,established_lower_bound",
    ]
    return "\n".join(lines) + "\n"


@pytest.fixture()
def device_table_csv():
    return make_device_table_csv()


@pytest.fixture()
def loss_budget_csv():
    return make_loss_budget_csv()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
