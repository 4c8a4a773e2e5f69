import math

import numpy as np
import pytest
from scipy import stats

from coaxline.dispersive import (
    CoherenceSet,
    DispersiveSet,
    PhysicalityWarning,
    detuning,
    deviation_table,
    lifetime_from_q,
    pure_dephasing,
    purcell_check,
    q_from_lifetime,
    spearman_rho,
)
from coaxline.errors import (
    IncompleteSetError,
    InvalidInputError,
    NonPhysicalDephasingError,
)

# Representative single-device numbers (MHz and us converted to SI here).
TABLE_MEASURED = dict(
    omega_q=5441.9e6, omega_r=9269.5e6, chi_qr=-2.31e6, chi_qq=-238.5e6,
    kappa_r=3.7e3, kappa_q=1.4e4, p_e=0.02,
)
TABLE_SIMULATED = dict(
    omega_q=5828.3e6, omega_r=9338.0e6, chi_qr=-2.74e6, chi_qq=-236.9e6,
    chi_rr=-8e3, kappa_q=3.6e1,
)


def test_q_from_lifetime_storage_device():
    q = q_from_lifetime(7160.7e6, 250e-6)
    assert q == pytest.approx(2 * math.pi * 7160.7e6 * 250e-6, rel=1e-12)
    assert q == pytest.approx(11.25e6, rel=5e-3)


def test_q_from_lifetime_unit_construction():
    f = 4.931e9
    assert q_from_lifetime(f, 1.0 / (2 * math.pi * f)) == pytest.approx(1.0, rel=1e-12)


def test_q_from_linewidth_equivalent():
    # T1 = 1/(2*pi*kappa) gives Q = f/kappa
    f, kappa = 9269.5e6, 3.7e3
    q = q_from_lifetime(f, 1.0 / (2 * math.pi * kappa))
    assert q == pytest.approx(f / kappa, rel=1e-12)
    assert q == pytest.approx(2.505e6, rel=1e-3)


def test_lifetime_q_round_trip(rng):
    for _ in range(200):
        f = rng.uniform(1e9, 12e9)
        t1 = rng.uniform(1e-6, 1e-2)
        assert lifetime_from_q(f, q_from_lifetime(f, t1)) == pytest.approx(t1, rel=1e-12)


def test_q_from_lifetime_validation():
    with pytest.raises(InvalidInputError):
        q_from_lifetime(-1e9, 1e-6)
    with pytest.raises(InvalidInputError):
        q_from_lifetime(1e9, math.inf)
    with pytest.raises(InvalidInputError):
        lifetime_from_q(1e9, 0.0)


def test_pure_dephasing_values():
    c = CoherenceSet(t1=69.9e-6, t2_star=21.4e-6, t2_echo=29.2e-6)
    # scalar oracle: 1/(1/29.2 - 1/139.8) us
    assert pure_dephasing(c, "echo") == pytest.approx(
        1.0 / (1.0 / 29.2e-6 - 1.0 / 139.8e-6), rel=1e-12
    )
    assert pure_dephasing(c, "echo") == pytest.approx(36.9e-6, rel=1e-3)
    c1a = CoherenceSet(t1=47e-6, t2_echo=62e-6)
    assert pure_dephasing(c1a, "echo") == pytest.approx(182.125e-6, rel=1e-6)


def test_pure_dephasing_lifetime_limit():
    c = CoherenceSet(t1=50e-6, t2_echo=100e-6 * (1 + 1e-9))
    assert pure_dephasing(c, "echo") == math.inf


def test_pure_dephasing_nonphysical():
    with pytest.warns(PhysicalityWarning):
        c = CoherenceSet(t1=50e-6, t2_echo=120e-6)
    with pytest.raises(NonPhysicalDephasingError):
        pure_dephasing(c, "echo")


def test_pure_dephasing_monotone(rng):
    for _ in range(200):
        t1 = rng.uniform(1e-6, 1e-3)
        t2a = rng.uniform(0.05, 0.9) * 2 * t1
        t2b = rng.uniform(t2a / (2 * t1), 0.95) * 2 * t1
        if t2b <= t2a:
            continue
        ca = CoherenceSet(t1=t1, t2_echo=t2a)
        cb = CoherenceSet(t1=t1, t2_echo=t2b)
        assert pure_dephasing(cb, "echo") > pure_dephasing(ca, "echo")


def test_pure_dephasing_missing_field():
    with pytest.raises(IncompleteSetError):
        pure_dephasing(CoherenceSet(t1=50e-6), "echo")
    with pytest.raises(InvalidInputError):
        pure_dephasing(CoherenceSet(t1=50e-6, t2_echo=30e-6), "hahn")


def test_detuning():
    dset = DispersiveSet(**TABLE_MEASURED)
    assert detuning(dset) == pytest.approx(-3827.6e6, rel=1e-12)
    assert detuning(DispersiveSet(omega_q=5e9, omega_r=5e9)) == 0.0
    d5a = DispersiveSet(omega_q=5672.8e6, omega_r=9542.1e6)
    assert detuning(d5a) == pytest.approx(-3869.3e6, rel=1e-12)
    with pytest.raises(IncompleteSetError):
        detuning(DispersiveSet(omega_q=5e9))


def test_deviation_table_values():
    rows = deviation_table(DispersiveSet(**TABLE_MEASURED), DispersiveSet(**TABLE_SIMULATED))
    by_name = {r.name: r for r in rows}
    # normalization is by the measured value (documented convention)
    assert by_name["omega_q"].deviation_pct == pytest.approx(
        100 * abs(5441.9 - 5828.3) / 5441.9, rel=1e-12
    )
    assert by_name["omega_q"].deviation_pct == pytest.approx(7.1, abs=0.05)
    assert by_name["chi_qq"].deviation_pct == pytest.approx(0.7, abs=0.05)
    # chi_rr is simulated-only: stored but never compared
    assert "chi_rr" not in by_name
    assert "kappa_r" not in by_name  # measured-only


def test_deviation_table_identical_sets():
    dset = DispersiveSet(**TABLE_MEASURED)
    assert all(r.deviation_pct == 0.0 for r in deviation_table(dset, dset))


def test_deviation_table_no_overlap():
    with pytest.raises(IncompleteSetError):
        deviation_table(DispersiveSet(omega_q=5e9), DispersiveSet(omega_r=9e9))


def test_deviation_table_swap_symmetry():
    # swapping arguments changes only the normalization: the absolute
    # differences |m - s| implied by each direction agree
    measured = DispersiveSet(**TABLE_MEASURED)
    simulated = DispersiveSet(**TABLE_SIMULATED)
    fwd = {r.name: r for r in deviation_table(measured, simulated)}
    rev = {r.name: r for r in deviation_table(simulated, measured)}
    for name, row in fwd.items():
        assert row.deviation_pct * abs(row.measured) == pytest.approx(
            rev[name].deviation_pct * abs(rev[name].measured), rel=1e-12
        )


def test_purcell_check_table_values():
    check = purcell_check(DispersiveSet(**TABLE_SIMULATED), TABLE_MEASURED["kappa_q"])
    assert check.ratio == pytest.approx(1.4e4 / 3.6e1, rel=1e-12)
    assert check.ratio == pytest.approx(389, rel=2e-3)
    assert check.classification == "other-loss-dominated"


def test_purcell_check_boundary():
    sim = DispersiveSet(kappa_q=1e3)
    assert purcell_check(sim, 1e3).classification == "Purcell-limited"
    assert purcell_check(sim, 1.999e3).classification == "Purcell-limited"
    assert purcell_check(sim, 2.1e3).classification == "other-loss-dominated"
    with pytest.raises(IncompleteSetError):
        purcell_check(DispersiveSet(), 1e3)
    with pytest.raises(InvalidInputError):
        purcell_check(sim, -1.0)


def test_spearman_against_scipy(rng):
    for _ in range(50):
        x = rng.normal(size=20)
        y = 0.5 * x + rng.normal(size=20)
        ref = stats.spearmanr(x, y).statistic
        assert spearman_rho(x, y) == pytest.approx(ref, abs=1e-12)
    # ties handled by average ranks
    x = np.array([1.0, 1.0, 2.0, 3.0, 3.0, 4.0])
    y = np.array([2.0, 1.0, 3.0, 5.0, 4.0, 6.0])
    assert spearman_rho(x, y) == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-12)


def test_spearman_storage_purcell_trend():
    # readout linewidth vs storage lifetime across the 13-device table:
    # larger kappa_r should rank with smaller storage T1
    kappa_r = [4.14, 0.34, 4.50, 0.46, 2.88, 2.15, 1.02, 5.43, 5.89, 0.27, 9.47, 8.65, 2.57]
    t1_s = [37, 143, 37, 85, 121, 91, 250, 112, 121, 154, 25, 66, 154]
    rho = spearman_rho(kappa_r, t1_s)
    assert rho == pytest.approx(stats.spearmanr(kappa_r, t1_s).statistic, abs=1e-12)
    assert rho < -0.5


def test_dispersive_set_validation():
    with pytest.raises(InvalidInputError):
        DispersiveSet(omega_q=-5e9)
    with pytest.raises(InvalidInputError):
        DispersiveSet(omega_q=math.nan)
    with pytest.raises(InvalidInputError):
        DispersiveSet(kappa_r=0.0)
    with pytest.raises(InvalidInputError):
        DispersiveSet(p_e=1.0)
    with pytest.warns(PhysicalityWarning):
        DispersiveSet(chi_qq=-3e6, chi_qr=-2e6)


def test_coherence_set_validation():
    with pytest.raises(InvalidInputError):
        CoherenceSet(t1=-1e-6)
    with pytest.warns(PhysicalityWarning):
        CoherenceSet(t1=10e-6, t2_echo=25e-6)
