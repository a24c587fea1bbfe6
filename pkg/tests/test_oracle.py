import math

import numpy as np
import pytest
from mpmath import mp, mpf

from goalsens import Advection1D, Advection1DConfig, FunctionalSpec
from goalsens.engine import SensitivityMap, run_baseline
from goalsens.errors import ConfigError, DimensionMismatch
from goalsens.oracle import OracleConfig, compare_maps, direct_sensitivity, oracle_maps


def binomial_weights(n_cells, k, n_steps, nu):
    """Adjoint of the upwind update: weight of cell j in the final value of cell k."""
    mp.dps = 40
    nu = mpf(nu)
    out = np.zeros(n_cells)
    for j in range(n_cells):
        d = k - j
        if 0 <= d <= n_steps:
            out[j] = float(math.comb(n_steps, d) * nu**d * (1 - nu) ** (n_steps - d))
    return out


def test_final_level_is_indicator(upwind_oracle, upwind):
    g = upwind_oracle[upwind.n_steps].values
    k = upwind.default_functional().target_index
    expected = np.zeros(upwind.n_dof)
    expected[k] = 1.0
    assert np.array_equal(g, expected)


def test_final_level_matches_functional_partial(small_nvd):
    f = FunctionalSpec.time_integral(15)
    traj = run_baseline(small_nvd, f)
    g = direct_sensitivity(small_nvd, f, small_nvd.n_steps, baseline=traj)
    assert np.allclose(g.values, f.partial_wrt_state(traj, small_nvd.n_steps), rtol=1e-8, atol=1e-12)


def test_level_zero_is_binomial(upwind_oracle, upwind):
    k = upwind.default_functional().target_index
    ref = binomial_weights(upwind.n_dof, k, upwind.n_steps, upwind.nu)
    g = upwind_oracle[0].values
    assert np.max(np.abs(g - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_intermediate_level_is_binomial(upwind_oracle, upwind):
    k = upwind.default_functional().target_index
    level = sorted(upwind_oracle)[5]
    ref = binomial_weights(upwind.n_dof, k, upwind.n_steps - level, upwind.nu)
    g = upwind_oracle[level].values
    assert np.max(np.abs(g - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_linear_oracle_independent_of_step(small_upwind):
    f = small_upwind.default_functional()
    maps = [direct_sensitivity(small_upwind, f, 3, OracleConfig(fd_epsilon=h)).values
            for h in (1e-3, 1e-4, 1e-5, 1e-6)]
    for m in maps[1:]:
        assert np.linalg.norm(m - maps[0]) <= 1e-12 * np.linalg.norm(maps[0]) + 1e-12


def test_chunking_and_threads_do_not_change_result(small_nvd):
    f = small_nvd.default_functional()
    a = direct_sensitivity(small_nvd, f, 4, OracleConfig.for_model(small_nvd))
    b = direct_sensitivity(small_nvd, f, 4, OracleConfig.for_model(small_nvd, chunk=3, threads=3))
    assert np.array_equal(a.values, b.values)


def test_nonlinear_model_uses_central_differences(small_nvd, small_upwind):
    assert OracleConfig.for_model(small_nvd).mode == "central-difference"
    assert OracleConfig.for_model(small_upwind).mode == "forward-difference"


def test_oracle_maps_levels(small_upwind):
    maps = oracle_maps(small_upwind, small_upwind.default_functional(), [0, 10, 30])
    assert sorted(maps) == [0, 10, 30]
    assert all(m.level == n for n, m in maps.items())


def test_level_out_of_range(small_upwind):
    with pytest.raises(ConfigError):
        direct_sensitivity(small_upwind, small_upwind.default_functional(), 31)


@pytest.mark.parametrize("kw", [dict(fd_epsilon=0.0), dict(mode="spline"), dict(chunk=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        OracleConfig(**kw)


# comparison metrics

def test_compare_identical():
    a = np.array([0.1, -2.0, 0.5])
    c = compare_maps(a, a)
    assert c.l2_rel_error == 0.0 and c.peak_offset_cells == 0
    assert c.cosine_similarity == pytest.approx(1.0, rel=1e-15)


def test_compare_doubled():
    a = np.array([0.1, -2.0, 0.5])
    c = compare_maps(a, 2 * a)
    assert c.l2_rel_error == pytest.approx(1.0, rel=1e-15)
    assert c.cosine_similarity == pytest.approx(1.0, rel=1e-15)
    assert c.peak_offset_cells == 0


def test_compare_shifted_indicators():
    a, b = np.zeros(10), np.zeros(10)
    a[3], b[5] = 1.0, 1.0
    c = compare_maps(a, b)
    assert c.cosine_similarity == 0.0 and c.peak_offset_cells == 2


def test_compare_zero_map_flagged():
    c = compare_maps(np.ones(4), np.zeros(4))
    assert c.degenerate and c.cosine_similarity == 0.0 and c.l2_rel_error == 1.0


def test_compare_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        compare_maps(np.ones(3), np.ones(4))


def test_compare_level_mismatch():
    with pytest.raises(DimensionMismatch):
        compare_maps(SensitivityMap(1, np.ones(3)), SensitivityMap(2, np.ones(3)))


def test_nvd_oracle_matches_small_central_step_limit():
    # smooth baseline away from zero keeps the limiter on one branch
    m = Advection1D(Advection1DConfig(n_cells=21, n_steps=10, scheme="nvd", initial_value=0.0, inflow_value=1.0))
    f = m.default_functional()
    coarse = direct_sensitivity(m, f, 2, OracleConfig(fd_epsilon=1e-5, mode="central-difference"))
    fine = direct_sensitivity(m, f, 2, OracleConfig(fd_epsilon=1e-7, mode="central-difference"))
    assert np.linalg.norm(coarse.values - fine.values) <= 1e-4 * np.linalg.norm(fine.values)
