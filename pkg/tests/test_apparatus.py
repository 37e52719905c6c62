"""Instrument model: rate law, contrast lookup, reference parameters."""

import math

import numpy as np
import pytest

from spinpath import (
    CONTRAST_LIMITED_S,
    IDEAL_S,
    REFERENCE_EXPECTATIONS,
    REFERENCE_S,
    ApparatusModel,
    DomainError,
    ScanPlan,
    Setting,
    bell_state,
    expectation,
    ideal_expectation,
    predicted_rate,
    reference_apparatus,
)
from spinpath.apparatus import (
    REFERENCE_CHI_POSITIONS,
    REFERENCE_PATH_CONTRAST,
    REFERENCE_PHASE_OFFSET,
    REFERENCE_SPIN_CONTRAST,
)


def test_predicted_rate_uniform_contrast():
    model = ApparatusModel(mean_rate=1000.0, default_visibility=0.73, phase_offset=math.pi)
    got = predicted_rate(model, Setting(0.0, 0.79 * math.pi))
    want = 1000.0 * (1.0 + 0.73 * math.cos(1.79 * math.pi))
    assert abs(got - want) < 1e-9
    assert abs(got - 1576.8) < 0.1


def test_predicted_rate_at_quadrature_is_mean_rate():
    model = ApparatusModel(mean_rate=250.0, default_visibility=0.9)
    got = predicted_rate(model, Setting(math.pi / 2.0, 0.0))
    assert abs(got - 250.0) < 1e-9


def test_predicted_rate_never_negative():
    model = ApparatusModel(mean_rate=5.0, default_visibility=1.0, phase_offset=2.2)
    rng = np.random.default_rng(21)
    for _ in range(10_000):
        rate = predicted_rate(model, Setting(rng.uniform(0.0, 7.0), rng.uniform(0.0, 7.0)))
        assert rate >= 0.0


def test_rate_periodic_in_both_angles():
    model = reference_apparatus(100.0)
    rng = np.random.default_rng(22)
    for _ in range(50):
        alpha = rng.uniform(0.0, 2.0 * math.pi)
        chi = rng.uniform(0.0, 2.0 * math.pi)
        base = predicted_rate(model, Setting(alpha, chi))
        assert abs(predicted_rate(model, Setting(alpha + 2.0 * math.pi, chi)) - base) < 1e-9
        assert abs(predicted_rate(model, Setting(alpha, chi - 4.0 * math.pi)) - base) < 1e-9


def test_visibility_lookup():
    model = reference_apparatus()
    assert model.visibility(0.0) == 0.76
    assert model.visibility(math.pi / 2.0) == 0.73
    assert model.visibility(math.pi) == 0.73
    assert model.visibility(2.0 * math.pi) == 0.76  # circular match
    assert model.visibility(1.3) == 0.73  # falls back to the default


def test_ideal_expectation_reference_point():
    model = reference_apparatus()
    got = ideal_expectation(model, Setting(0.0, 0.79 * math.pi))
    want = 0.76 * math.cos(1.79 * math.pi)
    assert abs(got - want) < 1e-12
    assert abs(got - 0.6005) < 5e-4


def test_modeled_correlations_match_reference_magnitudes():
    # the four-channel estimator on this instrument gives the noiseless
    # correlation -Vbar * cos(alpha + chi), averaging the contrasts of the
    # alpha and alpha + pi fringes
    model = reference_apparatus()

    def modeled(alpha, chi):
        vbar = 0.5 * (model.visibility(alpha) + model.visibility(alpha + math.pi))
        return -vbar * math.cos(alpha + chi)

    # alpha = 0 group: both values positive, like the reference pair
    assert abs(modeled(0.0, 0.79 * math.pi) - 0.542) < 0.06
    assert abs(modeled(0.0, 1.29 * math.pi) - 0.4882) < 0.06
    # alpha = pi/2 group: one of each sign on both sides, but the negative
    # value sits at the other phase position, so compare by sign
    a = modeled(math.pi / 2.0, 0.79 * math.pi)
    b = modeled(math.pi / 2.0, 1.29 * math.pi)
    assert a > 0.0 > b
    assert abs(a - 0.438) < 0.06
    assert abs(abs(b) - 0.538) < 0.06


def test_ideal_expectation_degenerates_to_exact_law():
    # offset zero and unit contrast reproduce the exact entangled-state result
    model = ApparatusModel(mean_rate=10.0, default_visibility=1.0, phase_offset=0.0)
    state = bell_state()
    rng = np.random.default_rng(23)
    for _ in range(100):
        setting = Setting(rng.uniform(0.0, 7.0), rng.uniform(0.0, 7.0))
        assert abs(ideal_expectation(model, setting) - expectation(state, setting)) < 1e-12


def test_ideal_expectation_scales_with_contrast():
    rng = np.random.default_rng(24)
    for _ in range(50):
        v = rng.uniform(0.0, 1.0)
        model = ApparatusModel(mean_rate=10.0, default_visibility=v, phase_offset=0.0)
        setting = Setting(rng.uniform(0.0, 7.0), rng.uniform(0.0, 7.0))
        want = v * math.cos(setting.alpha + setting.chi)
        assert abs(ideal_expectation(model, setting) - want) < 1e-12


def test_model_validation():
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=0.0)
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=-3.0)
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=10.0, default_visibility=1.5)
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=10.0, visibility_map=((0.0, -0.2),))
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=10.0, drift_sigma=-0.1)
    with pytest.raises(DomainError):
        ApparatusModel(mean_rate=math.inf)


def test_scan_plan_validation():
    with pytest.raises(DomainError):
        ScanPlan(alpha=0.0, chi_values=())
    with pytest.raises(DomainError):
        ScanPlan(alpha=0.0, chi_values=(0.0, math.nan))
    with pytest.raises(DomainError):
        ScanPlan(alpha=0.0, chi_values=(0.0, 1.0), exposures=0)
    with pytest.raises(DomainError):
        ScanPlan(alpha=0.0, chi_values=(0.0, 1.0), exposures=2.0)
    plan = ScanPlan(alpha=-math.pi, chi_values=(0.5,))
    assert abs(plan.alpha - math.pi) < 1e-12


def test_reference_constants():
    assert abs(IDEAL_S - 2.0 * math.sqrt(2.0)) < 1e-15
    assert abs(CONTRAST_LIMITED_S - 2.0 * math.sqrt(2.0) * 0.73) < 1e-12
    assert REFERENCE_S == 2.051
    assert REFERENCE_PHASE_OFFSET == math.pi
    assert REFERENCE_CHI_POSITIONS == (0.79 * math.pi, 1.29 * math.pi)
    assert REFERENCE_PATH_CONTRAST == 0.91
    assert REFERENCE_SPIN_CONTRAST == 0.95
    assert len(REFERENCE_EXPECTATIONS) == 4
    values = [r.value for r in REFERENCE_EXPECTATIONS]
    assert values == [0.542, 0.4882, -0.538, 0.438]


def test_reference_table_reproduces_published_sum():
    # negating the one negative term combines the published correlations
    # into their published CHSH sum
    total = sum(abs(r.value) for r in REFERENCE_EXPECTATIONS)
    assert abs(total - 2.0062) < 1e-12
    sigma = math.sqrt(sum(r.sigma**2 for r in REFERENCE_EXPECTATIONS))
    assert abs(sigma - 0.019) < 5e-4
    assert abs(total - REFERENCE_S) < 3.0 * 0.019
