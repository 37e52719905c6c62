"""Run-configuration parsing, pi literals, round trips."""

import math

import pytest

from spinpath import ConfigError, RunConfig, config_from_text, load_config, parse_angle
from spinpath.montecarlo import DEFAULT_ALPHAS


def test_parse_angle_pi_literals():
    assert parse_angle("pi") == math.pi
    assert parse_angle("-pi") == -math.pi
    assert parse_angle("0.79pi") == 0.79 * math.pi
    assert parse_angle("1.29pi") == 1.29 * math.pi
    assert parse_angle("pi/2") == math.pi / 2.0
    assert parse_angle("-pi/4") == -math.pi / 4.0
    assert parse_angle("3pi/2") == 3.0 * math.pi / 2.0
    assert parse_angle(".5pi") == 0.5 * math.pi
    assert parse_angle(" PI / 2 ") == math.pi / 2.0


def test_parse_angle_plain_numbers():
    assert parse_angle("2") == 2.0
    assert parse_angle("-0.5") == -0.5
    assert parse_angle("1e-3") == 1e-3


def test_parse_angle_rejects_garbage():
    for bad in ("bogus", "", "pi/0", "2pi3", "pipi"):
        with pytest.raises(ConfigError):
            parse_angle(bad)


def test_defaults_match_reference_instrument():
    cfg = RunConfig(seed=1)
    assert cfg.mean_rate == 40.0
    assert cfg.chi_points == 32
    assert cfg.repetitions == 16
    assert cfg.alphas == DEFAULT_ALPHAS
    assert cfg.alpha1 == 0.0
    assert cfg.alpha2 == math.pi / 2.0
    assert cfg.chi1 == 0.79 * math.pi
    assert cfg.chi2 == 1.29 * math.pi
    assert cfg.sign_convention is None
    model = cfg.apparatus_model()
    assert model.visibility(0.0) == 0.76
    assert model.visibility(math.pi / 2.0) == 0.73
    assert model.phase_offset == math.pi


def test_chi_grid():
    cfg = RunConfig(seed=1, chi_points=8)
    grid = cfg.chi_grid()
    assert len(grid) == 8
    assert grid[0] == 0.0
    for i in range(1, 8):
        assert abs(grid[i] - grid[i - 1] - math.pi / 4.0) < 1e-15
    assert grid[-1] < 2.0 * math.pi


def test_text_round_trip_is_exact():
    configs = [
        RunConfig(seed=3),
        RunConfig(seed=9, mean_rate=123.456, chi_points=16, repetitions=5, out_dir="elsewhere"),
        RunConfig(seed=0, sign_convention=2, drift_sigma=0.02, default_visibility=0.5),
        RunConfig(
            seed=7,
            visibilities=((0.0, 0.91), (1.234567890123456, 0.5)),
            alphas=(0.1, 2.3, 4.5),
            alpha1=0.33,
            chi2=5.99,
        ),
    ]
    for cfg in configs:
        assert config_from_text(cfg.to_text()) == cfg


def test_canonical_text_ignores_output_directory():
    a = RunConfig(seed=5, out_dir="first")
    b = RunConfig(seed=5, out_dir="second")
    assert a.canonical_text() == b.canonical_text()
    assert a.to_text() != b.to_text()
    c = RunConfig(seed=6, out_dir="first")
    assert a.canonical_text() != c.canonical_text()


def test_config_from_text_full_file():
    text = """
# instrument
seed = 11
mean_rate = 250
default_visibility = 0.73
visibility[0] = 0.76
visibility[pi/2] = 0.73

# scan shape
alphas = 0, pi/2, pi, 3pi/2
chi_points = 16
repetitions = 4
phase_offset = pi

# analysis settings
alpha1 = 0
alpha2 = pi/2
chi1 = 0.79pi
chi2 = 1.29pi
sign_convention = auto
out_dir = results
"""
    cfg = config_from_text(text)
    assert cfg.seed == 11
    assert cfg.mean_rate == 250.0
    assert cfg.visibilities == ((0.0, 0.76), (math.pi / 2.0, 0.73))
    assert cfg.alphas == DEFAULT_ALPHAS
    assert cfg.chi_points == 16
    assert cfg.phase_offset == math.pi
    assert cfg.chi1 == 0.79 * math.pi
    assert cfg.sign_convention is None
    assert cfg.out_dir == "results"


def test_config_errors_carry_line_numbers():
    with pytest.raises(ConfigError) as err:
        config_from_text("seed = 1\nmean_rate = 10\nchi_points = many\n")
    assert "line 3" in str(err.value)
    with pytest.raises(ConfigError) as err:
        config_from_text("seed = 1\nbogus_key = 2\n")
    assert "line 2" in str(err.value)
    assert "bogus_key" in str(err.value)
    with pytest.raises(ConfigError) as err:
        config_from_text("seed = 1\njust some words\n")
    assert "line 2" in str(err.value)
    with pytest.raises(ConfigError) as err:
        config_from_text("seed = 1\nchi1 = 0.79tau\n")
    assert "line 2" in str(err.value)


def test_config_requires_seed():
    with pytest.raises(ConfigError) as err:
        config_from_text("mean_rate = 10\n")
    assert "seed" in str(err.value)
    cfg = config_from_text("mean_rate = 10\n", require_seed=False)
    assert cfg.seed == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(seed=1, chi_points=0)
    with pytest.raises(ConfigError):
        RunConfig(seed=1, repetitions=0)
    with pytest.raises(ConfigError):
        RunConfig(seed=1, sign_convention=4)
    with pytest.raises(ConfigError):
        config_from_text("seed = 1\nmean_rate = -5\n")
    with pytest.raises(ConfigError):
        config_from_text("seed = 1\ndefault_visibility = 1.5\n")
    with pytest.raises(ConfigError):
        config_from_text("seed = -2\n")


def test_save_and_load(tmp_path):
    cfg = RunConfig(seed=21, chi_points=12, sign_convention=1)
    path = tmp_path / "run.cfg"
    cfg.save(path)
    assert load_config(path) == cfg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "nope.cfg")
    assert "nope.cfg" in str(err.value)


def test_comments_and_blank_lines_ignored():
    text = "seed = 4   # master seed\n\n   \n# whole-line comment\nchi_points = 6\n"
    cfg = config_from_text(text)
    assert cfg.seed == 4
    assert cfg.chi_points == 6
