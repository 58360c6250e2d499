from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from prethermal.config import ConfigError, RunConfig, parse_config, parse_scalar, parse_value

MINIMAL = """
# two close copies at the standard drive
L: 20
omega: 2.86
g: 0.255
n_periods: 100000
mode: twin
delta: 0.01
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.L, cfg.omega, cfg.g, cfg.n_periods, cfg.mode, cfg.delta) == (20, 2.86, 0.255, 100000, "twin", 0.01)
    assert cfg.h == 0.1 and cfg.W == 0.1
    assert cfg.window_start == 100 and cfg.window_end == 10_000
    assert cfg.renormalize_every == 1000 and cfg.checkpoint_every == 1_000_000
    assert cfg.to_dict()["h"] == 0.1


def test_rational_kept_exact():
    cfg = parse_config("L = 4\nomega = 2.86\ng = 1/4\nn_periods = 10\n")
    assert cfg.g == Fraction(1, 4)
    assert cfg.params.kick() == (0.0, 1.0)
    assert cfg.to_dict()["g"] == "1/4"


@pytest.mark.parametrize(
    "text, key",
    [
        ("L = 1\nomega = 2\ng = 0.25\nn_periods = 5", "L"),
        ("L = 4\nomega = -2\ng = 0.25\nn_periods = 5", "omega"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nW = -1", "W"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nmode = banana", "mode"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nslice_layer = 4", "slice_layer"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nwindow_start = 50\nwindow_end = 10", "window_end"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nmode = sweep", "g_values"),
        ("L = 4\nomega = 2\ng = 0.25\nn_periods = 5\nmode = scaling", "L_values"),
    ],
)
def test_validation_names_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("L = 4\nomgea = 2\n")
    assert err.value.line == 2 and err.value.key == "omgea"


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("L = 4\nL = 5\n")
    with pytest.raises(ConfigError) as err:
        parse_config("L = 4\nthis is not a pair\n")
    assert err.value.line == 2
    with pytest.raises(ConfigError):
        parse_config("L =\n")


def test_type_errors():
    with pytest.raises(ConfigError, match="integer"):
        parse_config("L = 4.5\nomega = 2\ng = 0.25\nn_periods = 5")
    with pytest.raises(ConfigError, match="number"):
        parse_config("L = 4\nomega = fast\ng = 0.25\nn_periods = 5")


def test_missing_required():
    with pytest.raises(ConfigError, match="n_periods"):
        parse_config("L = 4\nomega = 2\ng = 0.25")


def test_lists_and_linspace():
    cfg = parse_config(
        "L = 12\nomega = 2.86\ng = 0.25\nn_periods = 10000\nmode = sweep\n"
        "g_values = linspace(0.2, 0.55, 8)\nL_values = 8, 12\nomega_values = 2.6\norders = 2, 3, 20/7\n"
    )
    assert len(cfg.g_values) == 8 and cfg.g_values[0] == 0.2 and cfg.g_values[-1] == 0.55
    assert cfg.L_values == (8, 12)
    assert cfg.omega_values == (2.6,)
    assert Fraction(20, 7) in cfg.point().candidates


def test_overrides_replace_file_values():
    cfg = parse_config(MINIMAL, {"L": "8", "g": "1/3", "stop_at_thermalization": "true"})
    assert cfg.L == 8 and cfg.g == Fraction(1, 3) and cfg.stop_at_thermalization is True


def test_derived_objects():
    cfg = parse_config(MINIMAL)
    point = cfg.point()
    assert point.twin and point.params.omega == 2.86 and point.ic.delta == 0.01
    assert parse_config(MINIMAL, {"mode": "single"}).point().twin is False
    scaling = parse_config(MINIMAL, {"mode": "scaling", "L_values": "8, 12"}).sweep_spec()
    assert scaling.realizations == "auto"


def test_text_round_trip_and_hash():
    cfg = parse_config(MINIMAL, {"g": "1/4", "L_values": "8, 12", "snapshot_times": "100, 10000"})
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.content_hash() == cfg.content_hash()
    assert cfg.replace(seed=1).content_hash() != cfg.content_hash()


@pytest.mark.parametrize(
    "text, value",
    [("3", 3), ("-2", -2), ("1/4", Fraction(1, 4)), ("2.5e-3", 2.5e-3), ("true", True), ("no", False), ("twin", "twin")],
)
def test_scalar_parsing(text, value):
    got = parse_scalar(text)
    assert got == value and type(got) is type(value)


def test_zero_denominator():
    with pytest.raises(ValueError):
        parse_scalar("1/0")


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rationals_exact(num, den):
    assert parse_value(f"{num}/{den}") == Fraction(num, den)


def test_direct_construction_validates():
    with pytest.raises(ConfigError):
        RunConfig(L=4, omega=2.0, g=0.25, n_periods=-1)
