import pytest

from mpemba.config import RunConfig, config_hash, emit_config, parse_config, validate_config
from mpemba.errors import ValidationError
from mpemba.thermal import TemperatureSpec

MINIMAL = """
model = xxz
lattice.L = 8
model.delta1 = 1
"""


def test_minimal_config_fills_defaults():
    config = parse_config(MINIMAL)
    assert config.model == "xxz"
    assert config.num_sites == 8
    assert config.delta1 == 1.0
    assert config.resolved_num_up() == 4
    assert config.gamma_list() == (1.0,) * 8
    assert config.boundary == "periodic"
    assert config.method == "auto"
    assert config.cold == TemperatureSpec.zero_plus()
    assert config.hot == tuple(TemperatureSpec.finite(t) for t in (0.5, 1.0, 2.0, 5.0, 10.0, 100.0))


def test_round_trip_is_identity():
    config = parse_config(MINIMAL)
    assert parse_config(emit_config(config)) == config

    fuller = parse_config(
        """
        model = j1j2
        model.j1 = -1
        model.j2 = 0.2499
        model.delta1 = 1
        model.delta2 = 1
        lattice.L = 8
        lattice.boundary = open
        lattice.num_up = 3
        dissipation.gamma = 0.5, 1, 1, 1, 1, 1, 1, 0.5
        initial.cold = zero_minus
        initial.hot = -5,
        time.t_max = 50
        time.points = 100
        method = integrate
        seed = 7
        """
    )
    assert parse_config(emit_config(fuller)) == fuller
    assert config_hash(fuller) == config_hash(parse_config(emit_config(fuller)))


def test_unknown_keys_are_errors():
    with pytest.raises(ValidationError, match="unknown key"):
        parse_config(MINIMAL + "\nlattice.width = 3\n")


def test_duplicate_keys_are_errors():
    with pytest.raises(ValidationError, match="duplicate"):
        parse_config(MINIMAL + "\nlattice.L = 9\n")


def test_all_violations_reported_together():
    with pytest.raises(ValidationError) as err:
        parse_config(
            """
            model = heisenberg
            lattice.L = 8
            model.delta1 = 1
            lattice.num_up = 9
            method = magic
            """
        )
    message = str(err.value)
    assert "model" in message and "num_up" in message and "method" in message


def test_num_up_out_of_range():
    with pytest.raises(ValidationError, match="num_up"):
        parse_config(MINIMAL + "\nlattice.num_up = 9\n")


def test_missing_required_keys():
    with pytest.raises(ValidationError, match="lattice.L"):
        parse_config("model = xxz\nmodel.delta1 = 1\n")
    with pytest.raises(ValidationError, match="delta1"):
        parse_config("model = xxz\nlattice.L = 8\n")


def test_xxz_preset_requires_zero_next_nearest():
    with pytest.raises(ValidationError, match="j2"):
        parse_config(MINIMAL + "\nmodel.j2 = 0.3\n")


def test_gamma_list_length_checked():
    with pytest.raises(ValidationError, match="per site"):
        parse_config(MINIMAL + "\ndissipation.gamma = 1, 1, 1\n")


def test_spectral_method_dimension_guard():
    text = """
    model = xxz
    lattice.L = 12
    model.delta1 = 1
    method = spectral
    """
    with pytest.raises(ValidationError, match="spectral"):
        parse_config(text)


def test_integrate_requires_explicit_t_max():
    with pytest.raises(ValidationError, match="t_max"):
        parse_config(MINIMAL + "\nmethod = integrate\n")
    parse_config(MINIMAL + "\nmethod = integrate\ntime.t_max = 50\n")


def test_temperature_keywords_and_comments():
    config = parse_config(
        MINIMAL
        + """
        initial.cold = zero_minus  # highest excited state
        initial.hot = -5, -10
        """
    )
    assert config.cold == TemperatureSpec.zero_minus()
    assert config.hot == (TemperatureSpec.finite(-5.0), TemperatureSpec.finite(-10.0))


def test_num_up_all_is_accepted():
    config = parse_config("model = xxz\nlattice.L = 1\nmodel.delta1 = 1\nlattice.num_up = all\n")
    assert config.resolved_num_up() == "all"


def test_validate_config_on_default_instance_lists_missing():
    problems = validate_config(RunConfig())
    assert any("lattice.L" in p for p in problems)
    assert any("delta1" in p for p in problems)
