import os
from fractions import Fraction

import pytest

from sawlab import config
from sawlab.errors import ConfigError


def test_defaults():
    run_config = config.load_config(environ={})
    assert run_config.precision_bits == 106
    assert run_config.threads == 1
    assert run_config.output_format == "json"
    assert run_config.cache_dir == os.path.expanduser("~/.cache/sawlab")


def test_user_file_overrides_defaults(tmp_path):
    config_path = tmp_path / "sawlab.toml"
    config_path.write_text('[sawlab]\nthreads = 4\noutput_format = "csv"\n')
    run_config = config.load_config(str(config_path), environ={})
    assert run_config.threads == 4
    assert run_config.output_format == "csv"
    assert run_config.node_budget == config.config_db.defaults_db["sawlab"]["node_budget"]


def test_environment_sets_the_cache_directory(tmp_path):
    config_path = tmp_path / "sawlab.toml"
    config_path.write_text('[sawlab]\ncache_dir = "/somewhere/else"\n')
    run_config = config.load_config(str(config_path), environ={config.CACHE_ENV_VAR: str(tmp_path)})
    assert run_config.cache_dir == str(tmp_path)


@pytest.mark.parametrize(
    "body",
    [
        "[sawlab]\nunknown_key = 1\n",
        "[sawlab]\nthreads = 0\n",
        "[sawlab]\nnode_budget = true\n",
        '[sawlab]\noutput_format = "xml"\n',
    ],
)
def test_invalid_files_are_rejected(tmp_path, body):
    config_path = tmp_path / "sawlab.toml"
    config_path.write_text(body)
    with pytest.raises(ConfigError):
        config.load_config(str(config_path), environ={})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / "absent.toml"), environ={})


def test_command_line_overrides():
    run_config = config.load_config(environ={})
    assert config.with_overrides(run_config, threads=None) is run_config
    changed = config.with_overrides(run_config, threads=8, cache_dir="/tmp/sawlab-test")
    assert changed.threads == 8
    assert changed.cache_dir == "/tmp/sawlab-test"
    with pytest.raises(ConfigError):
        config.with_overrides(run_config, precision_bits=-1)


def test_parse_rational():
    assert config.parse_rational("1/3") == Fraction(1, 3)
    assert config.parse_rational("0.25") == Fraction(1, 4)
    assert config.parse_rational(2) == 2
    for bad in (0.5, "one", "1/0", True):
        with pytest.raises(ConfigError):
            config.parse_rational(bad)


def test_parse_lambda_and_z():
    assert config.parse_lambda("1/2") == Fraction(1, 2)
    assert config.parse_lambda(0) == 0
    with pytest.raises(ConfigError):
        config.parse_lambda("3/2")
    assert config.parse_z("ZC") == config.ZC_TOKEN
    assert config.parse_z("1/10") == Fraction(1, 10)
