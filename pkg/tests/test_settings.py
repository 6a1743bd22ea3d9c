import json

import pytest

from utils import settings
from utils.errors import DomainError
from utils.settings import load_config_file, resolve_run_config


def test_defaults_come_from_environment():
    config = resolve_run_config("montecarlo", {"n": [4], "m": 2})
    assert config.seed == settings.HZ_SEED
    assert config.solver.max_degree == settings.HZ_MAX_DEGREE
    assert config.trials == 2000


def test_lemniscate_defaults_to_one_sample():
    assert resolve_run_config("lemniscate", {}).trials == 1


def test_flags_beat_file_beat_defaults(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 7\nworkers = 2\n\n[montecarlo]\ntrials = 50\n\n[montecarlo.solver]\nstart_factor = 5\n')
    config = resolve_run_config("montecarlo", {"seed": 9}, str(path))
    assert config.seed == 9
    assert config.workers == 2
    assert config.trials == 50
    assert config.solver.start_factor == 5
    assert config.solver.max_degree == settings.HZ_MAX_DEGREE


def test_command_tables_only_apply_to_their_command(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 3, "montecarlo": {"trials": 10}, "lemniscate": {"trials": 4}}))
    assert resolve_run_config("montecarlo", {}, str(path)).trials == 10
    assert resolve_run_config("lemniscate", {}, str(path)).trials == 4
    assert resolve_run_config("selftest", {}, str(path)).seed == 3


def test_unset_flags_do_not_override(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("trials = 12\n")
    assert resolve_run_config("montecarlo", {"trials": None}, str(path)).trials == 12


def test_bad_config_files(tmp_path):
    with pytest.raises(DomainError):
        load_config_file(str(tmp_path / "missing.toml"))
    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("seed: 1\n")
    with pytest.raises(DomainError):
        load_config_file(str(yaml_path))
    broken = tmp_path / "broken.toml"
    broken.write_text("seed = \n")
    with pytest.raises(DomainError):
        load_config_file(str(broken))
    assert load_config_file(None) == {}


def test_invalid_values_raise_domain_error():
    with pytest.raises(DomainError):
        resolve_run_config("montecarlo", {"trials": 0})
    with pytest.raises(DomainError):
        resolve_run_config("montecarlo", {"log_level": "chatty"})
    assert resolve_run_config("montecarlo", {"log_level": "debug"}).log_level == "DEBUG"
