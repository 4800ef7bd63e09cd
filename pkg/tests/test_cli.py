import json

import numpy as np
import pandas as pd
import pytest

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from cli import SEED_VARIABLE, config_from_dict, defaults_document, load_config, main
from exceptions import ConfigError
from utils import EXIT_INCONSISTENT, EXIT_OK, EXIT_USAGE, config_hash

BLACK_SCHOLES = """
seed = 5
maturity = 1.0

[model]
gamma_s = 0.0
sigma = 0.2

[payoff]
kind = "call"
strike = 1.0
"""


@pytest.fixture(autouse=True)
def no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_VARIABLE, raising=False)


def write_config(tmp_path, text, name="config.toml"):
    filename = tmp_path / name
    filename.write_text(text, encoding="utf-8")
    return str(filename)


def replay_config(tmp_path, exponent, extra=""):
    rows = []
    for n in (8, 16, 32, 64):
        magnitude = 0.3 * n ** exponent
        rows += [(n, magnitude if i % 2 else -magnitude) for i in range(1000)]
    errors = tmp_path / "errors.csv"
    with open(errors, "w", encoding="utf-8") as f:
        f.write("# recorded errors\n")
        pd.DataFrame(rows, columns=["n", "e_corr"]).to_csv(f, index=False)
    text = BLACK_SCHOLES + (
        "\n[experiment]\nn_values = [8, 16, 32, 64]\n" + extra + "\n"
        "[experiment.table1_case]\nr = 1.0\ntheta = 1.0\n\n"
        "[replay]\nfile = {}\n".format(json.dumps(str(errors)))
    )
    return write_config(tmp_path, text)


def test_print_defaults_round_trip(capsys):
    assert main(["--print-defaults"]) == EXIT_OK
    text = capsys.readouterr().out
    config = config_from_dict(tomllib.loads(text))
    assert config.seed == 0
    assert config.model.sigma == 0.2
    assert config.payoff.strike == 1.0
    assert text == defaults_document()


def test_missing_command_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        main(["coeffs"])
    assert err.value.code == EXIT_USAGE


def test_malformed_toml(tmp_path):
    filename = write_config(tmp_path, "[model\nsigma = 0.2\n")
    assert main(["coeffs", "--config", filename, "--out", str(tmp_path)]) == EXIT_USAGE
    with pytest.raises(ConfigError):
        load_config(filename)


def test_unknown_keys_and_missing_files(tmp_path):
    filename = write_config(tmp_path, BLACK_SCHOLES + "\n[bogus]\nvalue = 1\n")
    with pytest.raises(ConfigError) as err:
        load_config(filename)
    assert err.value.field == "bogus"
    assert main(["coeffs", "--config", filename, "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["coeffs", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_invalid_fields_are_named():
    document = tomllib.loads(BLACK_SCHOLES)
    document["experiment"] = {"n_values": [16, 8]}
    with pytest.raises(ConfigError) as err:
        config_from_dict(document)
    assert err.value.field == "experiment.n_values"
    document["experiment"] = {"kappa": 0.5}
    with pytest.raises(ConfigError) as err:
        config_from_dict(document)
    assert err.value.field == "experiment.kappa"
    with pytest.raises(ConfigError) as err:
        config_from_dict({"payoff": {"kind": "call", "strike": 1.0}})
    assert err.value.field == "model"


def test_seed_from_the_environment(monkeypatch):
    document = tomllib.loads(BLACK_SCHOLES)
    assert config_from_dict(document).seed == 5
    monkeypatch.setenv(SEED_VARIABLE, "42")
    assert config_from_dict(document).seed == 42
    monkeypatch.setenv(SEED_VARIABLE, "many")
    with pytest.raises(ConfigError) as err:
        config_from_dict(document)
    assert err.value.field == SEED_VARIABLE


def test_coeffs_command(tmp_path):
    filename = write_config(tmp_path, BLACK_SCHOLES)
    assert main(["coeffs", "--config", filename, "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "coeffs.json", encoding="utf-8") as f:
        document = json.load(f)
    assert document["mmm"]["holds"]
    assert document["provenance"]["config_hash"] == config_hash(BLACK_SCHOLES)
    assert "table1" in document


def test_mmm_command_without_measure_change(tmp_path):
    filename = write_config(tmp_path, BLACK_SCHOLES)
    assert main(["mmm", "--config", filename, "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "mmm.json", encoding="utf-8") as f:
        document = json.load(f)
    assert document["u_coefficient"] == pytest.approx(0.0, abs=1e-12)
    for value in document["reverse_holder"].values():
        assert value == pytest.approx(1.0, abs=1e-9)


def test_strategy_command(tmp_path):
    text = BLACK_SCHOLES + "\n[strategy]\nt_grid = [0.0, 0.5]\ny_grid = [0.9, 1.0, 1.1]\n"
    filename = write_config(tmp_path, text)
    assert main(["strategy", "--config", filename, "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "strategy.csv", comment="#")
    assert list(frame.columns) == ["t", "y", "theta", "diffusion_part", "jump_part"]
    assert len(frame) == 6
    assert np.all(np.diff(frame.loc[frame["t"] == 0.0, "theta"].to_numpy()) > 0)


def test_replayed_errors_at_the_predicted_rate(tmp_path):
    filename = replay_config(tmp_path, -0.5)
    out = tmp_path / "replay"
    assert main(["rates", "--config", filename, "--out", str(out)]) == EXIT_OK
    with open(out / "report.json", encoding="utf-8") as f:
        report = json.load(f)
    assert report["verdict"] == "Consistent"
    assert report["slope"] == pytest.approx(-0.5, abs=1e-9)
    assert (out / "rates.csv").exists()
    assert (out / "rates.png").exists()


def test_replayed_errors_at_the_wrong_rate(tmp_path):
    filename = replay_config(tmp_path, -1.0 / 3.0)
    assert main(["rates", "--config", filename, "--out", str(tmp_path / "replay")]) == EXIT_INCONSISTENT


def test_symmetric_rule_predicts_half(tmp_path):
    filename = replay_config(tmp_path, -0.5, 'epsilon_rule = "symmetric"\n')
    text = (tmp_path / "config.toml").read_text(encoding="utf-8").replace("r = 1.0", "r = 2.0")
    filename = write_config(tmp_path, text)
    out = tmp_path / "replay"
    assert main(["rates", "--config", filename, "--out", str(out)]) == EXIT_OK
    with open(out / "report.json", encoding="utf-8") as f:
        assert json.load(f)["predicted"] == -0.5


def test_weighted_bmo_needs_nested_nets():
    document = tomllib.loads(BLACK_SCHOLES)
    document["experiment"] = {"error_kind": "bmo", "n_values": [10, 15, 20, 25]}
    with pytest.raises(ConfigError) as err:
        config_from_dict(document)
    assert err.value.field == "experiment.n_values"
    document["experiment"] = {"error_kind": "bmo", "n_values": [8, 16, 32, 64]}
    assert list(config_from_dict(document).n_values) == [8, 16, 32, 64]
