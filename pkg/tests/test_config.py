import pytest

from busnoise.config import ConfigError, ExperimentConfig, load_config, preset


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


def test_defaults_validate():
    cfg = load_config()
    assert cfg.rounds_for(7) == 7
    assert cfg.shots_for(5) == cfg.shots


def test_precedence(tmp_path):
    p = _write(tmp_path, "shots = 500\ndistances = [3, 5, 7]\n")
    cfg = load_config(p, preset_name="desk", overrides={"shots": 42})
    assert cfg.shots == 42
    assert cfg.distances == (3, 5, 7)
    assert load_config(p, preset_name="desk").shots == 500
    assert load_config(preset_name="full").distances[-1] == 17


@pytest.mark.parametrize("text,msg", [
    ("colour = 3\n", "unknown key"),
    ("distances = [4]\n", "odd"),
    ("ber = [1.5]\n", "probabilities"),
    ("shuttle_channel = 'diagonal'\n", "shuttle_channel"),
    ("[analysis]\nwobble = 1\n", "analysis"),
    ("shots = \n", "c.toml"),
])
def test_rejects_bad_files(tmp_path, text, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(_write(tmp_path, text))


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("huge")


def test_hash_ignores_presentation_fields(tmp_path):
    a = load_config(_write(tmp_path, "name = 'a'\noutput = 'x'\n[analysis]\naxis = 'ber'\n"))
    b = load_config(overrides={"name": "b", "output": "y"})
    assert a.config_hash == b.config_hash
    assert load_config(overrides={"seed": 3}).config_hash != a.config_hash
    assert load_config(overrides={"solver": "native"}).config_hash != a.config_hash


def test_toml_roundtrip(tmp_path):
    cfg = load_config(overrides={"distances": [5, 9], "ber": [0.01, 0.02], "shots_by_distance": {"9": 77},
                                 "hardware": {"T2": 2e-5}})
    again = load_config(_write(tmp_path, cfg.to_toml()))
    assert again == cfg
    assert again.shots_for(9) == 77


def test_fit_warnings():
    cfg = ExperimentConfig(shots=100).validate()
    assert len(cfg.fit_warnings()) == len(cfg.distances)
