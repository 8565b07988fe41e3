import pytest

from nocturne.config import ENV_VAR, SchemaError, config_hash, defaults, load_config, validate


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


def test_defaults_validate():
    cfg = validate({})
    assert cfg == defaults()
    assert cfg["experiment"]["seeds"] == [11, 23, 37]
    assert cfg["train"]["patience"] == 30 and cfg["forest"]["n_trees"] == 1000


@pytest.mark.parametrize("text, path", [
    ('[experiment]\nmodels = ["rfc", "svm"]\n', "experiment.models[1]"),
    ('[experiment]\nfeature_sets = ["NOPE"]\n', "experiment.feature_sets[0]"),
    ('[forest]\nn_tree = 10\n', "forest.n_tree"),
    ('seed = "x"\n', "seed"),
    ('[train]\nmax_epochs = 5\npatience = 6\n', "train.patience"),
    ('[balance]\nratio = 1.5\n', "balance.ratio"),
    ('[cohort]\nsource = "ohio"\n', "cohort.path"),
    ('forest = 3\n', "forest"),
])
def test_schema_errors_name_the_field(tmp_path, text, path):
    with pytest.raises(SchemaError) as err:
        load_config(_write(tmp_path, text))
    assert err.value.path == path
    assert path in str(err.value)


def test_invalid_toml_and_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        load_config(_write(tmp_path, "seed = = 1"))
    with pytest.raises(SchemaError):
        load_config(tmp_path / "absent.toml")


def test_precedence_flags_over_file_over_defaults(tmp_path):
    p = _write(tmp_path, 'seed = 4\n[forest]\nn_trees = 12\n')
    cfg = load_config(p, {"seed": 9})
    assert cfg["seed"] == 9 and cfg["forest"]["n_trees"] == 12 and cfg["net"]["hidden"] == 32


def test_env_fallback(tmp_path, monkeypatch):
    from nocturne.config import resolve_path
    p = _write(tmp_path, "seed = 5\n")
    monkeypatch.setenv(ENV_VAR, str(p))
    assert load_config(resolve_path(None))["seed"] == 5
    assert resolve_path("other.toml").name == "other.toml"
    monkeypatch.delenv(ENV_VAR)
    assert resolve_path(None) is None


def test_hash_is_stable_and_sensitive():
    a, b = validate({}), validate({})
    assert config_hash(a) == config_hash(b)
    b["seed"] = 2
    assert config_hash(a) != config_hash(b)
