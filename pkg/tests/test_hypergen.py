import json

import pytest

from essaylens import corpus, hypergen


MEAN = 15.875


def test_set3_reference_values():
    hp = hypergen.generate_hyperparams(corpus.default_sets()[3], MEAN)
    assert hp.P == pytest.approx(0.8986, abs=1e-3)
    assert hp.dropout == pytest.approx(0.266, abs=1e-3)
    assert hp.d_ff == 64
    assert hp.n_heads == 8
    assert hp.batch_size == 16
    assert hp.epochs == 44
    assert hp.patience == 7


def test_set8_reference_values():
    hp = hypergen.generate_hyperparams(corpus.default_sets()[8], MEAN)
    assert hp.P == pytest.approx(0.0010, abs=1e-4)
    assert hp.dropout == pytest.approx(0.431, abs=1e-3)
    assert hp.d_ff == 512
    assert hp.n_heads == 4
    assert hp.batch_size == 8
    assert hp.epochs == 82
    assert hp.patience == 13


def test_generation_is_deterministic():
    meta = corpus.default_sets()[5]
    assert hypergen.generate_hyperparams(meta, MEAN) == \
        hypergen.generate_hyperparams(meta, MEAN)


def test_p_strictly_decreasing_in_class_count():
    last = None
    for set_id in (3, 5, 2, 1, 7, 8):  # class counts 4, 5, 6, 11, 31, 61
        hp = hypergen.generate_hyperparams(corpus.default_sets()[set_id], MEAN)
        if last is not None:
            assert hp.P < last
        last = hp.P


def test_dropout_bounds_and_monotonicity():
    base = corpus.EssaySetMeta(90, 8, 200, 0, 9, 1000, False, "fixture")
    for n_obs in (50, 200, 1000, 5000):
        meta = corpus.EssaySetMeta(90, 8, 200, 0, 9, n_obs, False, "fixture")
        hp = hypergen.generate_hyperparams(meta, MEAN)
        assert 0.1 <= hp.dropout <= 0.6
    small = hypergen.generate_hyperparams(
        corpus.EssaySetMeta(90, 8, 200, 0, 9, 500, False, "f"), MEAN).dropout
    large = hypergen.generate_hyperparams(
        corpus.EssaySetMeta(90, 8, 200, 0, 9, 5000, False, "f"), MEAN).dropout
    assert small >= large
    narrow = hypergen.generate_hyperparams(
        corpus.EssaySetMeta(90, 8, 200, 0, 3, 1000, False, "f"), MEAN).dropout
    wide = hypergen.generate_hyperparams(
        corpus.EssaySetMeta(90, 8, 200, 0, 50, 1000, False, "f"), MEAN).dropout
    assert wide >= narrow
    assert base is not None


def test_powers_of_two_within_clamps():
    for meta in corpus.BUILTIN_SETS:
        hp = hypergen.generate_hyperparams(meta, MEAN)
        assert hp.d_ff & (hp.d_ff - 1) == 0 and hp.d_ff >= 64
        assert hp.batch_size & (hp.batch_size - 1) == 0
        assert 8 <= hp.batch_size <= 64


def test_nearest_power_of_two():
    assert hypergen.nearest_power_of_two(17) == 16
    assert hypergen.nearest_power_of_two(9) == 8
    assert hypergen.nearest_power_of_two(488) == 512
    assert hypergen.nearest_power_of_two(64) == 64
    assert hypergen.nearest_power_of_two(0) == 1


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        hypergen.HyperParams(P=0.5, dropout=0.2, d_ff=64, n_heads=3,
                             batch_size=16, epochs=30, patience=5, d_model=512)
    with pytest.raises(ValueError):
        hypergen.HyperParams(P=0.5, dropout=0.2, d_ff=64, n_heads=4,
                             batch_size=1, epochs=30, patience=5)
    with pytest.raises(ValueError):
        hypergen.HyperParams(P=1.5, dropout=0.2, d_ff=64, n_heads=4,
                             batch_size=16, epochs=30, patience=5)


def test_config_override_changes_output():
    cfg = hypergen.HypergenConfig(heads_source_dependent=16)
    hp = hypergen.generate_hyperparams(corpus.default_sets()[3], MEAN, cfg)
    assert hp.n_heads == 16


def test_config_from_json_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown"):
        hypergen.HypergenConfig.from_json(json.dumps({"dropout_floor": 0.2}))


def test_hyperparams_json_contains_p():
    hp = hypergen.generate_hyperparams(corpus.default_sets()[3], MEAN)
    data = json.loads(hp.to_json())
    assert data["P"] == pytest.approx(0.8986, abs=1e-3)
