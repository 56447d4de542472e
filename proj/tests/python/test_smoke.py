import numpy as np
import pytest

import aefenet

SYNTHETIC = """[synthetic]
n_train = 400
n_test = 300
fault_type = step
fault_amplitude = 4
fault_channels = 0, 1
fault_onset = 150
seed = 3
"""

PIPELINE = """[pipeline]
l_max = 1
seed = 5
[layer]
window = 40
code_dim = 6
hidden = 10
epochs = 10
"""


@pytest.fixture(scope="module")
def data():
    return aefenet.generate_synthetic(SYNTHETIC)


@pytest.fixture(scope="module")
def model(data):
    train, _, _ = data
    return aefenet.fit(train, PIPELINE)


def test_generate_shapes_and_labels(data):
    train, test, labels = data
    assert train.shape == (400, 10)
    assert test.shape == (300, 10)
    assert labels[149] == 0 and labels[150] == 1


def test_window_singular_values_match_numpy():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(150, 5))
    z = (w - w.mean()) / w.std(ddof=1)
    expected = np.linalg.svd(z, compute_uv=False)
    np.testing.assert_allclose(aefenet.window_singular_values(w), expected, rtol=1e-10)


def test_column_subsets_count():
    assert len(aefenet.column_subsets(7, 5)) == 21
    assert len(aefenet.column_subsets(20, 5, 30, 1)) == 30


def test_rates():
    assert aefenet.fdr([True, False, True], [1, 1, 0]) == 0.5
    assert aefenet.far([True, False, True], [1, 1, 0]) == 1.0
    with pytest.raises(ValueError):
        aefenet.fdr([False], [0])


def test_fit_and_detect(model, data):
    train, test, _ = data
    assert model.depth == 1
    assert model.valid_from == 39
    on_train = model.detect(train)
    assert len(on_train["d"]) == 400 - 39
    assert on_train["far"] <= 0.015
    assert on_train["fdr"] is None
    result = model.detect(test, onset=150)
    assert result["fdr"] is not None and 0.0 <= result["fdr"] <= 1.0


def test_serialization_roundtrip(model, data, tmp_path):
    _, test, _ = data
    path = tmp_path / "m.bin"
    model.save(str(path))
    loaded = aefenet.load(str(path))
    assert loaded.to_bytes() == model.to_bytes()
    np.testing.assert_array_equal(loaded.detect(test)["d"], model.detect(test)["d"])
    assert aefenet.from_bytes(model.to_bytes()).to_bytes() == model.to_bytes()
    corrupt = bytearray(model.to_bytes())
    corrupt[len(corrupt) // 2] ^= 1
    with pytest.raises(ValueError):
        aefenet.from_bytes(bytes(corrupt))


def test_errors(model):
    with pytest.raises(ValueError):
        model.detect(np.zeros((100, 3)))
    with pytest.raises(ValueError):
        aefenet.fit(np.zeros((10, 3)), "[bogus]\nx = 1\n")


def test_default_config_text():
    text = aefenet.default_config()
    assert "window = 150" in text and "code_dim = 20" in text
