import io

import numpy as np
import pytest

from dofid.drnn import DrnnParams, IdsModel
from dofid.model_io import dump_model, dumps_model, load_model, loads_model

PAPER = DrnnParams()


def awkward_model(rng):
    """Values chosen to stress decimal round-tripping."""
    model = IdsModel(
        hidden_weights=[rng.uniform(0, 1, size=(4, 3)) for _ in range(2)],
        output_weights=rng.normal(0, 1, size=(4, 3)) * 1e-7,
        whiskers=rng.uniform(0, 1e-3, size=3),
        theta=float(rng.uniform(0, 3)),
    )
    model.hidden_weights[0][0, 0] = 0.1 + 0.2  # classic non-representable sum
    model.output_weights[1, 2] = 1e-300
    model.whiskers[0] = np.nextafter(0.5, 1.0)
    return model


def test_round_trip_is_bit_exact():
    rng = np.random.default_rng(70)
    for _ in range(10):
        model = awkward_model(rng)
        restored, params = loads_model(dumps_model(model, PAPER))
        assert params == PAPER
        for a, b in zip(model.hidden_weights, restored.hidden_weights):
            assert np.array_equal(a, b)
        assert np.array_equal(model.output_weights, restored.output_weights)
        assert np.array_equal(model.whiskers, restored.whiskers)
        assert model.theta == restored.theta


def test_double_round_trip_is_stable():
    rng = np.random.default_rng(71)
    model = awkward_model(rng)
    once = dumps_model(model, PAPER)
    restored, params = loads_model(once)
    assert dumps_model(restored, params) == once


def test_file_round_trip():
    rng = np.random.default_rng(72)
    model = awkward_model(rng)
    buf = io.StringIO()
    dump_model(model, PAPER, buf)
    buf.seek(0)
    restored, _ = load_model(buf)
    assert np.array_equal(model.output_weights, restored.output_weights)


def test_document_is_self_describing():
    rng = np.random.default_rng(73)
    text = dumps_model(awkward_model(rng), PAPER)
    for needle in ('"shape"', '"hidden_weights"', '"output_weights"', '"whiskers"',
                   '"theta"', '"params"', '"lambda_plus"'):
        assert needle in text


def test_foreign_document_rejected():
    with pytest.raises(ValueError, match="document"):
        loads_model('{"format": "something-else"}')


def test_shape_mismatch_rejected():
    rng = np.random.default_rng(74)
    text = dumps_model(awkward_model(rng), PAPER)
    broken = text.replace('"shape": [\n        4,\n        3\n      ]',
                          '"shape": [\n        3,\n        4\n      ]', 1)
    with pytest.raises(ValueError):
        loads_model(broken)


def test_negative_hidden_weights_rejected():
    rng = np.random.default_rng(75)
    model = awkward_model(rng)
    model.hidden_weights[1][2, 1] = -0.25
    with pytest.raises(ValueError, match="non-negative"):
        loads_model(dumps_model(model, PAPER))
