"""Smoke tests for the python module (built by the main CMake build)."""

import math

import numpy as np
import pytest

import _optimfkd as ofkd


def test_sim_step_rest_fixed_point():
    rest = np.zeros(6)
    out = ofkd.sim_step(rest, 0.0, 0.0)
    assert np.allclose(out, 0.0)


def test_sim_step_straight_motion():
    state = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    out = ofkd.sim_step(state, 1.0, 0.0, 0.05)
    assert out[0] == pytest.approx(0.05, abs=1e-12)
    assert out[1] == 0.0
    assert out[3] == pytest.approx(1.0)


def test_sim_rollout_shape_and_determinism():
    state = np.zeros(6)
    controls = np.column_stack([np.full(40, 2.0), 0.5 * np.sin(np.arange(40) * 0.2)])
    a = ofkd.sim_rollout(state, controls)
    b = ofkd.sim_rollout(state, controls)
    assert a.shape == (40, 6)
    assert np.array_equal(a, b)


def test_builtin_paths():
    names = ofkd.builtin_path_names()
    assert "rounded_rectangle" in names and "figure8" in names
    path = ofkd.builtin_path("rounded_rectangle")
    assert path.shape[1] == 3
    assert path.shape[0] > 100
    with pytest.raises(Exception):
        ofkd.builtin_path("nope")


def test_hausdorff():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
    assert ofkd.hausdorff_distance(square, square) == pytest.approx(0.0)
    shifted = square + np.array([0.25, 0.0])
    assert ofkd.hausdorff_distance(square, shifted, 0.002) == pytest.approx(0.25, abs=5e-3)


def test_micro_training_pipeline(tmp_path):
    data_dir = tmp_path / "ds"
    ofkd.generate_dataset(str(data_dir), n_train=2, n_val=1, duration=8.0, seed=3)
    model_path = tmp_path / "fkd.json"
    train_loss, val_loss = ofkd.train_fkd(
        str(data_dir), str(model_path), steps=30, hidden_layers=2, hidden_width=32
    )
    assert len(val_loss) >= 1
    model = ofkd.FkdModel.load(str(model_path))
    assert model.t_model == pytest.approx(0.5)

    history = np.zeros((10, 6))
    controls = np.column_stack([np.full(20, 1.0), np.zeros(20)])
    states = model.rollout(history, controls)
    assert states.shape == (20, 6)
    states2, jac = model.rollout_jacobian(history, controls)
    assert jac.shape == (120, 40)
    assert np.allclose(states, states2)


def test_bad_shapes_are_rejected():
    controls = np.zeros((10, 2))
    with pytest.raises(Exception):
        ofkd.sim_rollout(np.zeros(5), controls)  # short state vector
    with pytest.raises(Exception):
        ofkd.sim_rollout(np.zeros(6), np.zeros((10, 3)))  # wide control rows


def test_mirror_symmetry():
    state = np.array([0.0, 0.2, 0.4, 1.5, -0.1, 0.3])
    mirrored = state * np.array([1, -1, -1, 1, -1, -1])
    a = ofkd.sim_step(state, 2.0, 1.0)
    b = ofkd.sim_step(mirrored, 2.0, -1.0)
    assert np.array_equal(b, a * np.array([1, -1, -1, 1, -1, -1]))
