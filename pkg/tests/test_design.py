import numpy as np
import pytest

from annealtopt import (
    ALPHA_FLOOR,
    RHO_FLOOR,
    apply_update,
    build_benchmark,
    decode_alphas,
    init_design,
    make_layout,
    volume_ratio,
)
from annealtopt.model import problem_from_dict


def test_init_uniform():
    state = init_design(6, 0.35, 1.1)
    np.testing.assert_array_equal(state.rho, np.full(6, 0.35))
    np.testing.assert_array_equal(state.theta, np.full(6, 1.1))
    assert state.iteration == 0

    state = init_design(50, 0.6, 1.05)
    assert state.rho.shape == (50,)
    assert np.all(state.theta == 1.05)

    state = init_design(1, 1.0, 1.1)
    assert state.rho[0] == 1.0


def test_init_rejects_bad_values():
    with pytest.raises(ValueError):
        init_design(3, 0.0, 1.1)
    with pytest.raises(ValueError):
        init_design(3, 1.5, 1.1)
    with pytest.raises(ValueError):
        init_design(3, 0.5, 0.0)


def test_decode_single_qubit():
    layout = make_layout(1, 1, 1)
    state = init_design(1, 0.5, 1.1)
    assert decode_alphas([1, 0], layout, state)[0] == pytest.approx(1.1, abs=0)
    assert decode_alphas([0, 0], layout, state)[0] == ALPHA_FLOOR


def test_decode_three_qubits():
    layout = make_layout(1, 3, 1)
    state = init_design(1, 0.5, 1.1)
    alpha = decode_alphas([1, 0, 1, 0], layout, state)
    assert alpha[0] == pytest.approx(1.1 * 4 / 6, rel=1e-15)
    assert alpha[0] == pytest.approx(0.7333, rel=1e-3)


def test_decode_mismatch_raises():
    layout = make_layout(2, 1, 1)
    state = init_design(2, 0.5, 1.1)
    with pytest.raises(ValueError):
        decode_alphas([1, 0], layout, state)  # too short
    with pytest.raises(ValueError):
        decode_alphas([1, 0, 1], make_layout(1, 2, 1), state)


def test_decode_respects_latched_caps():
    layout = make_layout(2, 1, 1)
    state = init_design(2, 0.5, 1.1)
    state.theta[1] = 1.0  # latched
    alpha = decode_alphas([1, 1, 0], layout, state)
    assert alpha[0] == 1.1
    assert alpha[1] == 1.0


def test_apply_update_examples():
    state = init_design(3, 0.35, 1.1)
    state.rho[:] = [0.35, 0.95, 0.5]
    new = apply_update(state, np.array([1.1, 1.1, ALPHA_FLOOR]))
    assert new.rho[0] == pytest.approx(0.385, rel=1e-15)
    assert new.rho[1] == 1.0 and new.theta[1] == 1.0  # capped and latched
    assert new.rho[2] == RHO_FLOOR
    assert new.iteration == 1
    assert len(new.alpha_log) == 1
    # input untouched
    assert state.rho[1] == 0.95 and state.theta[1] == 1.1


def test_cap_latching_is_permanent():
    state = init_design(1, 0.95, 1.1)
    state = apply_update(state, np.array([1.1]))  # hits the cap
    assert state.theta[0] == 1.0
    state = apply_update(state, np.array([ALPHA_FLOOR]))  # deleted
    assert state.rho[0] == RHO_FLOOR
    assert state.theta[0] == 1.0  # never returns to the configured cap


def test_alpha_below_floor_rejected():
    state = init_design(1, 0.5, 1.1)
    with pytest.raises(ValueError):
        apply_update(state, np.array([0.0]))


def test_replay_from_log_reproduces_state():
    rng = np.random.default_rng(11)
    layout = make_layout(8, 1, 1)
    state = init_design(8, 0.4, 1.1)
    for _ in range(25):
        bits = rng.integers(0, 2, layout.n_qubits)
        state = apply_update(state, decode_alphas(bits, layout, state))
    replayed = init_design(8, 0.4, 1.1)
    for alpha in state.alpha_log:
        replayed = apply_update(replayed, alpha)
    np.testing.assert_array_equal(replayed.rho, state.rho)
    np.testing.assert_array_equal(replayed.theta, state.theta)


def test_decode_output_range_property():
    rng = np.random.default_rng(5)
    for n_q in (1, 2, 3):
        layout = make_layout(5, n_q, 1)
        state = init_design(5, 0.5, 1.07)
        state.theta[2] = 1.0
        for _ in range(50):
            bits = rng.integers(0, 2, layout.n_qubits)
            alpha = decode_alphas(bits, layout, state)
            assert np.all(alpha >= ALPHA_FLOOR)
            assert np.all(alpha <= state.theta + 1e-15)


def test_volume_ratio_uniform():
    problem = build_benchmark("truss6")
    state = init_design(6, 1.0, 1.1)
    assert volume_ratio(state, problem) == pytest.approx(1.0, rel=1e-15)
    state.rho[:] = 0.35
    assert volume_ratio(state, problem) == pytest.approx(0.35, rel=1e-15)


def test_volume_ratio_mixed_lengths():
    problem = problem_from_dict({
        "kind": "truss",
        "material": {"E": 1.0, "nu": 0.3},
        "truss": {
            "nodes": [[0, 0], [1, 0], [2, 1]],
            "members": [[0, 1, 0.5], [1, 2, 0.5]],
        },
        "supports": [[0, 0], [0, 1], [1, 1], [2, 1]],
        "loads": [[2, [1, 0]]],
        "v_target": 1.0,
    })
    state = init_design(2, 1.0, 1.1)
    state.rho[:] = [1.0, RHO_FLOOR]
    expected = 1.0 / (1.0 + np.sqrt(2))
    assert volume_ratio(state, problem) == pytest.approx(expected, abs=1e-5)
