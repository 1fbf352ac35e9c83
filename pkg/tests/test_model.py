from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from redraw import io as rio
from redraw.model import (
    InfluenceMatrix,
    NetworkSpec,
    PhaseTrace,
    ReconstructionParams,
    SimConfig,
    ValidationError,
    validate_network,
)
from redraw.topologies import chain


@st.composite
def networks(draw, min_n=2, max_n=7):
    n = draw(st.integers(min_n, max_n))
    w = draw(arrays(np.float64, (n, n), elements=st.floats(0, 10, allow_subnormal=False)))
    mask = draw(arrays(np.bool_, (n, n)))
    w = np.where(mask, w, 0.0)
    np.fill_diagonal(w, 0.0)
    return NetworkSpec(w)


def test_minimal_two_node_graph_is_valid():
    spec = NetworkSpec([[0.0, 1.0], [0.0, 0.0]])
    assert validate_network(spec) is spec
    assert spec.edge_count == 1


def test_self_loop_reported_with_node_label():
    with pytest.raises(ValidationError, match="self-loop at node 1"):
        validate_network(NetworkSpec([[0.5, 0.0], [1.0, 0.0]]))


def test_negative_weight_reported_with_position():
    with pytest.raises(ValidationError, match=r"\(2, 1\)"):
        validate_network(NetworkSpec([[0.0, 0.0], [-1.0, 0.0]]))


def test_single_node_rejected():
    with pytest.raises(ValidationError, match="at least 2"):
        validate_network(NetworkSpec([[0.0]]))


def test_four_node_chain_has_three_edges():
    spec = validate_network(chain(4, [2.0, 1.5, 1.0]))
    assert spec.edge_count == 3


def test_non_square_weights_rejected():
    with pytest.raises(ValidationError):
        NetworkSpec(np.zeros((2, 3)))


def test_weights_are_read_only():
    spec = NetworkSpec(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        spec.weights[0, 1] = 1.0


@given(networks())
def test_edge_count_matches_positive_off_diagonal(spec):
    w = spec.weights
    expected = sum(1 for i in range(spec.n) for j in range(spec.n) if i != j and w[i, j] > 0)
    assert spec.edge_count == expected


@given(networks())
def test_network_json_round_trip_is_bit_exact(spec):
    back = rio.loads_network(rio.dumps_network(spec))
    assert back.weights.tobytes() == spec.weights.tobytes()


@given(networks())
def test_validate_is_idempotent(spec):
    once = validate_network(spec)
    assert validate_network(once) == spec


@pytest.mark.parametrize("kwargs", [
    {"natural_frequencies": [1.0, -0.5]},
    {"phase_shift": math.pi / 2 + 1e-6},
    {"phase_shift": -0.1},
    {"dt": 0.0},
    {"dt": 40.0},
    {"coupling": 0.0},
])
def test_sim_config_rejects_out_of_range(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(**kwargs)


def test_sim_config_step_count():
    cfg = SimConfig()
    assert cfg.n_steps == 3000
    assert cfg.times()[-1] == pytest.approx(30.0)
    with pytest.raises(ValidationError):
        SimConfig(duration=1.0, dt=0.3).n_steps


def test_phase_trace_requires_uniform_times():
    with pytest.raises(ValidationError):
        PhaseTrace([0.0, 0.1, 0.3], np.zeros((3, 2)))
    with pytest.raises(ValidationError):
        PhaseTrace([0.0, 0.1, 0.2], np.array([[0, 0], [0, np.nan], [0, 0]], dtype=float))


def test_influence_matrix_invariants():
    with pytest.raises(ValidationError):
        InfluenceMatrix([[0.0, 1.5], [0.0, 0.0]])
    with pytest.raises(ValidationError):
        InfluenceMatrix([[0.2, 0.0], [0.0, 0.0]])
    with pytest.raises(ValidationError):
        InfluenceMatrix(np.zeros((2, 2)), stage="final")


@pytest.mark.parametrize("nu,mu", [(1.0, 0.5), (0.5, 0.6), (-0.1, 0.0), (0.5, -0.1)])
def test_reconstruction_params_ranges(nu, mu):
    with pytest.raises(ValidationError):
        ReconstructionParams(nu, mu)


def test_reconstruction_params_windows():
    assert ReconstructionParams(windows=[0, 1, 2.5]).windows == (0.0, 1.0, 2.5)
    with pytest.raises(ValidationError):
        ReconstructionParams(windows=[0, 2, 1])
    with pytest.raises(ValidationError):
        ReconstructionParams(windows=[-1, 2])


@given(networks(), st.randoms(use_true_random=False))
def test_permuted_preserves_edge_count(spec, rnd):
    perm = list(range(spec.n))
    rnd.shuffle(perm)
    assert spec.permuted(perm).edge_count == spec.edge_count
