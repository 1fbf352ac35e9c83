from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from redraw import io as rio
from redraw.metrics import report, ConfusionCounts
from redraw.model import PhaseTrace, ReconstructionParams, SimConfig, ValidationError
from redraw.topologies import figure


@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_subnormal=False)))
def test_trace_csv_round_trip_is_exact(phases):
    times = np.arange(phases.shape[0]) * 0.01
    tr = PhaseTrace(times, phases)
    back = rio.loads_trace(rio.dumps_trace(tr))
    assert back.phases.tobytes() == tr.phases.tobytes()
    assert back.times.tobytes() == tr.times.tobytes()


def test_trace_header():
    tr = PhaseTrace([0.0, 0.5], np.zeros((2, 3)))
    assert rio.dumps_trace(tr).splitlines()[0] == "t,theta_1,theta_2,theta_3"
    with pytest.raises(ValidationError):
        rio.loads_trace("x,y\n1,2\n")


@given(arrays(np.float64, (4, 4), elements=st.floats(0, 1)))
def test_matrix_csv_round_trip(values):
    assert rio.loads_matrix(rio.dumps_matrix(values)).tobytes() == values.tobytes()


def test_dot_uses_three_decimals_and_source_to_target():
    text = rio.dumps_dot(np.array([[0.0, 0.0], [0.123456, 0.0]]))
    assert '1 -> 2 [label="0.123"]' in text


def test_sim_config_and_params_round_trip(tmp_path):
    cfg = SimConfig(natural_frequencies=[1.25, 1.5], initial_phases=[0.1, -0.2], coupling=7.5, seed=4)
    back = rio.sim_config_from_dict(json.loads(json.dumps(rio.sim_config_to_dict(cfg))))
    assert back.coupling == 7.5 and back.seed == 4
    np.testing.assert_array_equal(back.natural_frequencies, cfg.natural_frequencies)
    p = ReconstructionParams(0.7, 0.5, (0.0, 1.0, 2.0))
    assert rio.params_from_dict(rio.params_to_dict(p)) == p


def test_network_file_round_trip(tmp_path):
    spec = figure("fig5b")
    path = tmp_path / "net.json"
    rio.save_network(spec, path)
    assert rio.load_network(path).weights.tobytes() == spec.weights.tobytes()
    assert not list(tmp_path.glob("*.tmp*"))


def test_metrics_csv_column_order_and_absent_values():
    rep = report(ConfusionCounts(tp=0, fp=0, tn=10, fn=2, n=4))
    lines = rio.dumps_metrics_csv(rep, "x").splitlines()
    assert lines[0] == "topology,PPV,ACC,TPR,FPR"
    assert lines[1].split(",")[1] == ""
    doc = rio.metrics_to_dict(rep)
    assert doc["PPV"] is None and "ppv" in doc["missing"]
