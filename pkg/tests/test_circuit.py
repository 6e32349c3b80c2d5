import math

import numpy as np
import pytest

from qfuzzy import circuit as circ
from qfuzzy import qsim
from qfuzzy.models import QfnnCircuitSpec, build_qfnn_circuit, build_hybrid_circuit


def _specs():
    return [QfnnCircuitSpec(), QfnnCircuitSpec(embedding_axis="y"), QfnnCircuitSpec(layer2_extra_ry=True),
            QfnnCircuitSpec(fuzzy_block_count=2, cz_after_each_fuzzy_block=False)]


@pytest.mark.parametrize("spec", _specs())
def test_batched_engine_matches_gate_by_gate(spec, rng):
    c = build_qfnn_circuit(spec)
    thetas = rng.uniform(-4, 4, (30, c.n_params))
    inputs = rng.uniform(0, math.pi, (30, c.n_inputs))
    batched = circ.expectations(c, thetas, inputs)[:, 0]
    ref = [qsim.expectation_z(circ.simulate_single(c, t, x), 0) for t, x in zip(thetas, inputs)]
    np.testing.assert_allclose(batched, ref, atol=1e-12)


def test_density_path_matches_statevector(rng):
    c = build_hybrid_circuit(1)
    thetas = rng.uniform(-4, 4, (10, c.n_params))
    inputs = rng.uniform(-4, 4, (10, c.n_inputs))
    obs = tuple(range(4))
    np.testing.assert_allclose(circ.expectations(c, thetas, inputs, obs, density=True),
                               circ.expectations(c, thetas, inputs, obs), atol=1e-10)


def test_shift_gradients_match_finite_difference(rng):
    c = build_qfnn_circuit(QfnnCircuitSpec(layer2_extra_ry=True))
    thetas = rng.uniform(-3, 3, (5, c.n_params))
    inputs = rng.uniform(0, math.pi, (5, c.n_inputs))
    e, d_theta, d_input = circ.shift_gradients(c, thetas, inputs)
    h = 1e-5
    for k in range(c.n_params):
        step = np.zeros(c.n_params)
        step[k] = h
        fd = (circ.expectations(c, thetas + step, inputs) - circ.expectations(c, thetas - step, inputs)) / (2 * h)
        np.testing.assert_allclose(d_theta[:, :, k], fd, atol=1e-8)
    for k in range(c.n_inputs):
        step = np.zeros(c.n_inputs)
        step[k] = h
        fd = (circ.expectations(c, thetas, inputs + step) - circ.expectations(c, thetas, inputs - step)) / (2 * h)
        np.testing.assert_allclose(d_input[:, :, k], fd, atol=1e-8)


def test_occurrences_for_shared_parameter():
    c = build_qfnn_circuit(QfnnCircuitSpec())
    # each fuzzy-block angle drives two rotations
    for k in range(4, 8):
        assert len(c.occurrences("theta", k)) == 2
    assert len(c.occurrences("theta", 0)) == 1
    assert len(c.occurrences("input", 1)) == 1


def test_circuit_expectation_callable(rng):
    c = build_qfnn_circuit()
    x = rng.uniform(0, math.pi, 2)
    f = circ.CircuitExpectation(c, x)
    theta = rng.uniform(0, math.pi, 8)
    assert abs(f(theta) - circ.expectations(c, theta, x)[0, 0]) < 1e-14
