import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskfl.errors import ContractError
from riskfl.fedcore import ClientUpdate, Feedback, aggregate, aggregation_weights, make_feedback
from riskfl.model import Layout, ModelParams, init_params

LAY = Layout("linear", 2, 2)


def _w(v=0.0):
    return ModelParams(np.full(LAY.dim, v), LAY)


def test_single_client():
    g = np.arange(LAY.dim, dtype=float)
    out = aggregate(_w(1.0), [ClientUpdate(0, 1, g, 10)], 0.1)
    assert np.allclose(out.w, 1.0 - 0.1 * g)


def test_convex_combination_of_equal_gradients():
    g = np.ones(LAY.dim)
    out = aggregate(_w(), [ClientUpdate(0, 1, g, 30), ClientUpdate(1, 1, g, 10)], 0.5)
    assert np.allclose(out.w, -0.5)
    assert aggregation_weights([ClientUpdate(0, 1, g, 30), ClientUpdate(1, 1, g, 10)]).tolist() == [0.75, 0.25]


def test_opposite_gradients_cancel():
    g = np.linspace(-1, 1, LAY.dim)
    out = aggregate(_w(0.3), [ClientUpdate(0, 1, g, 5), ClientUpdate(1, 1, -g, 5)], 0.1)
    assert np.allclose(out.w, 0.3)


def test_empty_update_list_is_noop():
    w = _w(0.2)
    assert aggregate(w, [], 0.1) is w


def test_global_normalisation_shrinks_step():
    g = np.ones(LAY.dim)
    out = aggregate(_w(), [ClientUpdate(0, 1, g, 10)], 1.0, total_samples=40)
    assert np.allclose(out.w, -0.25)


def test_mixed_rounds_and_bad_layout_rejected():
    g = np.ones(LAY.dim)
    with pytest.raises(ContractError):
        aggregate(_w(), [ClientUpdate(0, 1, g, 1), ClientUpdate(1, 2, g, 1)], 0.1)
    with pytest.raises(ContractError):
        aggregate(_w(), [ClientUpdate(0, 1, np.ones(3), 1)], 0.1)


def test_client_update_validation():
    with pytest.raises(ContractError):
        ClientUpdate(0, 1, np.ones(2), 0)
    with pytest.raises(ContractError):
        ClientUpdate(-1, 1, np.ones(2), 1)
    with pytest.raises(ContractError):
        ClientUpdate(0, 1, np.array([np.inf, 0.0]), 1)


@settings(max_examples=50, deadline=None)
@given(
    sizes=st.lists(st.integers(1, 100), min_size=1, max_size=8),
    seed=st.integers(0, 2**32),
)
def test_aggregation_permutation_invariant_and_weights_sum_to_one(sizes, seed):
    rng = np.random.default_rng(seed)
    ups = [ClientUpdate(k, 3, rng.normal(size=LAY.dim), d) for k, d in enumerate(sizes)]
    shuffled = [ups[i] for i in rng.permutation(len(ups))]
    a = aggregate(_w(), ups, 0.1)
    b = aggregate(_w(), shuffled, 0.1)
    assert a.w.tobytes() == b.w.tobytes()
    assert math.isclose(aggregation_weights(ups).sum(), 1.0, rel_tol=1e-12)


def test_make_feedback_construction():
    w = init_params(LAY)
    fb = make_feedback(w, 0.7, 1, 0.9, 5, 1.0)
    assert fb.round == 1 and fb.weights is w and fb.regret_signal == 0.7
    assert make_feedback(w, 0.0, 3, 0.9, 5, 1.0).normalized == 0.0
    with pytest.raises(ContractError):
        make_feedback(w, -0.1, 1, 0.9, 5, 1.0)
    with pytest.raises(ContractError):
        make_feedback(w, 0.1, 0, 0.9, 5, 1.0)


def test_feedback_bound_increasing_in_round():
    w = init_params(LAY)
    vals = [make_feedback(w, 0.0, t, 0.9, 5, 1.0).regret_bound_value for t in range(2, 200)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_feedback_saturates():
    fb = Feedback(2, init_params(LAY), 100.0, 3.0)
    assert fb.normalized == 1.0
