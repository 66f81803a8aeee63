import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowproj._rng import SplitMix64
from shadowproj.exceptions import InputError
from shadowproj.measures import (
    DiscreteMeasure,
    MarginalVector,
    MetricSpec,
    ProductMeasure,
    aggregate,
    ground_distance,
    grid_measure,
    load_measure,
    marginal,
    marginal_vector_distance,
    measure_from_dict,
    measure_to_dict,
    pairwise_cost,
    sample_empirical,
    save_measure,
)

SPEC = MetricSpec(2, (1, 1))


def test_ground_distance_examples():
    x, y = [0.0, 0.0], [1.0, 1.0]
    assert ground_distance(x, y, MetricSpec(2, (1, 1))) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert ground_distance(x, y, MetricSpec(math.inf, (1, 1))) == 1.0
    assert ground_distance(x, y, MetricSpec(1, (1, 1))) == 2.0


def test_ground_distance_dimension_mismatch():
    with pytest.raises(InputError):
        ground_distance([0.0], [1.0, 1.0], SPEC)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]),
)
def test_separable_metric_is_lp_norm(x, y, p):
    # l_p of per-block l_p norms collapses to the l_p norm of the whole difference
    spec = MetricSpec(p, (1, 2))
    d = ground_distance(x, y, spec)
    ref = np.linalg.norm(np.subtract(x, y), ord=p)
    assert d == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_pairwise_cost_is_power():
    X = np.array([[0.0, 0.0], [1.0, 2.0]])
    Y = np.array([[1.0, 1.0]])
    C = pairwise_cost(X, Y, SPEC)
    assert C[:, 0] == pytest.approx([2.0, 1.0])
    Ci = pairwise_cost(X, Y, MetricSpec(math.inf, (1, 1)))
    assert Ci[:, 0] == pytest.approx([1.0, 1.0])


def test_metric_spec_validation():
    with pytest.raises(InputError):
        MetricSpec(0.5, (1,))
    with pytest.raises(InputError):
        MetricSpec(2, ())
    assert MetricSpec(2, (1, 2)).with_p(math.inf).is_inf


def test_duplicates_merge_in_first_occurrence_order():
    m = DiscreteMeasure([[1.0], [0.0], [1.0]], [0.25, 0.5, 0.25])
    assert m.atoms[:, 0].tolist() == [1.0, 0.0]
    assert m.weights.tolist() == [0.5, 0.5]
    # -0.0 and 0.0 are the same point
    assert DiscreteMeasure([[-0.0], [0.0]]).n_atoms == 1


@pytest.mark.parametrize(
    "weights",
    [[0.5, 0.4], [0.5, -0.5, 1.0], [0.0, 1.0], [math.nan, 1.0]],
)
def test_bad_weights(weights):
    atoms = [[float(k)] for k in range(len(weights))]
    with pytest.raises(InputError) as exc:
        DiscreteMeasure(atoms, weights)
    assert exc.value.field == "weights"


def test_weights_renormalized_within_tolerance():
    m = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5 + 5e-13])
    assert math.fsum(m.weights) == pytest.approx(1.0, abs=1e-15)


def test_arrays_read_only():
    m = DiscreteMeasure([[0.0], [1.0]])
    with pytest.raises(ValueError):
        m.weights[0] = 1.0


def test_marginal_examples():
    u = ProductMeasure(DiscreteMeasure([[0.0, 0.0], [1.0, 1.0]]), (1, 1))
    m0 = marginal(u, 0)
    assert m0.atoms[:, 0].tolist() == [0.0, 1.0]
    assert m0.weights.tolist() == [0.5, 0.5]
    d = ProductMeasure(DiscreteMeasure.dirac([0.3, 0.7]), (1, 1))
    assert marginal(d, 1).same_as(DiscreteMeasure.dirac([0.7]))
    v = ProductMeasure(DiscreteMeasure([[0.0, 0.0], [0.0, 1.0]]), (1, 1))
    assert marginal(v, 0).same_as(DiscreteMeasure.dirac([0.0]))
    with pytest.raises(InputError):
        marginal(v, 2)


def test_marginal_vector_distance_examples():
    a = MarginalVector([DiscreteMeasure([[0.0], [1.0]]), DiscreteMeasure.dirac([0.5])])
    assert marginal_vector_distance(a, a, SPEC) == 0.0
    b = MarginalVector([a[0], DiscreteMeasure.dirac([0.0])])
    # components (0, 0.5)
    assert marginal_vector_distance(a, b, SPEC) == pytest.approx(0.5, abs=1e-15)
    # pluggable solver handle, max aggregation for inf
    fake = iter([0.3, 0.7])
    val = marginal_vector_distance(a, b, MetricSpec(math.inf, (1, 1)), ot=lambda *_: next(fake))
    assert val == 0.7


def test_aggregate():
    assert aggregate([3.0, 4.0], 2) == 5.0
    assert aggregate([0.3, 0.7], math.inf) == 0.7
    assert aggregate([0.3, 0.7], 1) == pytest.approx(1.0)


def test_sample_empirical_dirac_and_determinism():
    d = DiscreteMeasure.dirac([0.25])
    assert sample_empirical(d, 5, 9).same_as(d)
    m = DiscreteMeasure([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5])
    assert sample_empirical(m, 50, 123).same_as(sample_empirical(m, 50, 123))
    with pytest.raises(InputError):
        sample_empirical(m, 0, 1)


def test_sample_empirical_replays_generator():
    m = DiscreteMeasure([[0.0], [1.0]])
    s = sample_empirical(m, 4, 2024)
    u = SplitMix64(2024).uniforms(4)
    ones = sum(1 for x in u if x >= 0.5)
    expected = {0.0: (4 - ones) / 4, 1.0: ones / 4}
    got = dict(zip(s.atoms[:, 0].tolist(), s.weights.tolist()))
    assert got == {k: v for k, v in expected.items() if v > 0}
    assert all(w * 4 == round(w * 4) for w in s.weights)


def test_sample_empirical_keeps_product_kind():
    rho = ProductMeasure(DiscreteMeasure([[0.0, 1.0], [1.0, 0.0]]), (1, 1))
    s = sample_empirical(rho, 10, 5)
    assert isinstance(s, ProductMeasure) and s.block_dims == (1, 1)


def test_json_round_trip_bit_stable(tmp_path):
    rng = np.random.default_rng(0)
    atoms = rng.random((5, 3))
    w = rng.random(5)
    w = w / math.fsum(w)
    m = ProductMeasure(DiscreteMeasure(atoms, w), (1, 2))
    save_measure(m, tmp_path / "m.json")
    back = load_measure(tmp_path / "m.json")
    assert isinstance(back, ProductMeasure) and back.block_dims == (1, 2)
    assert np.array_equal(back.atoms, m.atoms)
    assert np.array_equal(back.weights, m.weights)


def test_json_uniform_default_and_errors(tmp_path):
    m = measure_from_dict({"dims": [1], "atoms": [[0.0], [1.0]]})
    assert isinstance(m, DiscreteMeasure) and m.weights.tolist() == [0.5, 0.5]
    with pytest.raises(InputError) as exc:
        measure_from_dict({"dims": [2], "atoms": [[0.0]]})
    assert exc.value.field == "atoms"
    with pytest.raises(InputError) as exc:
        measure_from_dict({"atoms": [[0.0]]})
    assert exc.value.field == "dims"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dims": [1], "atoms": [[0.0], [1.0]], "weights": [0.5, 0.4]}))
    with pytest.raises(InputError) as exc:
        load_measure(p)
    assert exc.value.field == "weights" and exc.value.file == str(p)
    assert measure_to_dict(m)["dims"] == [1]


def test_grid_measure_density():
    g = grid_measure([[0.0, 1.0], [0.0, 1.0]], lambda a: 1.0 + a[0])
    assert g.n_atoms == 4 and g.block_dims == (1, 1)
    assert g.weights.tolist() == pytest.approx([1 / 6, 1 / 6, 2 / 6, 2 / 6])


def test_translate():
    mv = MarginalVector([DiscreteMeasure([[0.0], [1.0]])])
    assert mv.translate(0.5)[0].atoms[:, 0].tolist() == [0.5, 1.5]
