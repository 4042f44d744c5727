# tests/test_function_nets.py
"""
engines.function_nets の Lipschitz 定数・量子化パラメータ・量子化・net サイズ・サンプラのテスト
"""
import math
from itertools import product

import numpy as np
import pytest

from engines.function_nets.params import quantization_params
from engines.function_nets.services import (
    lipschitz_constant,
    make_function,
    net_size,
    quantize,
    sample_lipschitz,
)
from engines.metric_core.generators import generate_family
from engines.metric_core.services import greedy_net, validate_metric
from engines.partitions.models import Partition
from engines.partitions.services import voronoi_partition


def line(*coords):
    x = np.array(coords, dtype=float)
    return validate_metric(np.abs(x[:, None] - x[None, :]), name="line")


@pytest.fixture
def tree():
    return generate_family({"kind": "bounded_degree_trees", "degree": 3, "depth": 3, "count": 1}, seed=9).spaces[0]


# --- lipschitz_constant ---
def test_constant_function_has_zero_constant():
    assert lipschitz_constant([0.3, 0.3, 0.3], line(0, 1, 2)) == 0.0


def test_distance_function_is_1_lipschitz(tree):
    assert lipschitz_constant(tree.dist[0], tree) <= 1.0


def test_collinear_hat():
    assert lipschitz_constant([0, 1, 0], line(0, 1, 2)) == 1.0


def test_make_function_rejects_false_claims():
    space = line(0, 1)
    with pytest.raises(ValueError):
        make_function([0.0, 1.0], space, claimed_lipschitz=0.5)
    with pytest.raises(ValueError):
        make_function([0.0, 1.5], space, claimed_lipschitz=2.0)
    f = make_function([0.0, 0.5j], space)
    assert f.claimed_lipschitz == 0.5
    assert not f.is_real


# --- quantization_params ---
@pytest.mark.parametrize(
    "lip, eps, expected",
    [
        (0.0, 0.5, (math.inf, 4)),
        (1.0, 0.5, (0.25, 5)),
        (2.0, 0.1, (0.025, 21)),
    ],
)
def test_quantization_params(lip, eps, expected):
    assert quantization_params(lip, eps) == expected


def test_complex_grid_needs_more_levels():
    eps1, K = quantization_params(1.0, 0.5, "complex")
    assert eps1 == 0.25
    assert math.sqrt(2) / K + 0.25 < 0.5
    assert K > quantization_params(1.0, 0.5)[1]


@pytest.mark.parametrize("eps", [0.0, -1.0, 2.5])
def test_quantization_params_reject_eps(eps):
    with pytest.raises(ValueError):
        quantization_params(1.0, eps)


# --- quantize ---
def test_quantize_zero():
    space = line(0, 1, 2)
    part = Partition(cell_of=(0, 0, 0), centers=(1,), radius_bound=1.0)
    q = quantize(make_function([0, 0, 0], space, claimed_lipschitz=1.0), part, 4)
    assert q.simple.level_of == ((0, 0),)
    assert q.sup_error == 0.0


def test_quantize_on_singletons_is_exact():
    space = line(0, 1, 2)
    part = Partition(cell_of=(0, 1, 2), centers=(0, 1, 2), radius_bound=0.5)
    q = quantize(make_function([0, 0.5, 1], space), part, 2)
    assert [a for a, _ in q.simple.level_of] == [0, 1, 2]
    assert q.sup_error == 0.0


def test_quantize_one_cell():
    space = line(0, 1, 2)
    part = Partition(cell_of=(0, 0, 0), centers=(1,), radius_bound=1.0)
    q = quantize(make_function([0, 0.5, 1], space, claimed_lipschitz=1.0), part, 2)
    assert q.simple.cell_values()[0] == 0.5
    assert q.sup_error == 0.5
    assert q.error_bound == 1.5
    assert q.within_bound


def test_quantize_tie_goes_down():
    space = line(0, 1)
    part = Partition(cell_of=(0, 1), centers=(0, 1), radius_bound=0.5)
    q = quantize(make_function([0.25, -0.25], space), part, 2)
    assert q.simple.level_of == ((0, 0), (-1, 0))


def test_quantize_complex_mode():
    space = line(0, 1)
    part = Partition(cell_of=(0, 1), centers=(0, 1), radius_bound=0.5)
    f = make_function([0.5 + 0.5j, -0.5j], space)
    q = quantize(f, part, 2, "complex")
    assert q.simple.level_of == ((1, 1), (0, -1))
    with pytest.raises(ValueError):
        quantize(f, part, 2, "real")


def test_quantized_samples_stay_within_bound(tree):
    part = voronoi_partition(tree, greedy_net(tree, 1.0))
    for f in sample_lipschitz(tree, 0.25, 20, seed=1):
        q = quantize(f, part, 5)
        assert q.within_bound
        assert q.error_bound == 0.2 + 0.25


# --- net_size ---
@pytest.mark.parametrize("cells, K, exact", [(1, 2, 5), (2, 2, 25), (0, 3, 1)])
def test_net_size_real(cells, K, exact):
    assert net_size(cells, K).exact == exact


def test_net_size_nonnegative_grid_versus_formula():
    report = net_size(2, 2)
    assert report.nonnegative_grid == 9
    assert report.stated_formula == 8


@pytest.mark.parametrize("cells", [0, 1, 2, 3])
@pytest.mark.parametrize("K", [1, 2])
def test_net_size_matches_enumeration(cells, K):
    levels = [i / K for i in range(-K, K + 1)]
    functions = {tuple(v) for v in product(levels, repeat=cells)}
    assert net_size(cells, K).exact == len(functions)


def test_net_size_complex_and_big_integers():
    assert net_size(1, 1, "complex").exact == 9
    assert net_size(100, 10).exact == 21 ** 100


# --- sample_lipschitz ---
def test_zero_lipschitz_samples_are_constant(tree):
    for f in sample_lipschitz(tree, 0.0, 5, seed=0):
        assert np.ptp(f.values.real) == 0.0
        assert f.sup_norm <= 1.0


@pytest.mark.parametrize("mode", ["real", "complex"])
def test_samples_respect_lipschitz_and_sup(tree, mode):
    for f in sample_lipschitz(tree, 0.7, 30, seed=5, mode=mode):
        assert lipschitz_constant(f.values, tree) <= 0.7 + 1e-12
        assert f.sup_norm <= 1.0 + 1e-12


def test_samples_are_reproducible(tree):
    a = sample_lipschitz(tree, 1.0, 10, seed=42)
    b = sample_lipschitz(tree, 1.0, 10, seed=42)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    c = sample_lipschitz(tree, 1.0, 10, seed=43)
    assert not all(np.array_equal(x.values, y.values) for x, y in zip(a, c))
