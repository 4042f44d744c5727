# tests/test_metric_core.py
"""
engines.metric_core の距離公理検証・ε-net・admissibility・生成器・空間ファイル入出力のテスト
"""
import json
from itertools import combinations

import numpy as np
import pytest

from common.exceptions import (
    MetricValidationError,
    NetBudgetExceededError,
    SpaceFileError,
    UnknownFamilyError,
)
from engines.metric_core.generators import generate_family, grid_ball, star_space
from engines.metric_core.io import load_family_file, save_family, save_space
from engines.metric_core.models import SpaceFamily
from engines.metric_core.services import (
    admissibility_profile,
    greedy_net,
    is_isometric,
    min_net_exact,
    validate_metric,
)


def line(*coords):
    x = np.array(coords, dtype=float)
    return validate_metric(np.abs(x[:, None] - x[None, :]), name="line")


# --- validate_metric ---
def test_single_point_and_pair_are_valid():
    assert validate_metric([[0]]).size == 1
    pair = validate_metric([[0, 1], [1, 0]])
    assert pair.diameter == 1.0
    assert pair.points == ("0", "1")


def test_asymmetry_reported_with_indices():
    with pytest.raises(MetricValidationError) as exc:
        validate_metric([[0, 1], [2, 0]])
    assert exc.value.axioms == {"symmetry"}
    assert exc.value.violations[0].indices == (0, 1)


@pytest.mark.parametrize(
    "matrix, axiom",
    [
        ([[0, -1], [-1, 0]], "non_negative"),
        ([[1, 1], [1, 0]], "zero_diagonal"),
        ([[0, 0], [0, 0]], "separation"),
        ([[0, 1, 5], [1, 0, 1], [5, 1, 0]], "triangle"),
        ([[0, float("inf")], [float("inf"), 0]], "finite"),
    ],
)
def test_each_axiom_violation(matrix, axiom):
    with pytest.raises(MetricValidationError) as exc:
        validate_metric(matrix)
    assert axiom in exc.value.axioms


def test_empty_matrix_is_rejected():
    with pytest.raises(MetricValidationError) as exc:
        validate_metric(np.zeros((0, 0)), [], name="empty")
    assert exc.value.axioms == {"non_empty"}


def test_triangle_violation_witness():
    with pytest.raises(MetricValidationError) as exc:
        validate_metric([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    tri = [v for v in exc.value.violations if v.axiom == "triangle"][0]
    assert tri.indices == (0, 2, 1)


def test_dist_is_read_only():
    space = line(0, 1)
    with pytest.raises(ValueError):
        space.dist[0, 1] = 3.0


# --- ε-net ---
def test_exact_net_on_collinear_points():
    space = line(0, 1, 2)
    assert min_net_exact(space, 0.5).size == 3
    net = min_net_exact(space, 1.0)
    assert net.members == (1,)
    assert net.certify(space)


def test_net_of_radius_at_least_diameter_is_one_point():
    space = line(0, 1, 2, 3)
    assert min_net_exact(space, 3.0).size == 1
    greedy = greedy_net(space, 3.0)
    assert greedy.members == (0,)


def test_greedy_on_collinear_points():
    net = greedy_net(line(0, 1, 2), 0.5)
    assert net.size == 3
    assert net.members == (0, 2, 1)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_star_needs_every_leaf_and_the_center(n):
    star = star_space(n)
    assert min_net_exact(star, 0.9).size == n + 1
    assert greedy_net(star, 0.9).size == n + 1


def test_exact_budget():
    with pytest.raises(NetBudgetExceededError):
        min_net_exact(line(*range(6)), 0.5, budget=5)


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        greedy_net(line(0, 1), 0.0)


def test_greedy_members_are_separated_and_bounded_by_packing():
    family = generate_family({"kind": "bounded_degree_trees", "degree": 3, "depth": 2, "count": 4}, seed=3)
    for space in family.spaces:
        if space.size > 12:
            continue
        for eps in (0.5, 1.0, 1.5, 2.0):
            greedy = greedy_net(space, eps)
            exact = min_net_exact(space, eps)
            assert greedy.certify(space) and exact.certify(space)
            assert greedy.size >= exact.size
            assert greedy.size <= min_net_exact(space, eps / 2).size
            for a, b in combinations(greedy.members, 2):
                assert space.dist[a, b] > eps


# --- admissibility ---
def test_single_point_family_profile():
    family = SpaceFamily(spaces=(validate_metric([[0]]),))
    profile = admissibility_profile(family, [0.1, 1.0, 5.0], "exact")
    assert [e.N for e in profile.entries] == [1, 1, 1]


def test_star_family_is_not_admissible():
    family = generate_family({"kind": "star_family", "n_list": [2, 4, 8]})
    profile = admissibility_profile(family, [0.9], "exact")
    assert [w.size for w in profile.entries[0].witnesses] == [3, 5, 9]
    assert profile.n_of(0.9) == 9


def test_grid_balls_have_constant_net_size():
    family = generate_family({"kind": "grid_balls", "radius": 2, "count": 4}, seed=1)
    profile = admissibility_profile(family, [1.0], "exact")
    sizes = {w.size for w in profile.entries[0].witnesses}
    assert len(sizes) == 1


# --- generators ---
def test_star_family_construction():
    family = generate_family({"kind": "star_family", "n_list": [3], "subdivision": 1})
    star = family.spaces[0]
    assert star.size == 4
    assert star.dist[1, 2] == 2.0
    assert star.dist[0, 3] == 1.0


def test_subdivided_star_keeps_unit_edges():
    star = star_space(2, subdivision=2)
    assert star.size == 5
    assert star.dist[0, 2] == 1.0
    assert star.dist[0, 1] == 0.5


def test_grid_balls_are_isometric():
    family = generate_family({"kind": "grid_balls", "radius": 2, "count": 3}, seed=7)
    first = family.spaces[0]
    assert first.size == 13
    assert all(is_isometric(first, other) for other in family.spaces[1:])
    assert is_isometric(grid_ball((0, 0), 2, "a"), grid_ball((5, -3), 2, "b"))


def test_generation_is_deterministic():
    spec = {"kind": "bounded_degree_trees", "degree": 3, "depth": 3, "count": 3}
    a, b = generate_family(spec, seed=11), generate_family(spec, seed=11)
    assert all(np.array_equal(x.dist, y.dist) for x, y in zip(a.spaces, b.spaces))


def test_trees_respect_degree():
    family = generate_family({"kind": "bounded_degree_trees", "degree": 3, "depth": 3, "count": 5}, seed=2)
    for tree in family.spaces:
        assert np.all(np.sum(tree.dist == 1.0, axis=1) <= 3)


@pytest.mark.parametrize("group, size", [("Z", 5), ("Z2", 13), ("free2", 17)])
def test_rips_sample_ball_sizes(group, size):
    family = generate_family({"kind": "rips_sample", "group": group, "radius": 2, "count": 2}, seed=4)
    assert [s.size for s in family.spaces] == [size, size]
    assert is_isometric(family.spaces[0], family.spaces[1])


def test_unknown_family():
    with pytest.raises(UnknownFamilyError):
        generate_family({"kind": "hyperbolic_plane"})


# --- 入出力 ---
def test_space_file_round_trip(tmp_path):
    space = generate_family({"kind": "star_family", "n_list": [3], "subdivision": 3}).spaces[0]
    path = save_space(space, tmp_path / "star.json")
    loaded = generate_family({"kind": "from_file", "path": str(path)}).spaces[0]
    assert np.array_equal(loaded.dist, space.dist)
    assert loaded.points == space.points


def test_family_file_round_trip_ignores_header(tmp_path):
    family = generate_family({"kind": "grid_balls", "radius": 1, "count": 2}, seed=0)
    path = save_family(family, tmp_path / "family.json", header={"command": "gen"})
    assert json.loads(path.read_text())["header"] == {"command": "gen"}
    loaded = load_family_file(path)
    assert loaded.family_kind == "grid_balls"
    assert all(np.array_equal(a.dist, b.dist) for a, b in zip(loaded.spaces, family.spaces))


def test_edges_file_uses_shortest_paths(tmp_path):
    path = tmp_path / "edges.json"
    path.write_text(json.dumps({"points": ["a", "b", "c"], "edges": [[0, 1, 1.5], [1, 2, 2.0]]}))
    space = load_family_file(path).spaces[0]
    assert space.dist[0, 2] == 3.5


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps({"points": ["a"]}),
        json.dumps({"points": ["a", "b"], "dist": [[0, 1], [2, 0]]}),
        json.dumps({"points": ["a", "b", "c"], "edges": [[0, 1, 1.0]]}),
    ],
)
def test_malformed_space_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(SpaceFileError):
        load_family_file(path)


def test_missing_space_file(tmp_path):
    with pytest.raises(SpaceFileError) as exc:
        load_family_file(tmp_path / "nope.json")
    assert exc.value.reason == "file not found"
