# tests/test_operator_model.py
"""
engines.operator_model の掛け算表現・スペクトル射影・ε-rank・圧縮のテスト
"""
import numpy as np
import pytest
from pydantic import ValidationError

from common.exceptions import DimensionMismatchError, NotIsometryError
from engines.metric_core.generators import generate_family
from engines.metric_core.services import validate_metric
from engines.operator_model.kernels import CompressionKernel
from engines.operator_model.models import RepresentationModel
from engines.operator_model.services import (
    compress,
    covering_representation,
    eps_rank,
    eps_rank_profile,
    mult_operator,
    numerical_rank,
    random_representation,
    spectral_projection,
    uniform_representation,
)

PAIR = validate_metric([[0, 1], [1, 0]], ["a", "b"], name="pair")


# --- RepresentationModel ---
def test_slots_are_contiguous():
    rep = RepresentationModel(space=PAIR, multiplicity=(2, 1))
    assert rep.dim == 3
    assert rep.offsets == (0, 2, 3)
    assert list(rep.slot_index(1)) == [2]
    assert rep.coordinate_points().tolist() == [0, 0, 1]
    assert not rep.is_uniform


def test_multiplicity_must_be_positive():
    with pytest.raises(ValidationError):
        RepresentationModel(space=PAIR, multiplicity=(1, 0))


def test_random_representation_is_seeded():
    space = generate_family({"kind": "grid_balls", "radius": 2, "count": 1}).spaces[0]
    a = random_representation(space, 4, seed=3)
    assert a.multiplicity == random_representation(space, 4, seed=3).multiplicity
    assert all(1 <= m <= 4 for m in a.multiplicity)


def test_covering_representation_has_headroom():
    rho = RepresentationModel(space=PAIR, multiplicity=(2, 3))
    pi = covering_representation(PAIR, 4, rho)
    assert pi.multiplicity == (7, 7)


def test_restrict_keeps_multiplicities():
    rep = RepresentationModel(space=PAIR, multiplicity=(2, 3))
    sub = rep.restrict([1], name="b")
    assert sub.multiplicity == (3,)
    assert sub.space.points == ("b",)


# --- 演算子 ---
def test_mult_operator_of_unit_is_identity():
    rep = uniform_representation(PAIR, 3)
    assert np.array_equal(mult_operator(rep, [1, 1]), np.eye(6))


def test_mult_operator_two_points():
    rep = uniform_representation(PAIR, 1)
    assert np.array_equal(mult_operator(rep, [2, 3j]), np.diag([2, 3j]))


def test_mult_operator_checks_length():
    with pytest.raises(DimensionMismatchError):
        mult_operator(uniform_representation(PAIR, 1), [1, 2, 3])


def test_spectral_projections():
    rep = RepresentationModel(space=PAIR, multiplicity=(2, 1))
    assert np.array_equal(spectral_projection(rep, [0, 1]), np.eye(3))
    assert not spectral_projection(rep, []).any()
    first = spectral_projection(rep, [0])
    assert np.array_equal(first, np.diag([1.0, 1.0, 0.0]))
    assert numerical_rank(first) == 2


# --- ε-rank ---
def test_eps_rank_basics():
    assert eps_rank(np.zeros((3, 3)), 0.1).rank == 0
    assert eps_rank(np.eye(4), 0.5).rank == 4
    result = eps_rank(np.diag([3.0, 2.0, 1.0, 0.1]), 0.5)
    assert result.rank == 3
    assert result.head(2) == pytest.approx((3.0, 2.0))


def test_eps_rank_is_strict():
    assert eps_rank(np.diag([1.0, 0.5]), 0.5).rank == 1


def test_eps_rank_witness_is_within_eps():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6))
    result = eps_rank(A, 1.0, with_witness=True)
    assert np.linalg.matrix_rank(result.witness) == result.rank
    assert np.linalg.norm(A - result.witness, 2) <= 1.0 + 1e-12


@pytest.mark.parametrize(
    "matrices, trials",
    [(20, 30), pytest.param(100, 200, marks=pytest.mark.slow)],
)
def test_no_sampled_low_rank_matrix_beats_the_next_singular_value(matrices, trials):
    rng = np.random.default_rng(3)
    for _ in range(matrices):
        n = int(rng.integers(2, 7))
        A = rng.standard_normal((n, n))
        s = eps_rank(A, 1e-3).singular_values
        for r in range(1, min(3, n - 1) + 1):
            for _ in range(trials):
                B = rng.standard_normal((n, r)) @ rng.standard_normal((r, n))
                assert np.linalg.norm(A - B, 2) >= s[r] - 1e-10


def test_eps_rank_profile_is_non_increasing():
    rng = np.random.default_rng(1)
    ranks = [r.rank for r in eps_rank_profile(rng.standard_normal((8, 8)), [0.1, 0.5, 1.0, 2.0, 5.0])]
    assert ranks == sorted(ranks, reverse=True)


def test_eps_rank_rejects_non_positive_eps():
    with pytest.raises(ValueError):
        eps_rank(np.eye(2), 0.0)


# --- compress ---
def test_compress_identity_and_unit():
    A = np.diag([5.0, 7.0])
    assert np.array_equal(compress(np.eye(2), A), A)
    V = np.array([[1.0], [0.0]])
    assert compress(V, np.eye(2)).tolist() == [[1.0]]
    assert compress(V, A).tolist() == [[5.0]]


def test_compress_rejects_non_isometry():
    with pytest.raises(NotIsometryError):
        compress(np.array([[2.0], [0.0]]), np.eye(2))


def test_compress_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        compress(np.eye(2), np.eye(3))


def test_kernel_matches_direct_compression():
    rng = np.random.default_rng(2)
    rho = RepresentationModel(space=PAIR, multiplicity=(1, 2))
    pi = uniform_representation(PAIR, 4)
    q, _ = np.linalg.qr(rng.standard_normal((pi.dim, rho.dim)))
    kernel = CompressionKernel(q, pi, rho)
    values = np.array([0.3 - 0.2j, -0.7])
    expected = compress(q, mult_operator(pi, values))
    assert np.allclose(kernel.compress(values), expected)
    assert np.allclose(kernel.defect(values), expected - mult_operator(rho, values))


def test_kernel_checks_shapes():
    with pytest.raises(DimensionMismatchError):
        CompressionKernel(np.zeros((3, 3)), uniform_representation(PAIR, 2), uniform_representation(PAIR, 1))
