# tests/test_uniform_covering.py
"""
engines.uniform_covering のセル分解・粗い幾何・c(R)・直和等長作用素・一様被覆証明書のテスト
"""
import numpy as np
import pytest

from engines.metric_core.generators import path_space
from engines.operator_model.services import isometry_defect, uniform_representation
from engines.partitions.models import default_schedule
from engines.uniform_covering.services import (
    block_isometry,
    cellwise_singular_values,
    coarse_profile,
    covering_bound,
    covering_count,
    certify_uniform,
    decompose,
    full_defect,
)


@pytest.fixture(scope="module")
def path_block():
    decomp = decompose(path_space(8), 2.0)
    rep = uniform_representation(decomp.ambient, 2)
    return block_isometry(decomp, rep, default_schedule(3), truncation=2)


# --- decompose ---
def test_path_decomposition_respects_target_diameter():
    decomp = decompose(path_space(10), 2.0)
    assert 4 <= decomp.n_cells <= 10
    assert decomp.R0 <= 2.0
    assert sorted(p for cell in decomp.cells for p in cell) == list(range(10))


def test_large_target_gives_one_cell():
    space = path_space(5)
    decomp = decompose(space, space.diameter)
    assert decomp.cells == ((0, 1, 2, 3, 4),)
    assert decomp.R0 == space.diameter


def test_decompose_rejects_non_positive_target():
    with pytest.raises(ValueError):
        decompose(path_space(3), 0.0)


# --- coarse_profile ---
def test_single_point_profile():
    space = path_space(1)
    profile = coarse_profile(space, 1.0, [0.0, 5.0])
    assert profile.ball_counts == {0.0: 1, 5.0: 1}


def test_path_profile_counts():
    profile = coarse_profile(path_space(10), 1.0, [0.0, 2.0])
    assert profile.covering_radius <= 1.0
    assert profile.ball_counts[0.0] == 1
    assert profile.ball_counts[2.0] <= 3


# --- covering_count ---
def test_covering_count_extremes():
    decomp = decompose(path_space(10), 2.0)
    assert covering_count(decomp, 0.0) == 1
    assert covering_count(decomp, decomp.ambient.diameter) == decomp.n_cells
    counts = [covering_count(decomp, R) for R in (0.0, 1.0, 3.0, 6.0, 9.0)]
    assert counts == sorted(counts)


def test_covering_bound_multiplies_cell_bound(path_block):
    decomp = path_block.decomposition
    M = covering_bound(decomp, path_block.ranks, 1.0, 3.0, 0.5)
    assert M == covering_count(decomp, 3.0) * 2 * path_block.ranks.S[0]


# --- block_isometry ---
def test_block_isometry_is_block_diagonal(path_block):
    assert isometry_defect(path_block.V) <= 1e-9
    decomp = path_block.decomposition
    rho, pi = path_block.rep_rho, path_block.rep_pi
    for i, cell in enumerate(decomp.cells):
        rest = [p for p in range(decomp.ambient.size) if p not in cell]
        block = path_block.V[np.ix_(pi.slots_of(rest), rho.slots_of(cell))]
        assert not block.any()
        assert np.allclose(path_block.V[np.ix_(pi.slots_of(cell), rho.slots_of(cell))], path_block.instances[i].isometry.V)


def test_one_cell_reduces_to_single_instance():
    space = path_space(3)
    decomp = decompose(space, space.diameter)
    block = block_isometry(decomp, uniform_representation(space, 1), default_schedule(2), truncation=2)
    assert len(block.instances) == 1
    assert np.allclose(block.V, block.instances[0].isometry.V)


def test_defect_is_local_to_the_support(path_block):
    decomp = path_block.decomposition
    values = np.zeros(decomp.ambient.size)
    values[list(decomp.cells[0])] = 0.7
    defect = full_defect(path_block, values)
    cell_of = np.asarray(decomp.cell_of())[path_block.rep_rho.coordinate_points()]
    outside = cell_of != 0
    assert np.max(np.abs(defect[outside]), initial=0.0) <= 1e-10
    assert np.max(np.abs(defect[:, outside]), initial=0.0) <= 1e-10


def test_zero_and_unit_functions_have_no_defect(path_block):
    n = path_block.decomposition.ambient.size
    cells = range(path_block.decomposition.n_cells)
    assert not np.any(cellwise_singular_values(path_block, np.zeros(n), cells) > 1e-10)
    assert np.allclose(full_defect(path_block, np.ones(n)), 0.0, atol=1e-10)


# --- certify_uniform ---
def test_uniform_certificate_passes(path_block):
    grid = [(0.5, 2.0, 0.5), (1.0, 4.0, 0.25)]
    cert = certify_uniform(path_block, grid, samples=6, seed=0)
    assert cert.all_passed
    assert cert.locality_ok
    assert cert.admissibility_ok
    assert len(cert.samples) == 12
    assert [g.k for g in cert.grid] == [2, 1]
    for g in cert.grid:
        assert g.max_rank <= g.M
        assert g.certified_lipschitz >= g.lipschitz
    summary = cert.summary()
    assert summary["pass_rate"] == 1.0
    assert summary["cells"] == path_block.decomposition.n_cells


def test_uniform_certificate_is_reproducible(path_block):
    grid = [(1.0, 3.0, 0.5)]
    a = certify_uniform(path_block, grid, samples=4, seed=7)
    b = certify_uniform(path_block, grid, samples=4, seed=7)
    assert [s.rank for s in a.samples] == [s.rank for s in b.samples]
    assert [s.measured_lipschitz for s in a.samples] == [s.measured_lipschitz for s in b.samples]
