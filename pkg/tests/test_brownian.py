import numpy as np
import pytest

from volterra_sing.brownian import (
    BrownianPath,
    SimulationGrid,
    path_key,
    refine_brownian,
    refine_ensemble_increments,
    sample_brownian,
    sample_ensemble_increments,
)


class TestGrid:
    def test_uniform_times(self):
        g = SimulationGrid(4, 2.0)
        np.testing.assert_allclose(g.times, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert g.dt == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            SimulationGrid(1, 1.0)
        with pytest.raises(ValueError):
            SimulationGrid(4, -1.0)

    def test_refined(self):
        assert SimulationGrid(8, 1.0).refined() == SimulationGrid(16, 1.0)


class TestSampling:
    def test_determinism(self):
        g = SimulationGrid(128, 1.0)
        p1 = sample_brownian(g, seed=42)
        p2 = sample_brownian(g, seed=42)
        assert np.array_equal(p1.increments, p2.increments)

    def test_different_seeds_differ(self):
        g = SimulationGrid(128, 1.0)
        assert not np.array_equal(
            sample_brownian(g, seed=1).increments, sample_brownian(g, seed=2).increments
        )

    def test_increment_scale(self):
        g = SimulationGrid(20000, 1.0)
        p = sample_brownian(g, seed=3)
        assert p.increments.std() == pytest.approx(np.sqrt(g.dt), rel=0.05)

    def test_mean_within_clt_bound(self):
        # sample mean of n increments has std sqrt(dt/n); 4 sigma at fixed seed
        n = 10**6
        g = SimulationGrid(n, 1.0)
        p = sample_brownian(g, seed=42)
        assert abs(p.increments.mean()) <= 4.0 * np.sqrt(g.dt / n)

    def test_values_start_at_zero(self):
        p = sample_brownian(SimulationGrid(16, 1.0), seed=0)
        vals = p.values
        assert vals[0] == 0.0
        np.testing.assert_allclose(np.diff(vals), p.increments, rtol=0, atol=1e-15)

    def test_shape_validation(self):
        g = SimulationGrid(8, 1.0)
        with pytest.raises(ValueError):
            BrownianPath(grid=g, increments=np.zeros(5), seed=0)


class TestRefinement:
    def test_pair_sums_exact(self):
        # bitwise wherever a representable pair exists; when the bridge
        # draw exceeds the coarse increment in magnitude binary64 cannot
        # encode an exact pair and one ulp at the fine-increment scale
        # remains
        p = sample_brownian(SimulationGrid(4096, 1.0), seed=11)
        fine = refine_brownian(p)
        f1, f2 = fine.increments[0::2], fine.increments[1::2]
        pair_sums = f1 + f2
        resid = np.abs(pair_sums - p.increments)
        fine_scale = np.maximum(np.abs(f1), np.abs(f2))
        assert np.all(resid <= 4.0 * np.finfo(float).eps * fine_scale)
        assert np.mean(pair_sums == p.increments) > 0.6

    def test_two_levels(self):
        p = sample_brownian(SimulationGrid(32, 1.0), seed=11)
        f2 = refine_brownian(refine_brownian(p))
        assert f2.grid.n == 128
        assert f2.level == 2
        sums = f2.increments.reshape(-1, 4).sum(axis=1)
        np.testing.assert_allclose(sums, p.increments, rtol=1e-12, atol=1e-15)

    def test_refinement_deterministic(self):
        p = sample_brownian(SimulationGrid(64, 1.0), seed=11)
        f1 = refine_brownian(p)
        f2 = refine_brownian(p)
        assert np.array_equal(f1.increments, f2.increments)

    def test_midpoints_have_bridge_variance(self):
        g = SimulationGrid(20000, 1.0)
        p = sample_brownian(g, seed=5)
        fine = refine_brownian(p)
        w = fine.increments[0::2] - 0.5 * p.increments
        assert w.std() == pytest.approx(0.5 * np.sqrt(g.dt), rel=0.05)


class TestEnsemble:
    def test_rows_are_keyed_paths(self):
        g = SimulationGrid(32, 1.0)
        inc = sample_ensemble_increments(g, master_seed=9, m=5)
        for p in range(5):
            row = sample_brownian(g, path_key(9, p)).increments
            assert np.array_equal(inc[p], row)

    def test_chunking_reproduces_rows(self):
        g = SimulationGrid(32, 1.0)
        whole = sample_ensemble_increments(g, master_seed=9, m=10)
        head = sample_ensemble_increments(g, master_seed=9, m=4, path_offset=0)
        tail = sample_ensemble_increments(g, master_seed=9, m=6, path_offset=4)
        assert np.array_equal(whole, np.vstack([head, tail]))

    def test_ensemble_refinement_matches_single_path(self):
        g = SimulationGrid(16, 1.0)
        inc = sample_ensemble_increments(g, master_seed=9, m=3)
        fine = refine_ensemble_increments(inc, g.dt, master_seed=9, level=0)
        for p in range(3):
            single = refine_brownian(sample_brownian(g, path_key(9, p)))
            assert np.array_equal(fine[p], single.increments)

    def test_key_layout(self):
        assert path_key(1, 0) == 1 << 64
        assert path_key(0, 7) == 7
        assert path_key(3, 5) != path_key(5, 3)
