import numpy as np
import pytest

from volterra_sing.brownian import SimulationGrid, refine_brownian, sample_brownian
from volterra_sing.coefficients import (
    AffineSinFn,
    CoefficientSet,
    ConstantFn,
    GAffine,
    GExp,
    GOne,
    LinearFn,
    ProblemSpec,
    TimePowerFn,
)
from volterra_sing.kernels import KernelError, KernelSpec, ShiftedPower
from volterra_sing.solvers import (
    IntegrationError,
    Trajectory,
    ito_ensemble,
    phi_at,
    solve_ito_form,
    solve_ito_regular,
    solve_regularized,
    solve_volterra,
    volterra_ensemble,
)

ALPHA = 0.75
POWER = KernelSpec.power(ALPHA)


def make_problem(b, sigma, g=None, kernel=POWER, x0=0.0, T=1.0, **kw):
    coeffs = CoefficientSet(
        b=b, sigma=sigma, g=g if g is not None else GOne(),
        L=kw.pop("L", 2.5), beta1=kw.pop("beta1", 1.0), beta2=kw.pop("beta2", 1.0),
    )
    return ProblemSpec(kernel=kernel, coeffs=coeffs, x0=x0, T=T, **kw)


@pytest.fixture(scope="module")
def path4096():
    return sample_brownian(SimulationGrid(4096, 1.0), seed=7)


@pytest.fixture(scope="module")
def path512():
    return sample_brownian(SimulationGrid(512, 1.0), seed=7)


class TestVolterra:
    def test_zero_coefficients_hold_x0(self, path512):
        prob = make_problem(ConstantFn(0.0), ConstantFn(0.0), x0=1.5)
        tr = solve_volterra(prob, path512)
        assert np.all(tr.values == 1.5)

    def test_pure_brownian_exact(self, path512):
        prob = make_problem(ConstantFn(0.0), ConstantFn(1.0), x0=0.25)
        tr = solve_volterra(prob, path512)
        expected = 0.25 + np.concatenate([[0.0], np.cumsum(path512.increments)])
        np.testing.assert_allclose(tr.values, expected, rtol=0, atol=1e-14)

    def test_deterministic_closed_form(self, path4096):
        # b == 1, sigma == 0: exact weights integrate the kernel exactly,
        # X_T = x0 + T**a / a
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), x0=0.5)
        tr = solve_volterra(prob, path4096)
        exact = 0.5 + 1.0 / ALPHA
        assert tr.terminal == pytest.approx(exact, rel=1e-3)
        # every grid point, not just the terminal one
        times = path4096.grid.times
        np.testing.assert_allclose(tr.values, 0.5 + times**ALPHA / ALPHA, rtol=1e-12)

    def test_inadmissible_kernel_rejected(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), kernel=KernelSpec.power(0.45))
        with pytest.raises(KernelError):
            solve_volterra(prob, path512)

    def test_grid_mismatch_rejected(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), T=2.0)
        with pytest.raises(ValueError):
            solve_volterra(prob, path512)

    def test_bitwise_coupling_determinism(self, path512):
        prob = make_problem(LinearFn(1.0, -0.5), AffineSinFn(1.0, 0.5), x0=1.0)
        t1 = solve_volterra(prob, path512)
        t2 = solve_volterra(prob, path512)
        assert np.array_equal(t1.values, t2.values)

    def test_exp_outer_kernel_matches_direct_sum(self, path512):
        lam = 0.5
        prob = make_problem(ConstantFn(0.0), ConstantFn(1.0), g=GExp(lam=lam))
        tr = solve_volterra(prob, path512)
        times = path512.grid.times
        dB = path512.increments
        for i in (1, 100, 512):
            ref = np.sum(np.exp(lam * (times[i] - times[:i])) * dB[:i])
            assert tr.values[i] == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_nonfinite_aborts_with_step(self, path512):
        prob = make_problem(LinearFn(0.0, 1e160), ConstantFn(0.0), x0=1e160,
                            L=1e160)
        with np.errstate(over="ignore"), pytest.raises(IntegrationError) as exc:
            solve_volterra(prob, path512)
        assert exc.value.step >= 1
        assert "non-finite" in str(exc.value)


class TestRegularized:
    def test_closed_form(self, path4096):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), x0=0.5)
        tr = solve_regularized(prob, 0.01, path4096)
        exact = 0.5 + (1.01**ALPHA - 0.01**ALPHA) / ALPHA
        assert tr.terminal == pytest.approx(exact, rel=1e-3)
        assert tr.scheme == "regularized" and tr.eps == 0.01

    def test_huge_shift_kills_drift(self, path512):
        eps = 1e6
        prob = make_problem(ConstantFn(1.0), ConstantFn(1.0), x0=2.0)
        tr = solve_regularized(prob, eps, path512)
        stoch = 2.0 + np.cumsum(path512.increments)
        # remaining drift is bounded by eps**(a-1) * T ~ 0.032
        bound = eps ** (ALPHA - 1.0) * 1.0
        assert np.max(np.abs(tr.values[1:] - stoch)) <= 1.01 * bound

    def test_eps_must_be_positive(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0))
        with pytest.raises(KernelError):
            solve_regularized(prob, 0.0, path512)

    def test_coupled_rate_deterministic_large_horizon(self):
        # in the large-horizon regime the eps**a term dominates and the
        # fitted order lands on alpha
        from volterra_sing.stats import fit_rate

        T = 4096.0
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), T=T)
        path = sample_brownian(SimulationGrid(256, T), seed=1)
        base = solve_volterra(prob, path).terminal
        eps_values = [2.0**-k for k in range(4, 10)]
        diffs = [abs(solve_regularized(prob, e, path).terminal - base) for e in eps_values]
        fit = fit_rate(eps_values, diffs)
        assert fit.slope == pytest.approx(ALPHA, abs=0.02)


class TestPhi:
    def test_constant_b_phi_vanishes_everywhere(self, path512):
        # the op is exactly zero (the bracket b_i - b_j vanishes termwise);
        # the solver's factored in-loop record only to rounding error
        prob = make_problem(ConstantFn(3.0), ConstantFn(1.0), x0=1.0)
        tr = solve_ito_form(prob, path512)
        for i in range(513):
            assert phi_at(prob, tr, i) == 0.0
        assert np.max(np.abs(tr.aux["phi"])) <= 1e-12

    def test_empty_sum_convention(self, path512):
        prob = make_problem(TimePowerFn(1.0, 1.0, 0.0), ConstantFn(0.0))
        tr = solve_ito_form(prob, path512)
        assert phi_at(prob, tr, 0) == 0.0
        assert phi_at(prob, tr, 1) == 0.0

    def test_linear_time_drift_against_quadrature_oracle(self, path4096):
        # b(t, x) = t: phi(t) = -int_0^t (a-1)(t-u)**(a-2) (t-u) du; the
        # oracle value at t = 1 is scipy.integrate.quad of that integrand
        # = 0.3333333333333338 (closed form (1-a)/a)
        prob = make_problem(TimePowerFn(1.0, 1.0, 0.0), ConstantFn(0.0))
        tr = solve_ito_form(prob, path4096)
        assert phi_at(prob, tr, 4096) == pytest.approx(0.3333333333333338, abs=1e-3)

    def test_phi_at_matches_solver_records(self, path512):
        prob = make_problem(LinearFn(1.0, -0.5), AffineSinFn(1.0, 0.5), x0=1.0)
        tr = solve_ito_form(prob, path512)
        for i in (2, 17, 200, 511):
            assert phi_at(prob, tr, i) == pytest.approx(tr.aux["phi"][i], rel=1e-10, abs=1e-12)

    def test_out_of_range_step(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0))
        tr = solve_ito_form(prob, path512)
        with pytest.raises(ValueError):
            phi_at(prob, tr, 513)


class TestItoForm:
    def test_deterministic_closed_form(self, path4096):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), x0=0.5)
        tr = solve_ito_form(prob, path4096)
        exact = 0.5 + 1.0 / ALPHA
        assert tr.terminal == pytest.approx(exact, rel=1e-3)

    def test_drift_free_coincides_with_volterra(self):
        # with b == 0 and g == 1 both schemes apply the same update rule
        path = sample_brownian(SimulationGrid(2048, 1.0), seed=13)
        prob = make_problem(ConstantFn(0.0), AffineSinFn(1.0, 0.5), x0=1.0)
        t_dir = solve_volterra(prob, path)
        t_ito = solve_ito_form(prob, path)
        assert np.max(np.abs(t_dir.values - t_ito.values)) <= 1e-10

    def test_benchmark_discrepancy_shrinks_with_refinement(self):
        prob = make_problem(LinearFn(1.0, -0.5), AffineSinFn(1.0, 0.5), x0=1.0)
        path = sample_brownian(SimulationGrid(256, 1.0), seed=21)
        sups = []
        for _ in range(3):
            t_dir = solve_volterra(prob, path)
            t_ito = solve_ito_form(prob, path)
            sups.append(np.max(np.abs(t_dir.values - t_ito.values)))
            path = refine_brownian(path)
        assert sups[2] < sups[0]

    def test_time_drift_closed_form(self, path4096):
        # b(t,x) = t with sigma = 0: X_T = T**(a+1) / (a(a+1))
        prob = make_problem(TimePowerFn(1.0, 1.0, 0.0), ConstantFn(0.0))
        tr = solve_ito_form(prob, path4096)
        assert tr.terminal == pytest.approx(1.0 / (ALPHA * (ALPHA + 1.0)), rel=1e-3)

    def test_g_affine_correction_consistent(self):
        # nonzero dg/dt route: compare against the direct scheme as oracle
        prob = make_problem(ConstantFn(0.0), ConstantFn(1.0), g=GAffine(1.0, 0.5, 0.0))
        path = sample_brownian(SimulationGrid(1024, 1.0), seed=3)
        t_dir = solve_volterra(prob, path)
        t_ito = solve_ito_form(prob, path)
        assert np.max(np.abs(t_dir.values - t_ito.values)) <= 3e-2
        fine = refine_brownian(path)
        d2 = np.max(np.abs(solve_volterra(prob, fine).values - solve_ito_form(prob, fine).values))
        assert d2 < np.max(np.abs(t_dir.values - t_ito.values))


class TestItoRegular:
    def test_constant_kernel_exact(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0), kernel=KernelSpec.constant(), x0=0.5)
        tr = solve_ito_regular(prob, path512)
        assert tr.terminal == pytest.approx(1.5, rel=1e-12)

    def test_singular_kernel_rejected(self, path512):
        prob = make_problem(ConstantFn(1.0), ConstantFn(0.0))
        with pytest.raises(KernelError, match="smooth diagonal"):
            solve_ito_regular(prob, path512)

    def test_matches_regularized_scheme(self, path4096):
        # two discretizations of the same smooth-kernel equation
        eps = 0.1
        spec = KernelSpec(ShiftedPower(ALPHA, eps), ALPHA, 2.0, 1.0)
        prob_shift = make_problem(ConstantFn(1.0), ConstantFn(0.0), kernel=spec)
        prob_power = make_problem(ConstantFn(1.0), ConstantFn(0.0))
        t_reg = solve_ito_regular(prob_shift, path4096)
        t_eps = solve_regularized(prob_power, eps, path4096)
        assert t_reg.terminal == pytest.approx(t_eps.terminal, rel=1e-3)

    def test_g_one_has_zero_correction(self, path512):
        # G == 0 when g == 1: stochastic run equals the same scheme with
        # the correction hand-disabled, i.e. plain EM on the same drift
        spec = KernelSpec(ShiftedPower(ALPHA, 0.5), ALPHA, 2.0, 1.0)
        prob = make_problem(ConstantFn(1.0), ConstantFn(1.0), kernel=spec, x0=1.0)
        tr = solve_ito_regular(prob, path512)
        assert np.all(np.isfinite(tr.values))
        tr2 = solve_ito_regular(prob, path512)
        assert np.array_equal(tr.values, tr2.values)


class TestEnsembleCores:
    def test_single_path_matches_ensemble_row(self, path512):
        # identical rows inside one batch are bitwise equal; across batch
        # widths the BLAS accumulation order may differ by ulps
        prob = make_problem(LinearFn(1.0, -0.5), AffineSinFn(1.0, 0.5), x0=1.0)
        single = solve_volterra(prob, path512)
        batch = volterra_ensemble(prob, np.vstack([path512.increments] * 3))
        assert np.array_equal(batch[0], batch[1]) and np.array_equal(batch[1], batch[2])
        np.testing.assert_allclose(batch[0], single.values, rtol=1e-11, atol=1e-12)

    def test_ito_ensemble_aux_shapes(self, path512):
        prob = make_problem(LinearFn(1.0, -0.5), ConstantFn(1.0), x0=1.0)
        vals, phi, G = ito_ensemble(prob, path512.increments[None, :], record_aux=True)
        assert vals.shape == phi.shape == G.shape == (1, 513)
        assert phi[0, 0] == 0.0 and phi[0, 1] == 0.0


class TestTrajectory:
    def test_initial_value_and_finiteness(self, path512):
        with pytest.raises(ValueError):
            Trajectory(grid=path512.grid, values=np.full(513, np.nan), scheme="volterra")
        with pytest.raises(ValueError):
            Trajectory(grid=path512.grid, values=np.zeros(7), scheme="volterra")
