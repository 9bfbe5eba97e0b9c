"""Time-stepping schemes for the singular Volterra equation.

Four couplable schemes share one grid and one noise source:

* ``solve_volterra``     -- left-point Euler on the integral form, with
  exact kernel cell weights (the singular cell next to the diagonal is
  integrated in closed form, never sampled pointwise);
* ``solve_regularized``  -- the same scheme on the eps-shifted kernel;
* ``solve_ito_form``     -- Euler-Maruyama on the Ito differential form
  of the singular equation, whose drift carries the boundary term
  k(t,0)b(t,X_t), the history correction phi(t) from the kernel's time
  derivative, and the outer-kernel correction G(t);
* ``solve_ito_regular``  -- Euler-Maruyama on the classical Ito form for
  kernels smooth on the closed diagonal.

Every scheme is a pure function of (problem, path): identical inputs give
bit-identical trajectories, which is what makes coupled-rate experiments
meaningful.  The cores are vectorized across paths; the public functions
wrap a single path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .brownian import BrownianPath, SimulationGrid
from .coefficients import ConstantFn, ProblemSpec
from .kernels import KernelError, cell_weights, dt_cell_weights, shift_kernel

__all__ = [
    "Trajectory",
    "IntegrationError",
    "solve_volterra",
    "solve_regularized",
    "solve_ito_form",
    "solve_ito_regular",
    "phi_at",
    "volterra_ensemble",
    "ito_ensemble",
    "ito_regular_ensemble",
]


class IntegrationError(RuntimeError):
    """A trajectory left the finite range; carries the offending step."""

    def __init__(self, scheme: str, step: int, path_index: int = 0):
        self.scheme = scheme
        self.step = step
        self.path_index = path_index
        super().__init__(
            f"{scheme}: non-finite value at step {step} (path {path_index})"
        )


@dataclass(frozen=True)
class Trajectory:
    """Solution values on the grid, tagged with the scheme that made them."""

    grid: SimulationGrid
    values: np.ndarray
    scheme: str
    eps: Optional[float] = None
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n + 1,):
            raise ValueError(f"expected {self.grid.n + 1} values, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("trajectory values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


def _check_path(problem: ProblemSpec, path: BrownianPath) -> None:
    if abs(path.grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ValueError(
            f"path horizon {path.grid.T} does not match problem horizon {problem.T}"
        )


def _check_finite(x: np.ndarray, scheme: str, step: int) -> None:
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise IntegrationError(scheme, step, bad)


def _reversed_lag_table(table: np.ndarray, n: int) -> np.ndarray:
    # rev[k] = table[n - k]; a contiguous slice rev[n-i:] then aligns
    # table[i-j] against history index j in a single BLAS dot
    return np.ascontiguousarray(table[1:][::-1])


def _state_independent(fn) -> bool:
    # constant-in-x coefficients let the history convolution collapse to
    # scalars shared by every path
    return isinstance(fn, ConstantFn) or getattr(fn, "a1", None) == 0.0


# ---------------------------------------------------------------------------
# direct (integral-form) scheme


def volterra_ensemble(problem: ProblemSpec, dW: np.ndarray,
                      eps: Optional[float] = None) -> np.ndarray:
    """Left-point Euler with exact kernel weights, all paths at once.

    X_i = x0 + sum_{j<i} w[i-j] b(t_j, X_j)
             + sum_{j<i} g(t_i, t_j) sigma(t_j, X_j) dB_j,

    where w[l] is the exact kernel integral over one cell at lag l.  When
    eps is given the weights come from the shifted kernel k(t+eps, s); the
    noise term is never shifted.
    """
    spec = problem.kernel if eps is None else shift_kernel(problem.kernel, eps)
    scheme = "volterra" if eps is None else "regularized"
    if eps is None and not (spec.is_a1_admissible or spec.smooth_on_diagonal):
        raise KernelError(
            "kernel is neither A1-admissible nor smooth; refusing the direct scheme"
        )
    coeffs = problem.coeffs
    m, n = dW.shape
    dt = problem.T / n
    times = np.arange(n + 1) * dt

    w = cell_weights(spec, n, dt)
    wrev = _reversed_lag_table(w, n)

    g_is_one = coeffs.g.is_one
    b_state_free = _state_independent(coeffs.b)
    X = np.empty((n + 1, m))
    X[0] = problem.x0
    b_hist = np.empty(n) if b_state_free else np.empty((n, m))
    noise_hist = None if g_is_one else np.empty((n, m))
    noise_sum = np.zeros(m)

    for i in range(1, n + 1):
        j = i - 1
        if b_state_free:
            b_hist[j] = coeffs.b(times[j], 0.0)
        else:
            b_hist[j] = coeffs.b(times[j], X[j])
        sig_dw = np.asarray(coeffs.sigma(times[j], X[j])) * dW[:, j]
        if g_is_one:
            noise_sum += sig_dw
            noise = noise_sum
        else:
            noise_hist[j] = sig_dw
            g_row = np.asarray(coeffs.g_at(times[i], times[:i]), dtype=float)
            noise = g_row @ noise_hist[:i]
        drift = wrev[n - i:] @ b_hist[:i]
        X[i] = problem.x0 + drift + noise
        _check_finite(X[i], scheme, i)
    return X.T.copy()


def solve_volterra(problem: ProblemSpec, path: BrownianPath) -> Trajectory:
    """Integrate the direct Volterra form along one Brownian path."""
    _check_path(problem, path)
    values = volterra_ensemble(problem, path.increments[None, :])[0]
    return Trajectory(grid=path.grid, values=values, scheme="volterra")


def solve_regularized(problem: ProblemSpec, eps: float,
                      path: BrownianPath) -> Trajectory:
    """Integrate with the eps-shifted kernel k(t+eps, s) on the same path."""
    if eps <= 0.0:
        raise KernelError(f"regularization shift must be positive, got {eps}")
    _check_path(problem, path)
    values = volterra_ensemble(problem, path.increments[None, :], eps=eps)[0]
    return Trajectory(grid=path.grid, values=values, scheme="regularized", eps=eps)


# ---------------------------------------------------------------------------
# Ito differential form (singular kernel)


def ito_ensemble(problem: ProblemSpec, dW: np.ndarray,
                 record_aux: bool = False):
    """Euler-Maruyama on the singular Ito form, all paths at once.

    dX = (k(t,0) b(t,X_t) + phi(t) + G(t)) dt + g(t,t) sigma(t,X_t) dB_t,

    with the discrete history correction

      phi(t_i) = -sum_{j<=i-2} d[i-j] (b(t_i,X_i) - b(t_j,X_j)),

    d[l] the exact cell integral of the kernel's time derivative at lag l.
    The cell adjacent to the diagonal is truncated: its integrand vanishes
    at Holder rate there, and the dropped mass goes to zero with the step.
    Step 0 replaces the undefined k(0,0) by the exact first-cell integral
    of k(u, 0).
    """
    spec = problem.kernel
    coeffs = problem.coeffs
    m, n = dW.shape
    dt = problem.T / n
    times = np.arange(n + 1) * dt

    w = cell_weights(spec, n, dt)
    d = dt_cell_weights(spec, n, dt)
    drev = _reversed_lag_table(d, n)
    d_cum = np.cumsum(d)  # d_cum[i] = sum of d[2..i]
    k_t0 = np.asarray(spec.family.kappa(times[1:]), dtype=float)
    g_is_one = coeffs.g.is_one
    g_diag = np.asarray(coeffs.g_at(times, times), dtype=float)

    X = np.empty((n + 1, m))
    X[0] = problem.x0
    b_hist = np.empty((n, m))
    noise_hist = None if g_is_one else np.empty((n, m))
    phi_rec = np.zeros((n + 1, m)) if record_aux else None
    G_rec = np.zeros((n + 1, m)) if record_aux else None

    # step 0: exact cell integral stands in for k(0,0)*dt
    b_hist[0] = coeffs.b(0.0, X[0])
    sig_dw = np.asarray(coeffs.sigma(0.0, X[0])) * dW[:, 0]
    if not g_is_one:
        noise_hist[0] = sig_dw
    X[1] = X[0] + b_hist[0] * w[1] + g_diag[0] * sig_dw
    _check_finite(X[1], "ito_singular", 1)

    for i in range(1, n):
        b_i = np.asarray(coeffs.b(times[i], X[i]), dtype=float)
        if i >= 2:
            # lags i-j for j = 0..i-2 live at drev[n-i : n-1]
            conv = drev[n - i: n - 1] @ b_hist[: i - 1]
            phi = -(b_i * d_cum[i] - conv)
        else:
            phi = np.zeros(m)
        if g_is_one:
            G = 0.0
        else:
            gdt_row = np.asarray(coeffs.g_dt_at(times[i], times[:i]), dtype=float)
            G = gdt_row @ noise_hist[:i]
        if record_aux:
            phi_rec[i] = phi
            G_rec[i] = G
        drift = k_t0[i - 1] * b_i + phi + G
        sig_dw = np.asarray(coeffs.sigma(times[i], X[i])) * dW[:, i]
        if not g_is_one:
            noise_hist[i] = sig_dw
        b_hist[i] = b_i
        X[i + 1] = X[i] + drift * dt + g_diag[i] * sig_dw
        _check_finite(X[i + 1], "ito_singular", i + 1)

    values = X.T.copy()
    if record_aux:
        # the stepping never consumes phi(t_n)/G(t_n); fill them for export
        b_n = np.asarray(coeffs.b(times[n], X[n]), dtype=float)
        phi_rec[n] = -(b_n * d_cum[n] - drev[: n - 1] @ b_hist[: n - 1])
        if not g_is_one:
            gdt_row = np.asarray(coeffs.g_dt_at(times[n], times[:n]), dtype=float)
            G_rec[n] = gdt_row @ noise_hist
        return values, phi_rec.T.copy(), G_rec.T.copy()
    return values


def solve_ito_form(problem: ProblemSpec, path: BrownianPath) -> Trajectory:
    """Integrate the singular-kernel Ito representation along one path.

    The beta1 > 1 - alpha compatibility is enforced when the ProblemSpec
    is built; a spec constructed with the violation override runs anyway.
    """
    _check_path(problem, path)
    values, phi, G = ito_ensemble(problem, path.increments[None, :], record_aux=True)
    return Trajectory(
        grid=path.grid,
        values=values[0],
        scheme="ito_singular",
        aux={"phi": phi[0], "G": G[0]},
    )


def phi_at(problem: ProblemSpec, traj: Trajectory, i: int) -> float:
    """Discrete history correction phi(t_i) recomputed from a trajectory.

    Returns 0 for i = 0 (empty integral) and whenever fewer than two cells
    separate t_i from the origin; the final cell [t_{i-1}, t_i) is always
    truncated.
    """
    n = traj.grid.n
    if i < 0 or i > n:
        raise ValueError(f"step index {i} outside 0..{n}")
    if i < 2:
        return 0.0
    coeffs = problem.coeffs
    dt = traj.grid.dt
    times = traj.grid.times
    d = dt_cell_weights(problem.kernel, n, dt)
    b_i = float(coeffs.b(times[i], traj.values[i]))
    b_hist = np.asarray(coeffs.b(times[: i - 1], traj.values[: i - 1]), dtype=float)
    lags = np.arange(i, 1, -1)  # i-j for j = 0..i-2
    return float(-(np.dot(d[lags], b_i - b_hist)))


# ---------------------------------------------------------------------------
# classical Ito form (regular kernel)


def ito_regular_ensemble(problem: ProblemSpec, dW: np.ndarray) -> np.ndarray:
    """Euler-Maruyama on the regular-kernel Ito form, all paths at once.

    dX = (k(t,t) b(t,X_t) + K(t) + G(t)) dt + g(t,t) sigma(t,X_t) dB_t,
    K(t_i) = sum_{j<i} dk/dt(t_i, t_j) b(t_j, X_j) dt.

    Requires a kernel smooth on the closed diagonal.
    """
    spec = problem.kernel
    if not spec.smooth_on_diagonal:
        raise KernelError("regular form requires a smooth diagonal")
    coeffs = problem.coeffs
    m, n = dW.shape
    dt = problem.T / n
    times = np.arange(n + 1) * dt

    kdiag = float(spec.family.kappa(0.0))
    q = np.zeros(n + 1)
    q[1:] = np.asarray(spec.family.dkappa(times[1:]), dtype=float)
    qrev = _reversed_lag_table(q, n)
    g_is_one = coeffs.g.is_one
    g_diag = np.asarray(coeffs.g_at(times, times), dtype=float)

    X = np.empty((n + 1, m))
    X[0] = problem.x0
    b_hist = np.empty((n, m))
    noise_hist = None if g_is_one else np.empty((n, m))

    for i in range(n):
        b_i = np.asarray(coeffs.b(times[i], X[i]), dtype=float)
        b_hist[i] = b_i
        K = qrev[n - i:] @ b_hist[:i] * dt if i >= 1 else 0.0
        if g_is_one:
            G = 0.0
        else:
            gdt_row = np.asarray(coeffs.g_dt_at(times[i], times[:i]), dtype=float)
            G = gdt_row @ noise_hist[:i] if i >= 1 else 0.0
        sig_dw = np.asarray(coeffs.sigma(times[i], X[i])) * dW[:, i]
        if not g_is_one:
            noise_hist[i] = sig_dw
        X[i + 1] = X[i] + (kdiag * b_i + K + G) * dt + g_diag[i] * sig_dw
        _check_finite(X[i + 1], "ito_regular", i + 1)
    return X.T.copy()


def solve_ito_regular(problem: ProblemSpec, path: BrownianPath) -> Trajectory:
    """Integrate the classical Ito form; smooth-diagonal kernels only."""
    _check_path(problem, path)
    values = ito_regular_ensemble(problem, path.increments[None, :])[0]
    return Trajectory(grid=path.grid, values=values, scheme="ito_regular")
