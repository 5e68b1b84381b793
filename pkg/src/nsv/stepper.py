"""The fully discrete scheme: implicit Euler in time, Fourier-Galerkin in
space, for the Navier-Stokes-Voigt system with unit viscosity.

One step solves, for each mode ``0 < |k| <= n``,

    (1 + a^2|k|^2 + kappa|k|^2) u_k = (1 + a^2|k|^2) prev_k - kappa N_k(u),

where ``N = P_n((u . grad) u)``, by Picard iteration preconditioned with the
diagonal factor on the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonlinearSolveFailed
from .fields import (
    SpectralField,
    VOLUME,
    ball_mask,
    galerkin_truncate,
    k_squared,
    norms,
)
from .nonlinearity import convective, min_convolution_grid


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of the fully discrete problem; viscosity is fixed at 1."""

    n: int
    M: int
    T: float
    alpha: float
    picard_tol: float = 1e-12
    picard_max_iter: int = 200

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spectral cutoff n must be a positive integer")
        if self.M < 1:
            raise ValueError("step count M must be a positive integer")
        if self.T <= 0:
            raise ValueError("final time T must be positive")
        if self.alpha < 0:
            raise ValueError("regularization length alpha must be nonnegative")
        if self.picard_tol <= 0 or self.picard_max_iter < 1:
            raise ValueError("invalid Picard controls")

    @property
    def kappa(self) -> float:
        return self.T / self.M

    def time_net(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)


def _step_operators(params: SchemeParams):
    k2 = k_squared(params.n)
    sym = 1.0 + params.alpha**2 * k2
    den = sym + params.kappa * k2
    return sym, den


def euler_step(
    prev: SpectralField,
    params: SchemeParams,
    return_info: bool = False,
):
    """Advance one implicit Euler step from ``prev``.

    Raises ``NonlinearSolveFailed`` if the scaled residual stays above
    ``picard_tol`` after ``picard_max_iter`` iterations.
    """
    n = params.n
    kappa = params.kappa
    sym, den = _step_operators(params)
    mask = ball_mask(n, n)
    grid = min_convolution_grid(n)

    prev_c = prev.coeffs
    scale = max(norms(prev)["l2"], 1e-30)

    u = prev
    nl = galerkin_truncate(convective(u, grid), n).coeffs
    for iteration in range(1, params.picard_max_iter + 1):
        new_c = np.where(mask, (sym * prev_c - kappa * nl) / den, 0.0)
        new = SpectralField(new_c, validate=False)
        nl_new = galerkin_truncate(convective(new, grid), n).coeffs
        res_c = den * new_c - sym * prev_c + kappa * nl_new
        res_c = np.where(mask, res_c, 0.0)
        residual = float(np.sqrt(VOLUME * (np.abs(res_c) ** 2).sum())) / scale
        if residual <= params.picard_tol:
            if return_info:
                return new, {"iterations": iteration, "residual": residual}
            return new
        u, nl = new, nl_new
    raise NonlinearSolveFailed(params.picard_max_iter, residual)


@dataclass
class DiscreteTrajectory:
    """States on the uniform net ``t_m = m * kappa`` plus recovered pressures.

    ``states[0]`` is the Galerkin projection of the supplied datum;
    ``datum_norms`` keeps the norms of the unprojected datum so diagnostics
    can report the projection gap.
    """

    params: SchemeParams
    states: list  # SpectralVelocity, m = 0..M
    pressures: list  # SpectralScalar, m = 1..M
    picard_iters: list = field(default_factory=list)
    step_residuals: list = field(default_factory=list)
    datum_norms: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.params.time_net()

    def state_at(self, t: float) -> SpectralField:
        """Piecewise-constant interpolant value (right-open intervals)."""
        return self.states[self._interval_index(t)]

    def pressure_at(self, t: float) -> SpectralField:
        return self.pressures[self._interval_index(t) - 1]

    def _interval_index(self, t: float) -> int:
        params = self.params
        if not 0.0 <= t <= params.T:
            raise ValueError(f"time {t} outside [0, {params.T}]")
        if t >= params.T:
            return params.M
        return int(np.floor(t / params.kappa)) + 1

    def linear_interpolant_at(self, t: float) -> SpectralField:
        """Continuous piecewise-linear interpolant through the states."""
        if t >= self.params.T:
            return self.states[self.params.M]
        m = self._interval_index(t)
        kappa = self.params.kappa
        s = (t - (m - 1) * kappa) / kappa
        prev_c = self.states[m - 1].coeffs
        next_c = self.states[m].coeffs
        return SpectralField(prev_c + s * (next_c - prev_c), validate=False)


def run(
    u0: SpectralField,
    params: SchemeParams,
    with_pressure: bool = True,
) -> DiscreteTrajectory:
    """Integrate the scheme from datum ``u0`` over the full net.

    ``u0`` may be supported outside the ball; it is projected onto V_n first.
    """
    from .pressure import solve_pressure

    datum_norms = norms(u0)
    initial = galerkin_truncate(u0, params.n)
    states = [initial]
    pressures = []
    iters = []
    residuals = []
    for m in range(1, params.M + 1):
        try:
            state, info = euler_step(states[-1], params, return_info=True)
        except NonlinearSolveFailed as exc:
            raise NonlinearSolveFailed(exc.iterations, exc.residual, step=m) from exc
        states.append(state)
        iters.append(info["iterations"])
        residuals.append(info["residual"])
        if with_pressure:
            pressures.append(solve_pressure(state))
    return DiscreteTrajectory(
        params=params,
        states=states,
        pressures=pressures,
        picard_iters=iters,
        step_residuals=residuals,
        datum_norms=datum_norms,
    )
