"""Pressure recovery from the velocity via the periodic Poisson problem.

``-lap p = div div (u (x) u)`` with zero mean; in coefficients
``p_k = -(k_i k_j T_ij_k) / |k|^2`` where ``T = u (x) u`` is computed
alias-free.  The pressure keeps the full quadratic support ``|k| <= 2n``.
"""

from __future__ import annotations

import numpy as np

from .errors import GridTooSmall, QuadratureUnresolved
from .fields import (
    SpectralField,
    ball_mask,
    k_squared,
    to_grid,
    wave_components,
)
from .nonlinearity import min_convolution_grid


def solve_pressure(u: SpectralField, grid_size: int | None = None) -> SpectralField:
    n = u.kmax
    required = min_convolution_grid(n)
    grid = grid_size or required
    if grid < required:
        raise GridTooSmall(grid, required, what="pressure source term")

    u_grid = to_grid(u, grid)
    kmax = 2 * n
    kx, ky, kz = wave_components(kmax)
    kvec = (kx, ky, kz)
    source = np.zeros((2 * kmax + 1,) * 3, dtype=np.complex128)
    idx = np.arange(-kmax, kmax + 1) % grid
    sel = (idx[:, None, None], idx[None, :, None], idx[None, None, :])
    for i in range(3):
        for j in range(i, 3):
            t_hat = np.fft.fftn(u_grid[i] * u_grid[j]) / grid**3
            cube = t_hat[sel]
            weight = kvec[i] * kvec[j]
            source += (1.0 if i == j else 2.0) * weight * cube

    k2 = k_squared(kmax)
    safe = np.where(k2 > 0, k2, 1.0)
    p = np.where(ball_mask(kmax, kmax), -source / safe, 0.0)
    p = 0.5 * (p + np.conj(p[::-1, ::-1, ::-1]))
    return SpectralField(p, validate=False)


def pressure_gradient(p: SpectralField) -> SpectralField:
    kx, ky, kz = wave_components(p.kmax)
    grad = np.stack([1j * kx * p.coeffs, 1j * ky * p.coeffs, 1j * kz * p.coeffs])
    return SpectralField(grad, validate=False)


# -- Lebesgue norms by grid quadrature ---------------------------------------


def lp_norm(field: SpectralField, p: float, grid_size: int) -> float:
    """``L^p`` norm by the rectangle rule; vector fields use the pointwise
    Euclidean magnitude.

    Synthesis is done slab by slab (1D transform along the first axis, then
    one 2D transform per slice) so that fine grids for fractional powers do
    not materialize an N^3 complex array.
    """
    kmax = field.kmax
    if grid_size < 2 * kmax + 2:
        raise GridTooSmall(grid_size, 2 * kmax + 2, what="L^p quadrature")
    c = field.coeffs
    s = 2 * kmax + 1
    idx = np.arange(-kmax, kmax + 1) % grid_size
    lead = c.shape[:-3]
    emb = np.zeros(lead + (grid_size, s, s), dtype=np.complex128)
    emb[..., idx, :, :] = c
    partial = np.fft.ifft(emb, axis=-3) * grid_size
    acc = 0.0
    slab = np.zeros(lead + (grid_size, grid_size), dtype=np.complex128)
    for i in range(grid_size):
        slab[...] = 0.0
        slab[..., idx[:, None], idx[None, :]] = partial[..., i, :, :]
        values = (np.fft.ifft2(slab) * grid_size**2).real
        if field.is_vector:
            mag = np.sqrt((values**2).sum(axis=0))
        else:
            mag = np.abs(values)
        acc += float((mag**p).sum())
    mean = acc / grid_size**3
    return float(((2 * np.pi) ** 3 * mean) ** (1.0 / p))


def lp_norm_checked(
    field: SpectralField,
    p: float,
    rel_tol: float = 1e-6,
    max_grid: int = 1024,
) -> float:
    """``L^p`` norm with a grid-doubling self-check.

    Starts at the product-resolving grid for the field's actual support
    (trailing zero modes are trimmed so a sparse field in a large container
    does not inflate the ladder) and doubles until two consecutive values
    agree to ``rel_tol``; raises ``QuadratureUnresolved`` if the cap is
    reached first.
    """
    support = int(np.ceil(field.support_radius()))
    if 0 < support < field.kmax:
        field = field.resized(support)
    grid = 2 * field.kmax + 2
    value = lp_norm(field, p, grid)
    change = float("inf")
    while 2 * grid <= max_grid:
        refined = lp_norm(field, p, 2 * grid)
        change = abs(refined - value) / max(abs(refined), 1e-300)
        if change <= rel_tol:
            return refined
        grid *= 2
        value = refined
    raise QuadratureUnresolved(value, change, grid)
