"""Truncated Fourier representation of periodic zero-mean fields on the
2*pi-periodic 3-torus.

Coefficients are stored on a centered cube of lattice indices
``k in [-kmax, kmax]^3`` as a dense complex array, ``(3, S, S, S)`` for
vector fields and ``(S, S, S)`` for scalars with ``S = 2*kmax + 1``.
Hermitian symmetry (real-valued fields) and the zero-mean constraint are
enforced at construction and preserved by every operation.

Norm convention: physical-amplitude coefficients with the Parseval factor
``(2*pi)^3``, i.e. ``||u||_2^2 = (2*pi)^3 * sum_k |u_k|^2``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import GridTooSmall

TWO_PI = 2.0 * np.pi
VOLUME = TWO_PI**3

HERMITIAN_TOL = 1e-12
DIVERGENCE_TOL = 1e-12


@lru_cache(maxsize=64)
def wave_components(kmax: int):
    """Integer wavevector component grids ``(KX, KY, KZ)`` on the cube."""
    r = np.arange(-kmax, kmax + 1)
    kx, ky, kz = np.meshgrid(r, r, r, indexing="ij")
    for a in (kx, ky, kz):
        a.setflags(write=False)
    return kx, ky, kz


@lru_cache(maxsize=64)
def k_squared(kmax: int) -> np.ndarray:
    kx, ky, kz = wave_components(kmax)
    k2 = (kx**2 + ky**2 + kz**2).astype(np.float64)
    k2.setflags(write=False)
    return k2


@lru_cache(maxsize=128)
def ball_mask(kmax: int, n: int) -> np.ndarray:
    """Boolean mask of modes with ``0 < |k| <= n`` (Euclidean)."""
    k2 = k_squared(kmax)
    mask = (k2 > 0) & (k2 <= n * n)
    mask.setflags(write=False)
    return mask


def min_synthesis_grid(kmax: int) -> int:
    """Smallest grid admitted for lossless synthesis of a cube-kmax field."""
    return 2 * kmax + 2


class SpectralField:
    """Zero-mean, Hermitian-symmetric Fourier coefficients on a mode cube.

    Immutable by convention: operations return new instances and never
    mutate ``coeffs`` in place.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray, validate: bool = True):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim not in (3, 4):
            raise ValueError("coeffs must be (S,S,S) or (3,S,S,S)")
        s = coeffs.shape[-1]
        if coeffs.shape[-3:] != (s, s, s) or s % 2 != 1:
            raise ValueError("trailing axes must form an odd cube")
        if coeffs.ndim == 4 and coeffs.shape[0] != 3:
            raise ValueError("vector fields must have 3 components")
        self.coeffs = coeffs
        if validate:
            self._check_structure()

    # -- structure ---------------------------------------------------------

    @property
    def kmax(self) -> int:
        return (self.coeffs.shape[-1] - 1) // 2

    @property
    def is_vector(self) -> bool:
        return self.coeffs.ndim == 4

    def _check_structure(self) -> None:
        scale = max(float(np.abs(self.coeffs).max()), 1.0)
        if self.hermitian_defect() > HERMITIAN_TOL * scale:
            raise ValueError("coefficients are not Hermitian-symmetric")
        c = self.kmax
        mean = self.coeffs[..., c, c, c]
        if np.abs(mean).max() > HERMITIAN_TOL * scale:
            raise ValueError("field does not have zero mean")

    def hermitian_defect(self) -> float:
        flipped = self.coeffs[..., ::-1, ::-1, ::-1]
        return float(np.abs(self.coeffs - np.conj(flipped)).max())

    def divergence_defect(self) -> float:
        """max_k |k . u_k|, scaled by the largest coefficient magnitude."""
        if not self.is_vector:
            raise ValueError("divergence is defined for vector fields only")
        kx, ky, kz = wave_components(self.kmax)
        div = kx * self.coeffs[0] + ky * self.coeffs[1] + kz * self.coeffs[2]
        scale = max(float(np.abs(self.coeffs).max()), 1e-300)
        return float(np.abs(div).max()) / scale

    def is_divergence_free(self, tol: float = DIVERGENCE_TOL) -> bool:
        return self.divergence_defect() <= tol

    def support_radius(self) -> float:
        """Largest |k| carrying a nonzero coefficient (0.0 for zero field)."""
        mag = np.abs(self.coeffs)
        if self.is_vector:
            mag = mag.sum(axis=0)
        nz = mag > 0
        if not nz.any():
            return 0.0
        return float(np.sqrt(k_squared(self.kmax)[nz].max()))

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, kmax: int, vector: bool = True) -> "SpectralField":
        s = 2 * kmax + 1
        shape = (3, s, s, s) if vector else (s, s, s)
        return cls(np.zeros(shape, dtype=np.complex128), validate=False)

    @classmethod
    def from_modes(cls, kmax: int, modes: dict, vector: bool = True,
                   conjugates: bool = True) -> "SpectralField":
        """Build a field from ``{(kx,ky,kz): amplitude}``.

        With ``conjugates=True`` the mirror coefficient at ``-k`` is filled
        with the complex conjugate so the field is real by construction.
        """
        f = cls.zeros(kmax, vector=vector)
        c = f.coeffs
        for k, amp in modes.items():
            kx, ky, kz = k
            if max(abs(kx), abs(ky), abs(kz)) > kmax:
                raise ValueError(f"mode {k} outside cube of half-width {kmax}")
            if (kx, ky, kz) == (0, 0, 0):
                raise ValueError("zero-mean fields cannot carry the k=0 mode")
            amp = np.asarray(amp, dtype=np.complex128)
            idx = (kx + kmax, ky + kmax, kz + kmax)
            c[(..., *idx)] += amp
            if conjugates:
                midx = (-kx + kmax, -ky + kmax, -kz + kmax)
                c[(..., *midx)] += np.conj(amp)
        return cls(c)

    def mode(self, k) -> np.ndarray | complex:
        kx, ky, kz = k
        idx = (kx + self.kmax, ky + self.kmax, kz + self.kmax)
        val = self.coeffs[(..., *idx)]
        return val.copy() if self.is_vector else complex(val)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        a, b = common_cube(self, other)
        return SpectralField(a.coeffs + b.coeffs, validate=False)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        a, b = common_cube(self, other)
        return SpectralField(a.coeffs - b.coeffs, validate=False)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * scalar, validate=False)

    __rmul__ = __mul__

    def resized(self, kmax_new: int) -> "SpectralField":
        """Zero-pad or crop the mode cube to half-width ``kmax_new``."""
        k_old = self.kmax
        if kmax_new == k_old:
            return SpectralField(self.coeffs.copy(), validate=False)
        s_new = 2 * kmax_new + 1
        shape = (3, s_new, s_new, s_new) if self.is_vector else (s_new,) * 3
        out = np.zeros(shape, dtype=np.complex128)
        m = min(k_old, kmax_new)
        src = slice(k_old - m, k_old + m + 1)
        dst = slice(kmax_new - m, kmax_new + m + 1)
        out[..., dst, dst, dst] = self.coeffs[..., src, src, src]
        return SpectralField(out, validate=False)


def common_cube(a: SpectralField, b: SpectralField):
    if a.is_vector != b.is_vector:
        raise ValueError("cannot combine vector and scalar fields")
    kmax = max(a.kmax, b.kmax)
    return a.resized(kmax), b.resized(kmax)


# -- projectors -------------------------------------------------------------


def leray_project(g: SpectralField) -> SpectralField:
    """Remove the gradient part: ``g_k -> g_k - (g_k . k) k / |k|^2``."""
    if not g.is_vector:
        raise ValueError("Leray projection acts on vector fields")
    kmax = g.kmax
    kx, ky, kz = wave_components(kmax)
    k2 = k_squared(kmax)
    safe = np.where(k2 > 0, k2, 1.0)
    dot = kx * g.coeffs[0] + ky * g.coeffs[1] + kz * g.coeffs[2]
    factor = dot / safe
    out = g.coeffs - np.stack([kx * factor, ky * factor, kz * factor])
    c = kmax
    out[..., c, c, c] = 0.0
    return SpectralField(out, validate=False)


def ball_truncate(g: SpectralField, n: int) -> SpectralField:
    """Mode cutoff to the Euclidean ball ``0 < |k| <= n`` (no Leray step)."""
    g = g.resized(n)
    out = np.where(ball_mask(n, n), g.coeffs, 0.0)
    return SpectralField(out, validate=False)


def galerkin_truncate(g: SpectralField, n: int) -> SpectralField:
    """Projector onto V_n: mode cutoff composed with Leray projection.

    For scalar fields this reduces to the plain cutoff.
    """
    cut = ball_truncate(g, n)
    return leray_project(cut) if g.is_vector else cut


def qn_remainder(g: SpectralField, n: int) -> SpectralField:
    """The spectral remainder: Leray projection minus the V_n projection.

    Result is supported on ``|k| > n``.
    """
    proj = leray_project(g) if g.is_vector else g
    out = np.where(ball_mask(proj.kmax, n), 0.0, proj.coeffs)
    c = proj.kmax
    out[..., c, c, c] = 0.0
    return SpectralField(out, validate=False)


# -- calculus ---------------------------------------------------------------


def partial_derivative(g: SpectralField, axis: int) -> SpectralField:
    k = wave_components(g.kmax)[axis]
    return SpectralField(1j * k * g.coeffs, validate=False)


def laplacian(g: SpectralField) -> SpectralField:
    return SpectralField(-k_squared(g.kmax) * g.coeffs, validate=False)


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 pairing of two real fields under the Parseval convention."""
    a, b = common_cube(f, g)
    val = np.sum(a.coeffs * np.conj(b.coeffs))
    return float(VOLUME * val.real)


def norms(u: SpectralField) -> dict:
    """Parseval L^2 norm, H^1/H^2 seminorms, and an L^inf coefficient bound."""
    mag2 = np.abs(u.coeffs) ** 2
    if u.is_vector:
        mag2 = mag2.sum(axis=0)
    k2 = k_squared(u.kmax)
    l2 = np.sqrt(VOLUME * mag2.sum())
    h1 = np.sqrt(VOLUME * (k2 * mag2).sum())
    h2 = np.sqrt(VOLUME * (k2 * k2 * mag2).sum())
    linf = np.sqrt(mag2).sum()
    return {
        "l2": float(l2),
        "h1_seminorm": float(h1),
        "h2_seminorm": float(h2),
        "linf_bound": float(linf),
    }


# -- transforms -------------------------------------------------------------


def _embed_indices(kmax: int, grid_size: int) -> np.ndarray:
    return np.arange(-kmax, kmax + 1) % grid_size


def to_grid(g: SpectralField, grid_size: int) -> np.ndarray:
    """Sample the field on the uniform ``grid_size^3`` grid of the torus."""
    kmax = g.kmax
    if grid_size < min_synthesis_grid(kmax):
        raise GridTooSmall(grid_size, min_synthesis_grid(kmax))
    idx = _embed_indices(kmax, grid_size)
    shape = g.coeffs.shape[:-3] + (grid_size,) * 3
    emb = np.zeros(shape, dtype=np.complex128)
    emb[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = g.coeffs
    grid = np.fft.ifftn(emb, axes=(-3, -2, -1)) * grid_size**3
    return np.ascontiguousarray(grid.real)


def _extract_cube(grid_hat: np.ndarray, kmax: int) -> np.ndarray:
    grid_size = grid_hat.shape[-1]
    idx = _embed_indices(kmax, grid_size)
    return grid_hat[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]


def from_grid(samples: np.ndarray, n: int) -> SpectralField:
    """Analyze real samples into the mode ball ``0 < |k| <= n``."""
    samples = np.asarray(samples)
    grid_size = samples.shape[-1]
    if grid_size < min_synthesis_grid(n):
        raise GridTooSmall(grid_size, min_synthesis_grid(n), what="analysis")
    if np.iscomplexobj(samples) and np.abs(samples.imag).max() > 1e-12 * max(
        np.abs(samples).max(), 1.0
    ):
        raise ValueError("from_grid requires samples of a real field")
    grid_hat = np.fft.fftn(samples.real, axes=(-3, -2, -1)) / grid_size**3
    cube = _extract_cube(grid_hat, n)
    cube = np.where(ball_mask(n, n), cube, 0.0)
    cube = 0.5 * (cube + np.conj(cube[..., ::-1, ::-1, ::-1]))
    return SpectralField(cube, validate=False)


def analyze_product_grid(samples: np.ndarray, kmax: int) -> SpectralField:
    """Analyze real samples onto the full cube ``|k|_inf <= kmax``, then keep
    the Euclidean ball. Used for exactly band-limited products."""
    grid_size = samples.shape[-1]
    grid_hat = np.fft.fftn(samples, axes=(-3, -2, -1)) / grid_size**3
    cube = _extract_cube(grid_hat, kmax)
    cube = np.where(ball_mask(kmax, kmax), cube, 0.0)
    cube = 0.5 * (cube + np.conj(cube[..., ::-1, ::-1, ::-1]))
    return SpectralField(cube, validate=False)


# -- trigonometric test-function polynomials --------------------------------


class TrigPolynomial:
    """Real scalar trigonometric polynomial, mean mode allowed.

    Used for the spatial part of test functions; unlike :class:`SpectralField`
    it may carry a nonzero mean, and nonnegativity can be verified on a grid.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        s = coeffs.shape[-1]
        if coeffs.ndim != 3 or coeffs.shape != (s, s, s) or s % 2 != 1:
            raise ValueError("coeffs must be an odd (S,S,S) cube")
        flipped = np.conj(coeffs[::-1, ::-1, ::-1])
        scale = max(float(np.abs(coeffs).max()), 1.0)
        if np.abs(coeffs - flipped).max() > HERMITIAN_TOL * scale:
            raise ValueError("trig polynomial must be real-valued")
        self.coeffs = coeffs

    @property
    def kmax(self) -> int:
        return (self.coeffs.shape[-1] - 1) // 2

    @classmethod
    def constant(cls, value: float) -> "TrigPolynomial":
        c = np.zeros((1, 1, 1), dtype=np.complex128)
        c[0, 0, 0] = value
        return cls(c)

    @classmethod
    def product_cosine(cls, amplitude: float = 0.5) -> "TrigPolynomial":
        """``prod_i (1 + a*cos(x_i))`` -- nonnegative for ``|a| <= 1``."""
        one_d = np.array([amplitude / 2.0, 1.0, amplitude / 2.0])
        cube = one_d[:, None, None] * one_d[None, :, None] * one_d[None, None, :]
        return cls(cube.astype(np.complex128))

    def mean(self) -> float:
        c = self.kmax
        return float(self.coeffs[c, c, c].real)

    def to_grid(self, grid_size: int) -> np.ndarray:
        kmax = self.kmax
        if grid_size < min_synthesis_grid(kmax):
            raise GridTooSmall(grid_size, min_synthesis_grid(kmax))
        idx = _embed_indices(kmax, grid_size)
        emb = np.zeros((grid_size,) * 3, dtype=np.complex128)
        emb[idx[:, None, None], idx[None, :, None], idx[None, None, :]] = self.coeffs
        return np.ascontiguousarray((np.fft.ifftn(emb) * grid_size**3).real)

    def laplacian(self) -> "TrigPolynomial":
        return TrigPolynomial(-k_squared(self.kmax) * self.coeffs)

    def gradient_grid(self, grid_size: int) -> np.ndarray:
        """Samples of the gradient, shape ``(3, N, N, N)``."""
        comps = []
        for axis in range(3):
            k = wave_components(self.kmax)[axis]
            comps.append(TrigPolynomial._synthesize(1j * k * self.coeffs, grid_size))
        return np.stack(comps)

    @staticmethod
    def _synthesize(cube: np.ndarray, grid_size: int) -> np.ndarray:
        kmax = (cube.shape[-1] - 1) // 2
        idx = _embed_indices(kmax, grid_size)
        emb = np.zeros((grid_size,) * 3, dtype=np.complex128)
        emb[idx[:, None, None], idx[None, :, None], idx[None, None, :]] = cube
        return (np.fft.ifftn(emb) * grid_size**3).real

    def coeff_l1(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def min_on_grid(self, grid_size: int | None = None) -> float:
        n = grid_size or max(4 * (self.kmax + 1), 8)
        return float(self.to_grid(n).min())
