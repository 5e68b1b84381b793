import numpy as np
import pytest

from nsv.fields import SpectralField, ball_mask, k_squared, leray_project, norms


def random_velocity(n: int, seed: int, decay: float = 4.0, amplitude: float = 1.0) -> SpectralField:
    """Divergence-free random field with ``|k|^{-decay}`` coefficient damping."""
    rng = np.random.default_rng(seed)
    size = 2 * n + 1
    shape = (3, size, size, size)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    k2 = k_squared(n)
    c *= np.where(k2 > 0, np.maximum(k2, 1.0) ** (-decay / 2.0), 0.0)
    c = np.where(ball_mask(n, n), c, 0.0)
    c = 0.5 * (c + np.conj(c[:, ::-1, ::-1, ::-1]))
    u = leray_project(SpectralField(c, validate=False))
    scale = amplitude / norms(u)["l2"]
    return SpectralField(u.coeffs * scale, validate=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
