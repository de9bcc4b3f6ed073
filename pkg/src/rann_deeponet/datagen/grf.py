"""Gaussian random field samplers.

``RbfGrf`` draws from N(0, C) with the squared-exponential kernel
``C_ab = exp(-|x_a - x_b|^2 / (2 l^2))`` through a Cholesky factor of
``C + jitter I``.  ``sample_grf_periodic_riesz`` draws a periodic field on
[0, 1) whose Fourier coefficient of mode k has variance
``625 (4 pi^2 k^2 + 25)^-4``, i.e. the covariance operator
``625 (-Laplacian + 25 I)^-4`` on the unit circle.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from ..errors import FactorizationFailure
from ..features import make_rng

RIESZ_SCALE = 625.0
RIESZ_SHIFT = 25.0
RIESZ_POWER = 4


def rbf_covariance(points, length_scale: float) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    return np.exp(-0.5 * d2 / length_scale ** 2)


class RbfGrf:
    """Reusable sampler: the Cholesky factor is computed once per sensor set."""

    def __init__(self, sensors, length_scale: float = 0.2, max_tries: int = 8):
        if not length_scale > 0:
            raise ValueError("length scale must be positive")
        self.sensors = np.asarray(sensors, dtype=np.float64)
        self.length_scale = length_scale
        C = rbf_covariance(self.sensors, length_scale)
        m = C.shape[0]
        jitter = 1e-10 * np.trace(C) / m
        for _ in range(max_tries):
            try:
                self.factor = sla.cholesky(C + jitter * np.eye(m), lower=True)
                self.jitter = jitter
                break
            except np.linalg.LinAlgError:
                jitter *= 10.0
        else:
            raise FactorizationFailure(f"covariance not factorable even with jitter {jitter:g}")

    def sample(self, rng_seed, size: int | None = None) -> np.ndarray:
        """One draw ``(m,)`` or ``size`` draws ``(size, m)``."""
        rng = make_rng(rng_seed)
        m = self.factor.shape[0]
        z = rng.standard_normal((m,) if size is None else (size, m))
        return z @ self.factor.T


def sample_grf_rbf(length_scale: float, sensors, rng_seed, size: int | None = None) -> np.ndarray:
    return RbfGrf(sensors, length_scale).sample(rng_seed, size)


def riesz_mode_variance(k, scale=RIESZ_SCALE, shift=RIESZ_SHIFT, power=RIESZ_POWER):
    k = np.asarray(k, dtype=np.float64)
    return scale * (4.0 * np.pi ** 2 * k ** 2 + shift) ** (-power)


def riesz_coefficients(resolution: int, rng_seed, size: int | None = None) -> np.ndarray:
    """Complex coefficients ``c_k`` for k = 0 .. resolution//2 - 1 with ``E|c_k|^2`` as above.

    ``c_0`` is real; ``c_k`` for k >= 1 has independent real and imaginary
    parts each of variance ``var_k / 2``.  The Nyquist mode is left out so
    the assembled field is exactly real.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    K = resolution // 2
    rng = make_rng(rng_seed)
    shape = (K,) if size is None else (size, K)
    std = np.sqrt(riesz_mode_variance(np.arange(K)))
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    c = std * (re + 1j * im) / np.sqrt(2.0)
    c[..., 0] = std[0] * re[..., 0]
    return c


def field_from_coefficients(coeffs, resolution: int) -> np.ndarray:
    """Real field on the grid j / resolution from one-sided coefficients."""
    coeffs = np.asarray(coeffs)
    spec = np.zeros(coeffs.shape[:-1] + (resolution // 2 + 1,), dtype=complex)
    spec[..., : coeffs.shape[-1]] = coeffs
    # irfft divides by n; u(x) = c_0 + 2 Re sum_k c_k e^{2 pi i k x}
    return np.fft.irfft(spec * resolution, n=resolution, axis=-1)


def sample_grf_periodic_riesz(resolution: int, rng_seed, size: int | None = None) -> np.ndarray:
    """Periodic field sampled on ``x_j = j / resolution``, j = 0 .. resolution - 1."""
    return field_from_coefficients(riesz_coefficients(resolution, rng_seed, size), resolution)


def periodic_extend(values) -> np.ndarray:
    """Append the wrap-around value so the samples cover [0, 1] inclusive."""
    values = np.asarray(values)
    return np.concatenate([values, values[..., :1]], axis=-1)
