"""Reference PDE solvers used to generate training and test data.

* diffusion-reaction ``u_t = D u_xx + kappa u^2 + f`` on (0,1) x (0,1], zero
  initial/boundary data: central differences, Crank-Nicolson, Newton on the
  quadratic term; a batch of sources is advanced together.
* Burgers ``u_t + u u_x = nu u_xx``, periodic on [0,1): Fourier
  pseudo-spectral with 2/3 dealiasing, integrating-factor RK4.
* Poisson ``-Lap u = f`` on a domain inside [0,2]^2 with u = 0 on the
  boundary: Shortley-Weller five-point stencil on a Cartesian grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import CflViolation, DegenerateDomain, NewtonDivergence


@dataclass
class GridSolution:
    """Values on a tensor grid; ``values[i, j]`` sits at ``(axes[0][i], axes[1][j])``."""

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=np.float64) for a in self.axes)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != tuple(a.size for a in self.axes):
            raise ValueError(f"values shape {self.values.shape} does not match axes")

    def interpolate(self, points, fill_invalid: float = 0.0) -> np.ndarray:
        """Bilinear interpolation; NaN nodes are treated as ``fill_invalid``."""
        return bilinear(self.axes[0], self.axes[1], np.nan_to_num(self.values, nan=fill_invalid), points)


def bilinear(xs, ys, values, points) -> np.ndarray:
    """Bilinear interpolation on a rectilinear grid; exact at grid nodes."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    V = np.asarray(values)

    def locate(axis, q):
        i = np.clip(np.searchsorted(axis, q, side="right") - 1, 0, axis.size - 2)
        return i, (q - axis[i]) / (axis[i + 1] - axis[i])

    i, fx = locate(xs, P[:, 0])
    j, fy = locate(ys, P[:, 1])
    v00, v10, v01, v11 = V[i, j], V[i + 1, j], V[i, j + 1], V[i + 1, j + 1]
    return ((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10
            + (1 - fx) * fy * v01 + fx * fy * v11)


# ---------------------------------------------------------------- diffusion-reaction

def _thomas(sub, diag, sup, rhs):
    """Batched tridiagonal solve with constant off-diagonals; diag/rhs are (N, n)."""
    n = diag.shape[1]
    c = np.empty_like(diag)
    d = np.empty_like(rhs)
    c[:, 0] = sup / diag[:, 0]
    d[:, 0] = rhs[:, 0] / diag[:, 0]
    for i in range(1, n):
        denom = diag[:, i] - sub * c[:, i - 1]
        c[:, i] = sup / denom
        d[:, i] = (rhs[:, i] - sub * d[:, i - 1]) / denom
    x = np.empty_like(rhs)
    x[:, -1] = d[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i] = d[:, i] - c[:, i] * x[:, i + 1]
    return x


def solve_diffusion_reaction_batch(f_values, D: float = 0.01, kappa: float = 0.01,
                                   nx: int = 100, nt: int = 100, source=None,
                                   tol: float = 1e-10, max_iter: int = 25) -> np.ndarray:
    """Solutions for a batch of sources; returns ``(N, nx, nt)``.

    ``f_values`` is ``(N, nx)`` sampled on ``linspace(0, 1, nx)``; the source
    is constant in time.  ``source(x, t)`` (vectorised, broadcasting) replaces
    it with a prescribed space-time source for a single solve.
    """
    if nx < 16 or nt < 16:
        raise ValueError("nx and nt must be at least 16")
    x = np.linspace(0.0, 1.0, nx)
    t = np.linspace(0.0, 1.0, nt)
    h, dt = x[1] - x[0], t[1] - t[0]
    xi = x[1:-1]
    if source is None:
        F = np.atleast_2d(np.asarray(f_values, dtype=np.float64))
        if F.shape[1] != nx:
            raise ValueError(f"source has {F.shape[1]} samples, grid has {nx}")
        f_int = F[:, 1:-1]

        def src(_):
            return f_int
    else:
        def src(tn):
            return np.atleast_2d(source(xi, tn))

    N = src(0.0).shape[0]
    r = D * dt / (2.0 * h * h)
    out = np.zeros((N, nx, nt))
    u = np.zeros((N, nx - 2))

    def lap(v):
        w = -2.0 * v
        w[:, 1:] += v[:, :-1]
        w[:, :-1] += v[:, 1:]
        return w / (h * h)

    for n in range(1, nt):
        f0, f1 = src(t[n - 1]), src(t[n])
        explicit = u + 0.5 * dt * (D * lap(u) + kappa * u * u + f0)
        v = u.copy()
        for it in range(max_iter):
            resid = v - 0.5 * dt * (D * lap(v) + kappa * v * v + f1) - explicit
            diag = 1.0 + 2.0 * r - dt * kappa * v
            delta = _thomas(-r, diag, -r, resid)
            v -= delta
            if not np.all(np.isfinite(v)):
                raise NewtonDivergence(f"Newton produced non-finite values at step {n}")
            if np.max(np.abs(delta)) <= tol * max(1.0, np.max(np.abs(v))):
                break
        else:
            raise NewtonDivergence(f"Newton did not converge in {max_iter} iterations at step {n}")
        u = v
        out[:, 1:-1, n] = u
    return out


def solve_diffusion_reaction(f_values, D: float = 0.01, kappa: float = 0.01,
                             nx: int = 100, nt: int = 100, source=None) -> GridSolution:
    vals = solve_diffusion_reaction_batch(None if source is not None else np.atleast_2d(f_values),
                                          D, kappa, nx, nt, source)[0]
    return GridSolution((np.linspace(0, 1, nx), np.linspace(0, 1, nt)), vals)


# ---------------------------------------------------------------- Burgers

def _resample_periodic(u, n):
    m = u.shape[-1]
    if m == n:
        return u
    U = np.fft.rfft(u, axis=-1) / m
    V = np.zeros(u.shape[:-1] + (n // 2 + 1,), dtype=complex)
    keep = min(m // 2, n // 2)
    V[..., :keep] = U[..., :keep]
    return np.fft.irfft(V * n, n=n, axis=-1)


def _evaluate_periodic(u, x):
    """Trigonometric interpolant of samples on j/n evaluated at points ``x``."""
    n = u.shape[-1]
    U = np.fft.rfft(u, axis=-1) / n
    k = np.arange(U.shape[-1])
    x = np.mod(np.asarray(x, dtype=np.float64), 1.0)  # x = 1 lands exactly on x = 0
    w = np.full(k.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    E = np.exp(2j * np.pi * np.outer(k, x))
    return np.real((U * w) @ E)


def solve_burgers(u0_values, nu: float = 0.01, nx: int | None = None, nt: int | None = None,
                  out_nx: int = 101, out_nt: int = 101, t_final: float = 1.0,
                  cfl: float = 0.5) -> GridSolution:
    """Periodic viscous Burgers from samples of ``u0`` on ``x_j = j / len(u0)``.

    ``nx`` is the spectral resolution (default ``len(u0)``), ``nt`` the total
    number of RK4 steps (default: smallest count meeting the CFL limit and
    hitting every output time).  The solution is returned on
    ``linspace(0, 1, out_nx) x linspace(0, t_final, out_nt)``; the x = 1 column
    equals the x = 0 column.
    """
    u0 = np.asarray(u0_values, dtype=np.float64)
    n = nx or u0.size
    u = _resample_periodic(u0, n)
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    dealias = np.fft.rfftfreq(n, d=1.0 / n) < n / 3.0
    intervals = out_nt - 1
    umax = max(np.max(np.abs(u)), 1e-12)
    dt_cfl = cfl * (1.0 / n) / umax
    min_sub = math.ceil((t_final / intervals) / dt_cfl)
    if nt is None:
        sub = max(1, min_sub)
    else:
        sub = max(1, math.ceil(nt / intervals))
        if sub < min_sub:
            warnings.warn(f"nt={nt} violates the CFL limit; refining to {min_sub * intervals} steps",
                          CflViolation, stacklevel=2)
            sub = min_sub
    dt = (t_final / intervals) / sub
    L = -nu * k * k
    E = np.exp(0.5 * dt * L)
    E2 = E * E

    def nonlin(v):
        w = np.fft.irfft(v * dealias, n=n)
        return -0.5j * k * np.fft.rfft(w * w) * dealias

    v = np.fft.rfft(u)
    x_out = np.linspace(0.0, 1.0, out_nx)
    direct = n % (out_nx - 1) == 0
    stride = n // (out_nx - 1) if direct else None
    values = np.empty((out_nx, out_nt))

    def sample(vhat):
        w = np.fft.irfft(vhat, n=n)
        inner = w[::stride] if direct else _evaluate_periodic(w, x_out[:-1])
        return np.append(inner, inner[0])

    values[:, 0] = sample(v)
    for j in range(1, out_nt):
        for _ in range(sub):
            a = dt * nonlin(v)
            b = dt * nonlin(E * (v + 0.5 * a))
            c = dt * nonlin(E * v + 0.5 * b)
            d = dt * nonlin(E2 * v + E * c)
            v = E2 * v + (E2 * a + 2.0 * E * (b + c) + d) / 6.0
        values[:, j] = sample(v)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("Burgers solve blew up")
    return GridSolution((x_out, np.linspace(0.0, t_final, out_nt)), values)


# ---------------------------------------------------------------- Poisson / Darcy

def solve_darcy(domain, grid_n: int = 201, source: float = 1.0, box=(0.0, 2.0),
                min_nodes: int = 9, return_residual: bool = False):
    """Shortley-Weller solve of ``-Lap u = source`` in ``domain``, ``u = 0`` on its boundary.

    Returns a :class:`GridSolution` on ``grid_n x grid_n`` nodes covering
    ``box^2``; nodes outside the domain (including boundary nodes) are NaN.
    """
    xs = np.linspace(box[0], box[1], grid_n)
    h = xs[1] - xs[0]
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    inside = domain.contains(X, Y)
    inside[[0, -1], :] = False
    inside[:, [0, -1]] = False
    n_in = int(inside.sum())
    if n_in < min_nodes:
        raise DegenerateDomain(f"only {n_in} grid nodes inside the domain")
    index = -np.ones(inside.shape, dtype=np.int64)
    index[inside] = np.arange(n_in)
    I, J = np.nonzero(inside)
    P = np.stack([xs[I], xs[J]], axis=1)

    arms = {}
    for name, (di, dj) in {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}.items():
        nb_in = inside[I + di, J + dj]
        theta = np.ones(n_in)
        out = ~nb_in
        if np.any(out):
            Q = np.stack([xs[I[out] + di], xs[J[out] + dj]], axis=1)
            theta[out] = np.maximum(domain.segment_fraction(P[out], Q), 1e-12)
        arms[name] = (theta * h, nb_in, index[I + di, J + dj])

    rows, cols, vals = [], [], []
    diag = np.zeros(n_in)
    node = np.arange(n_in)
    for a, b in (("E", "W"), ("N", "S")):
        ha, ina, ia = arms[a]
        hb, inb, ib = arms[b]
        diag += 2.0 / (ha * hb)
        for harm, hother, nb_in, nb_idx in ((ha, hb, ina, ia), (hb, ha, inb, ib)):
            coef = -2.0 / (harm * (harm + hother))
            rows.append(node[nb_in])
            cols.append(nb_idx[nb_in])
            vals.append(coef[nb_in])
    rows.append(node)
    cols.append(node)
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_in, n_in))
    rhs = np.full(n_in, float(source))
    u = spla.spsolve(A.tocsc(), rhs)
    residual = float(np.linalg.norm(A @ u - rhs) / np.linalg.norm(rhs))
    if residual > 1e-10:
        raise RuntimeError(f"Poisson solve residual {residual:.2e} above 1e-10")
    values = np.full(inside.shape, np.nan)
    values[inside] = u
    sol = GridSolution((xs, xs), values)
    return (sol, residual) if return_residual else sol
