"""Datasets for the three benchmarks.

A :class:`Dataset` holds N realizations of an input function sampled at m
sensors, q collocation points per realization and (for data-driven use) the
reference solution at those points.  Point classes are stored per point:

    0 outside the domain, 1 interior, 2 spatial boundary, 3 initial time
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import make_rng
from ..geometry import SHAPES, boundary_points, domain_from_params, sample_domain
from .grf import RbfGrf, sample_grf_periodic_riesz
from .solvers import (
    _evaluate_periodic,
    bilinear,
    solve_burgers,
    solve_darcy,
    solve_diffusion_reaction_batch,
)

OUTSIDE, INTERIOR, BOUNDARY, INITIAL = 0, 1, 2, 3
EXAMPLES = ("dr", "burgers", "darcy")


@dataclass
class Dataset:
    example_id: str
    sensors: np.ndarray          # (m, sensor_dim)
    inputs: np.ndarray           # (N, m)
    colloc: np.ndarray           # (N, q, d)
    u: np.ndarray | None         # (N, q)
    mask: np.ndarray             # (N, q) uint8 point classes
    domains: list | None = None  # per-realization domains (darcy)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sensors = np.asarray(self.sensors, dtype=np.float64)
        if self.sensors.ndim == 1:
            self.sensors = self.sensors[:, None]
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.colloc = np.asarray(self.colloc, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=np.float64)
        self.validate()

    @property
    def n_realizations(self) -> int:
        return self.inputs.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def q(self) -> int:
        return self.colloc.shape[1]

    @property
    def coord_dim(self) -> int:
        return self.colloc.shape[2]

    @property
    def has_solution(self) -> bool:
        return self.u is not None

    def validate(self):
        N, m = self.inputs.shape
        if self.sensors.shape[0] != m:
            raise ValueError(f"{self.sensors.shape[0]} sensors but inputs have {m} columns")
        if self.colloc.ndim != 3 or self.colloc.shape[0] != N:
            raise ValueError(f"collocation array must be (N, q, d), got {self.colloc.shape}")
        if self.mask.shape != self.colloc.shape[:2]:
            raise ValueError("mask must be (N, q)")
        if self.u is not None and self.u.shape != self.colloc.shape[:2]:
            raise ValueError("solution values must be (N, q)")
        if self.domains is not None and len(self.domains) != N:
            raise ValueError("need one domain per realization")
        for name in ("sensors", "inputs", "colloc", "u"):
            arr = getattr(self, name)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def cutoff(self, n):
        """Per-realization cutoff field, or None when the model's own cutoff applies."""
        return None if self.domains is None else self.domains[n]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.example_id, self.sensors, self.inputs[idx], self.colloc[idx],
                       None if self.u is None else self.u[idx], self.mask[idx],
                       None if self.domains is None else [self.domains[i] for i in idx],
                       dict(self.meta))

    def without_solution(self) -> "Dataset":
        return Dataset(self.example_id, self.sensors, self.inputs, self.colloc, None,
                       self.mask, self.domains, dict(self.meta))


def _stream(seed, *tags):
    return make_rng([int(seed), *tags])


def _grid_points(xs, ys):
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


# ---------------------------------------------------------------- diffusion-reaction

def build_dr(N: int, m: int = 100, q: int = 100, seed: int = 0, layout: str = "random",
             nx: int = 100, nt: int = 100, length_scale: float = 0.2,
             D: float = 0.01, kappa: float = 0.01, chunk: int = 500) -> Dataset:
    """Sources from an RBF GRF on the x-grid; points in (x, t) on [0, 1]^2."""
    xg = np.linspace(0.0, 1.0, nx)
    tg = np.linspace(0.0, 1.0, nt)
    sensors = np.linspace(0.0, 1.0, m)
    grf = RbfGrf(xg, length_scale)
    F_grid = np.stack([grf.sample([seed, 0, n]) for n in range(N)]) if N else np.zeros((0, nx))
    inputs = F_grid if m == nx else np.stack([np.interp(sensors, xg, f) for f in F_grid])
    if layout == "grid":
        pts = _grid_points(xg, tg)
        colloc = np.broadcast_to(pts, (N, pts.shape[0], 2)).copy()
    else:
        colloc = np.stack([_stream(seed, 1, n).uniform(0.0, 1.0, size=(q, 2)) for n in range(N)])
    u = np.empty(colloc.shape[:2])
    for start in range(0, N, chunk):
        sl = slice(start, min(N, start + chunk))
        sols = solve_diffusion_reaction_batch(F_grid[sl], D, kappa, nx, nt)
        if layout == "grid":
            u[sl] = sols.reshape(sols.shape[0], -1)
        else:
            u[sl] = np.stack([bilinear(xg, tg, s, c) for s, c in zip(sols, colloc[sl])])
    x, t = colloc[..., 0], colloc[..., 1]
    mask = np.where((x == 0.0) | (x == 1.0) | (t == 0.0), BOUNDARY, INTERIOR).astype(np.uint8)
    meta = dict(nx=nx, nt=nt, length_scale=length_scale, D=D, kappa=kappa, layout=layout, seed=seed)
    return Dataset("dr", sensors, inputs, colloc, u, mask, None, meta)


# ---------------------------------------------------------------- Burgers

BURGERS_STRATA = {INITIAL: 101, BOUNDARY: 100, INTERIOR: 2500}


def burgers_points(rng, n_initial=101, n_boundary=100, n_interior=2500):
    """Stratified (x, t) points: t=0 line, half on x=0 / half on x=1, interior."""
    init = np.stack([np.linspace(0.0, 1.0, n_initial), np.zeros(n_initial)], axis=1)
    half = n_boundary // 2
    left = np.stack([np.zeros(half), rng.uniform(0.0, 1.0, half)], axis=1)
    right = np.stack([np.ones(n_boundary - half), rng.uniform(0.0, 1.0, n_boundary - half)], axis=1)
    inner = rng.uniform(0.0, 1.0, size=(n_interior, 2))
    pts = np.concatenate([init, left, right, inner])
    cls = np.concatenate([np.full(n_initial, INITIAL), np.full(n_boundary, BOUNDARY),
                          np.full(n_interior, INTERIOR)]).astype(np.uint8)
    return pts, cls


def build_burgers(N: int, m: int = 101, seed: int = 0, layout: str = "random",
                  resolution: int = 200, nu: float = 0.01, out_n: int = 101,
                  n_initial: int = 101, n_boundary: int = 100, n_interior: int = 2500) -> Dataset:
    """Initial conditions from the periodic Riesz GRF; solution on an out_n x out_n grid."""
    sensors = np.linspace(0.0, 1.0, m)
    xs = np.linspace(0.0, 1.0, out_n)
    ts = np.linspace(0.0, 1.0, out_n)
    inputs, colloc, u, mask = [], [], [], []
    grid = _grid_points(xs, ts)
    for n in range(N):
        u0 = sample_grf_periodic_riesz(resolution, [seed, 0, n])
        if resolution % (m - 1) == 0:
            s = u0[:: resolution // (m - 1)]
            inputs.append(np.append(s, s[0]))
        else:
            inputs.append(_evaluate_periodic(u0, sensors))
        sol = solve_burgers(u0, nu, out_nx=out_n, out_nt=out_n)
        if layout == "grid":
            pts = grid
            cls = np.where(grid[:, 1] == 0.0, INITIAL,
                           np.where((grid[:, 0] == 0.0) | (grid[:, 0] == 1.0), BOUNDARY, INTERIOR))
            vals = sol.values.ravel()
        else:
            pts, cls = burgers_points(_stream(seed, 1, n), n_initial, n_boundary, n_interior)
            vals = bilinear(xs, ts, sol.values, pts)
        colloc.append(pts)
        u.append(vals)
        mask.append(cls)
    meta = dict(resolution=resolution, nu=nu, out_n=out_n, layout=layout, seed=seed,
                stratified=1 if layout != "grid" else 0)
    return Dataset("burgers", sensors, np.array(inputs).reshape(N, m),
                   np.array(colloc).reshape(N, -1, 2), np.array(u).reshape(N, -1),
                   np.array(mask, dtype=np.uint8).reshape(N, -1), None, meta)


# ---------------------------------------------------------------- Darcy

def build_darcy(N: int, m_points: int = 100, q: int = 1000, seed: int = 0, layout: str = "random",
                grid_n: int = 201, eval_n: int = 201, with_solution: bool = True) -> Dataset:
    """Domains cycle ellipse/rectangle/triangle; input is the flattened boundary polyline."""
    sensors = np.repeat(np.arange(m_points) / m_points, 2)
    domains = [sample_domain(SHAPES[n % 3], [seed, 2, n]) for n in range(N)]
    inputs = np.stack([boundary_points(d, m_points).ravel() for d in domains]) if N else \
        np.zeros((0, 2 * m_points))
    if layout == "grid":
        ev = np.linspace(0.0, 2.0, eval_n)
        pts = _grid_points(ev, ev)
        colloc = np.broadcast_to(pts, (N, pts.shape[0], 2)).copy()
    else:
        colloc = np.stack([_stream(seed, 1, n).uniform(0.0, 2.0, size=(q, 2)) for n in range(N)]) \
            if N else np.zeros((0, q, 2))
    mask = np.stack([np.where(d.contains(c[:, 0], c[:, 1]), INTERIOR, OUTSIDE)
                     for d, c in zip(domains, colloc)]).astype(np.uint8) if N else \
        np.zeros(colloc.shape[:2], dtype=np.uint8)
    u = None
    if with_solution:
        u = np.zeros(colloc.shape[:2])
        for n, d in enumerate(domains):
            sol = solve_darcy(d, grid_n)
            inside = mask[n] == INTERIOR
            if layout == "grid" and eval_n == grid_n:
                u[n] = np.nan_to_num(sol.values, nan=0.0).ravel()
            else:
                u[n, inside] = sol.interpolate(colloc[n, inside])
            u[n, ~inside] = 0.0
    meta = dict(m_points=m_points, grid_n=grid_n, eval_n=eval_n, layout=layout, seed=seed,
                input_layout="x1 y1 x2 y2 ... (boundary points, counterclockwise)")
    return Dataset("darcy", sensors, inputs, colloc, u, mask, domains, meta)


def build_dataset(example_id: str, N: int, m: int | None = None, q: int | None = None,
                  rng_seed: int = 0, layout: str = "random", **grid_params) -> Dataset:
    """Generate a dataset for ``dr``, ``burgers`` or ``darcy``."""
    if example_id == "dr":
        return build_dr(N, m or 100, q or 100, rng_seed, layout, **grid_params)
    if example_id == "burgers":
        return build_burgers(N, m or 101, rng_seed, layout, **grid_params)
    if example_id in ("darcy", "darcy_pi"):
        return build_darcy(N, (m or 200) // 2, q or 1000, rng_seed, layout, **grid_params)
    raise ValueError(f"unknown example id {example_id!r}")


def domains_from_table(table) -> list:
    return [domain_from_params(row[0], row[1:]) for row in table]
