"""Fit alpha with one linear least-squares solve.

Data rows (one per sampled realization/point pair)::

    A[row, i*k + j] = c(y) t_i(y) h_j(f)        rhs = u(y) - g(y)

Physics rows for a linear operator ``L`` with ``L u = source``::

    A[row, i*k + j] = L(c t_i)(y) h_j(f)        rhs = source(y) - L(g)(y)

``L(c t_i)`` is expanded with the product rule from the analytic derivatives
of the cutoff and of the trunk basis, so no automatic differentiation is
involved.  Rows with ``c(y) = 0`` under a hard constraint carry no
information (``0 = 0``) and are dropped.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .datagen.dataset import BOUNDARY, INITIAL, INTERIOR, Dataset
from .errors import MissingSolutionValuesError, NonlinearPdeError
from .features import make_rng
from .linalg import (
    DEFAULT_REL_TOL,
    LsqSystem,
    NormalEquationsLsq,
    StreamingLsq,
    solve_least_squares,
)
from .model import ConstantField, RannDeepONet

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    sample_budget: int = 40_000
    boundary_weight: float = 1.0
    rel_tol: float = DEFAULT_REL_TOL
    rng_seed: int = 0
    mode: str = "data_driven"
    solver: str = "auto"
    ridge: float = 0.0
    block_rows: int = 2048
    stratified: bool | None = None

    def __post_init__(self):
        if self.mode not in ("data_driven", "physics_informed"):
            raise ValueError(f"unknown training mode {self.mode!r}")
        if self.solver not in ("auto", "svd", "qr", "normal"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not self.boundary_weight > 0:
            raise ValueError("boundary weight must be positive")
        if self.sample_budget < 1:
            raise ValueError("sample budget must be positive")


@dataclass
class TrainReport:
    residual_norm: float
    train_seconds: float
    rows_used: int
    effective_rank: int
    solve_seconds: float
    n_cols: int
    solver: str


@dataclass
class LinearPdeOperator:
    """``L u = sum A_de u_de + sum b_d u_d + r u`` with constant coefficients.

    ``source`` and ``boundary_value`` are constants or vectorised callables of
    the points.  ``linear=False`` marks operators whose residual is not linear
    in u; physics rows refuse them.
    """

    second: np.ndarray
    first: np.ndarray | None = None
    zeroth: float = 0.0
    source: float | Callable = 0.0
    boundary_value: float | Callable = 0.0
    name: str = "linear"
    linear: bool = True

    def __post_init__(self):
        self.second = np.atleast_2d(np.asarray(self.second, dtype=np.float64))
        d = self.second.shape[0]
        self.first = np.zeros(d) if self.first is None else np.asarray(self.first, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.second.shape[0]

    @staticmethod
    def _eval(term, Y):
        return term(Y) if callable(term) else np.full(Y.shape[0], float(term))

    def source_at(self, Y):
        return self._eval(self.source, Y)

    def boundary_at(self, Y):
        return self._eval(self.boundary_value, Y)

    def apply_field(self, vals):
        """``L`` applied to a scalar field given as FieldValues with order 2."""
        out = self.zeroth * vals.value
        if vals.grad is not None:
            out = out + vals.grad @ self.first
        if vals.hess is not None:
            out = out + np.einsum("nde,de->n", vals.hess, self.second)
        return out


def poisson_operator(dim: int = 2, K: float = 1.0, source=1.0) -> LinearPdeOperator:
    """``-div(K grad u) = source`` with constant ``K``."""
    return LinearPdeOperator(-K * np.eye(dim), source=source, name="poisson")


def diffusion_reaction_operator() -> LinearPdeOperator:
    return LinearPdeOperator(np.zeros((2, 2)), name="diffusion_reaction", linear=False)


def burgers_operator() -> LinearPdeOperator:
    return LinearPdeOperator(np.zeros((2, 2)), name="burgers", linear=False)


# ---------------------------------------------------------------- sampling

def sample_pairs(dataset: Dataset, budget: int, rng_seed, stratified: bool | None = None) -> np.ndarray:
    """Flat indices ``n*q + j`` drawn uniformly without replacement (sorted).

    With ``stratified``, the budget is split across point classes in
    proportion to their share of the dataset and each class is sampled
    separately.  A budget covering every pair returns all pairs.
    """
    N, q = dataset.n_realizations, dataset.q
    total = N * q
    if stratified is None:
        stratified = bool(dataset.meta.get("stratified", 0))
    rng = make_rng(rng_seed)
    if budget >= total:
        return np.arange(total)
    if not stratified:
        return np.sort(rng.choice(total, size=budget, replace=False))
    codes = dataset.mask.ravel()
    classes, counts = np.unique(codes, return_counts=True)
    quota = np.floor(budget * counts / total).astype(int)
    # hand out the rounding remainder to the largest classes first
    for c in np.argsort(-counts)[: budget - quota.sum()]:
        quota[c] += 1
    picked = []
    for cls, want in zip(classes, quota):
        pool = np.flatnonzero(codes == cls)
        picked.append(rng.choice(pool, size=min(want, pool.size), replace=False))
    return np.sort(np.concatenate(picked))


# ---------------------------------------------------------------- row assembly

def _cutoff_values(model, dataset, n_idx, Y, order):
    """Cutoff FieldValues for each row (per-realization domains when present)."""
    if dataset.domains is None:
        return model.constraint.cutoff()(Y, order)
    val = np.empty(Y.shape[0])
    d = Y.shape[1]
    grad = np.empty((Y.shape[0], d)) if order >= 1 else None
    hess = np.empty((Y.shape[0], d, d)) if order >= 2 else None
    for n in np.unique(n_idx):
        sel = n_idx == n
        fv = model.constraint.cutoff(dataset.cutoff(n))(Y[sel], order)
        val[sel] = fv.value
        if grad is not None:
            grad[sel] = fv.grad
        if hess is not None:
            hess[sel] = fv.hess
    from .model import FieldValues
    return FieldValues(val, grad, hess)


def _kron_rows(weights_t, H):
    """Rows ``w_i(y) h_j`` flattened as ``i*k + j``: (B, p) x (B, k) -> (B, p*k)."""
    B = weights_t.shape[0]
    return (weights_t[:, :, None] * H[:, None, :]).reshape(B, -1)


def data_row_blocks(model: RannDeepONet, dataset: Dataset, pairs, block_rows: int = 2048):
    """Yield ``(A_block, b_block)`` data rows for the given flat pair indices."""
    if not dataset.has_solution:
        raise MissingSolutionValuesError("data-driven rows need solution values")
    q = dataset.q
    H_all = model.branch_features(dataset.inputs)
    hard = model.constraint.kind == "dirichlet"
    lift = model.constraint.lift()
    for start in range(0, len(pairs), block_rows):
        idx = pairs[start:start + block_rows]
        n_idx, j_idx = idx // q, idx % q
        Y = dataset.colloc[n_idx, j_idx]
        u = dataset.u[n_idx, j_idx]
        T = model.trunk_features(Y)
        if hard:
            c = _cutoff_values(model, dataset, n_idx, Y, 0).value
            keep = c != 0.0
            rows = _kron_rows(c[keep, None] * T[keep], H_all[n_idx[keep]])
            rhs = u[keep] - lift(Y[keep]).value
        else:
            rows = _kron_rows(T, H_all[n_idx])
            rhs = u
        yield rows, rhs


def physics_row_blocks(model: RannDeepONet, dataset: Dataset, pde: LinearPdeOperator, pairs,
                       boundary_weight: float = 1.0, block_rows: int = 2048):
    """Yield PDE-residual rows (interior) and, without a hard constraint, boundary rows."""
    if not pde.linear:
        raise NonlinearPdeError(f"{pde.name} is nonlinear in u; physics rows need a linear operator")
    if pde.dim != model.coord_dim:
        raise ValueError("operator dimension does not match the model coordinates")
    q = dataset.q
    H_all = model.branch_features(dataset.inputs)
    hard = model.constraint.kind == "dirichlet"
    lift = model.constraint.lift()
    sw = np.sqrt(boundary_weight)
    A2, b1, r0 = pde.second, pde.first, pde.zeroth
    for start in range(0, len(pairs), block_rows):
        idx = pairs[start:start + block_rows]
        n_idx, j_idx = idx // q, idx % q
        Y = dataset.colloc[n_idx, j_idx]
        cls = dataset.mask[n_idx, j_idx]
        t, gt, Ht = model.trunk_features_derivatives(Y, order=2)
        blocks_A, blocks_b = [], []
        if hard:
            cv = _cutoff_values(model, dataset, n_idx, Y, 2)
            keep = cv.value != 0.0
            c, gc, Hc = cv.value[keep], cv.grad[keep], cv.hess[keep]
            t_, gt_, Ht_ = t[keep], gt[keep], Ht[keep]
            # L(c t) = r c t + b.(t grad c + c grad t) + A:(t Hc + grad c grad t^T + grad t grad c^T + c Ht)
            Lct = r0 * c[:, None] * t_
            Lct += t_ * (gc @ b1)[:, None] + c[:, None] * (gt_ @ b1)
            Lct += t_ * np.einsum("nde,de->n", Hc, A2)[:, None]
            Lct += np.einsum("nd,npe,de->np", gc, gt_, A2) + np.einsum("npd,ne,de->np", gt_, gc, A2)
            Lct += c[:, None] * np.einsum("npde,de->np", Ht_, A2)
            g_vals = lift(Y[keep], 2)
            blocks_A.append(_kron_rows(Lct, H_all[n_idx[keep]]))
            blocks_b.append(pde.source_at(Y[keep]) - pde.apply_field(g_vals))
        else:
            inner = cls == INTERIOR
            Lt = r0 * t[inner] + gt[inner] @ b1 + np.einsum("npde,de->np", Ht[inner], A2)
            blocks_A.append(_kron_rows(Lt, H_all[n_idx[inner]]))
            blocks_b.append(pde.source_at(Y[inner]))
            bnd = (cls == BOUNDARY) | (cls == INITIAL)
            if np.any(bnd):
                if dataset.has_solution:
                    g = dataset.u[n_idx[bnd], j_idx[bnd]]
                else:
                    g = pde.boundary_at(Y[bnd])
                blocks_A.append(sw * _kron_rows(t[bnd], H_all[n_idx[bnd]]))
                blocks_b.append(sw * g)
        yield np.concatenate(blocks_A), np.concatenate(blocks_b)


def _collect(blocks, n_cols):
    As, bs = [], []
    for A, b in blocks:
        As.append(A)
        bs.append(b)
    if not As:
        return np.zeros((0, n_cols)), np.zeros(0)
    return np.concatenate(As), np.concatenate(bs)


def assemble_data_rows(model: RannDeepONet, dataset: Dataset, sample_budget: int, rng_seed=0,
                       stratified: bool | None = None) -> LsqSystem:
    pairs = sample_pairs(dataset, sample_budget, rng_seed, stratified)
    A, b = _collect(data_row_blocks(model, dataset, pairs), model.p * model.k)
    return LsqSystem(A, b)


def assemble_physics_rows(model: RannDeepONet, dataset: Dataset, pde: LinearPdeOperator,
                          sample_budget: int, boundary_weight: float = 1.0, rng_seed=0,
                          stratified: bool | None = None) -> LsqSystem:
    pairs = sample_pairs(dataset, sample_budget, rng_seed, stratified)
    A, b = _collect(physics_row_blocks(model, dataset, pde, pairs, boundary_weight),
                    model.p * model.k)
    return LsqSystem(A, b)


def train(model: RannDeepONet, dataset: Dataset, config: TrainConfig,
          pde: LinearPdeOperator | None = None) -> TrainReport:
    """Assemble rows per ``config.mode``, solve, and store alpha in ``model``."""
    t0 = time.perf_counter()
    P = model.p * model.k
    if config.sample_budget < P:
        warnings.warn(f"sample budget {config.sample_budget} is below the {P} unknowns",
                      stacklevel=2)
    pairs = sample_pairs(dataset, config.sample_budget, config.rng_seed, config.stratified)
    if config.mode == "data_driven":
        blocks = data_row_blocks(model, dataset, pairs, config.block_rows)
    else:
        if pde is None:
            raise ValueError("physics-informed training needs a PDE operator")
        blocks = physics_row_blocks(model, dataset, pde, pairs, config.boundary_weight,
                                    config.block_rows)
    solver = config.solver
    if solver == "auto":
        solver = "svd" if len(pairs) <= 2 * P and len(pairs) * P <= 50_000_000 else "qr"
    if solver == "svd":
        A, b = _collect(blocks, P)
        sol = solve_least_squares(LsqSystem(A, b), config.rel_tol, config.ridge)
        rows = A.shape[0]
    else:
        acc = StreamingLsq(P) if solver == "qr" else NormalEquationsLsq(P)
        for A, b in blocks:
            acc.add(A, b)
        sol = acc.solve(config.rel_tol, config.ridge)
        rows = acc.rows_seen
    model.alpha = sol.coefficients.reshape(model.p, model.k)
    elapsed = time.perf_counter() - t0
    log.info("trained %d x %d system (%s) in %.2fs, rank %d", rows, P, solver, elapsed,
             sol.effective_rank)
    return TrainReport(sol.residual_norm, elapsed, rows, sol.effective_rank, sol.solve_seconds,
                       P, solver)


def objective(model: RannDeepONet, system: LsqSystem, alpha=None) -> float:
    """``||A vec(alpha) - b||`` for the current (or given) coefficients."""
    a = model.alpha if alpha is None else np.asarray(alpha)
    A, b = system.weighted()
    return float(np.linalg.norm(A @ a.ravel() - b))
