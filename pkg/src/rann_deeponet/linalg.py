"""Dense least-squares solves and error metrics.

Every fit in the package ends in one linear least-squares problem
``min ||A x - b||``.  Random-feature design matrices are usually badly
conditioned, so the solve is a truncated SVD returning the minimum-norm
minimiser.  Small systems are handed to LAPACK ``gelsd`` directly; large ones
are streamed through :class:`StreamingLsq`, which keeps only the triangular
factor of ``[A | b]`` (``P+1`` squared doubles) and never materialises ``A``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import EmptySystemError, LengthMismatchError, NonFiniteError, ZeroReferenceError

DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True)
class LsqSystem:
    """Design matrix ``A`` (M x P) and right-hand side ``b`` (M,).

    Column ``i*k + j`` multiplies coefficient ``alpha[i, j]`` (trunk index
    ``i``, branch index ``j``).  ``row_weights`` scale whole rows (both the
    design row and its rhs entry) and default to one.
    """

    design: np.ndarray
    rhs: np.ndarray
    row_weights: np.ndarray | None = None

    def __post_init__(self):
        design = np.asarray(self.design, dtype=np.float64)
        rhs = np.asarray(self.rhs, dtype=np.float64)
        if design.ndim != 2:
            raise LengthMismatchError(f"design must be 2-D, got shape {design.shape}")
        if rhs.shape != (design.shape[0],):
            raise LengthMismatchError(f"rhs shape {rhs.shape} does not match {design.shape[0]} rows")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "rhs", rhs)
        if self.row_weights is not None:
            w = np.asarray(self.row_weights, dtype=np.float64)
            if w.shape != rhs.shape:
                raise LengthMismatchError("row_weights must have one entry per row")
            object.__setattr__(self, "row_weights", w)

    @property
    def row_count(self) -> int:
        return self.design.shape[0]

    @property
    def col_count(self) -> int:
        return self.design.shape[1]

    def weighted(self) -> tuple[np.ndarray, np.ndarray]:
        if self.row_weights is None:
            return self.design, self.rhs
        return self.design * self.row_weights[:, None], self.rhs * self.row_weights


@dataclass(frozen=True)
class LsqSolution:
    coefficients: np.ndarray
    residual_norm: float
    effective_rank: int
    solve_seconds: float
    singular_values: np.ndarray | None = None


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("least-squares system contains NaN or Inf")


def _check_tol(rel_tol):
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")


def solve_least_squares(system: LsqSystem, rel_tol: float = DEFAULT_REL_TOL,
                        ridge: float = 0.0) -> LsqSolution:
    """Minimum-norm least-squares solution by truncated SVD.

    Singular values below ``rel_tol * sigma_max`` are discarded.  A positive
    ``ridge`` appends ``sqrt(ridge) * I`` rows, i.e. Tikhonov regularisation.

    Raises
    ------
    EmptySystemError
        If the system has no rows or no columns.
    NonFiniteError
        If ``A`` or ``b`` contain NaN/Inf.
    """
    _check_tol(rel_tol)
    if system.row_count == 0 or system.col_count == 0:
        raise EmptySystemError(f"empty system {system.design.shape}")
    A, b = system.weighted()
    _check_finite(A, b)
    t0 = time.perf_counter()
    A_solve, b_solve = A, b
    if ridge > 0.0:
        P = A.shape[1]
        A_solve = np.vstack([A, np.sqrt(ridge) * np.eye(P)])
        b_solve = np.concatenate([b, np.zeros(P)])
    x, _, rank, sv = sla.lstsq(A_solve, b_solve, cond=rel_tol, lapack_driver="gelsd")
    elapsed = time.perf_counter() - t0
    residual = float(np.linalg.norm(A @ x - b))
    return LsqSolution(x, residual, int(rank), elapsed, sv)


class StreamingLsq:
    """Row-block least squares that keeps only the R factor of ``[A | b]``.

    Blocks are folded into an upper-triangular ``(P+1) x (P+1)`` factor with
    LAPACK ``tpqrt``.  The singular values of the leading ``P x P`` block are
    those of ``A``, so a truncated SVD of that block gives the same
    minimum-norm solution as :func:`solve_least_squares` on the full matrix.

    >>> acc = StreamingLsq(2)
    >>> acc.add(np.eye(2), np.array([1.0, 2.0]))
    >>> acc.solve().coefficients.round(12)
    array([1., 2.])
    """

    def __init__(self, n_cols: int, block_nb: int = 64):
        if n_cols < 1:
            raise EmptySystemError("need at least one column")
        self.n_cols = n_cols
        self.rows_seen = 0
        self._nb = max(1, min(block_nb, n_cols + 1))
        self._R = np.zeros((n_cols + 1, n_cols + 1), order="F")
        self._elapsed = 0.0

    def add(self, design_block: np.ndarray, rhs_block: np.ndarray) -> None:
        design_block = np.asarray(design_block, dtype=np.float64)
        rhs_block = np.asarray(rhs_block, dtype=np.float64)
        if design_block.ndim != 2 or design_block.shape[1] != self.n_cols:
            raise LengthMismatchError(f"block has shape {design_block.shape}, expected (*, {self.n_cols})")
        if rhs_block.shape != (design_block.shape[0],):
            raise LengthMismatchError("rhs block length does not match block rows")
        if design_block.shape[0] == 0:
            return
        _check_finite(design_block, rhs_block)
        t0 = time.perf_counter()
        aug = np.empty((design_block.shape[0], self.n_cols + 1), order="F")
        aug[:, :-1] = design_block
        aug[:, -1] = rhs_block
        R, _, _, info = lapack.dtpqrt(0, self._nb, self._R, aug, overwrite_a=1, overwrite_b=1)
        if info != 0:
            raise RuntimeError(f"dtpqrt failed with info={info}")
        self._R = R
        self.rows_seen += design_block.shape[0]
        self._elapsed += time.perf_counter() - t0

    def factor(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Return ``(R, Q^T b, rho)`` where ``rho`` is the untruncated residual norm."""
        P = self.n_cols
        R = np.triu(self._R[:P, :P])
        return R, self._R[:P, P].copy(), abs(float(self._R[P, P]))

    def solve(self, rel_tol: float = DEFAULT_REL_TOL, ridge: float = 0.0) -> LsqSolution:
        _check_tol(rel_tol)
        if self.rows_seen == 0:
            raise EmptySystemError("no rows were added")
        t0 = time.perf_counter()
        R, z, rho = self.factor()
        if ridge > 0.0:
            # fold the ridge rows in on a copy so the accumulator stays reusable
            extra = StreamingLsq(self.n_cols, self._nb)
            extra._R[:self.n_cols, :self.n_cols] = R
            extra._R[:self.n_cols, self.n_cols] = z
            extra.add(np.sqrt(ridge) * np.eye(self.n_cols), np.zeros(self.n_cols))
            R_r, z_r, rho_r = extra.factor()
            x, _, rank, sv = sla.lstsq(R_r, z_r, cond=rel_tol, lapack_driver="gelsd")
        else:
            x, _, rank, sv = sla.lstsq(R, z, cond=rel_tol, lapack_driver="gelsd")
        # ||Ax - b||^2 = ||Rx - Q^T b||^2 + rho^2 (unregularised objective)
        residual = float(np.hypot(np.linalg.norm(R @ x - z), rho))
        elapsed = self._elapsed + time.perf_counter() - t0
        return LsqSolution(x, residual, int(rank), elapsed, sv)


class NormalEquationsLsq:
    """Accumulates ``A^T A`` and ``A^T b``; fast when M >> P, but squares the conditioning.

    Eigenvalues of the Gram matrix below ``max(rel_tol**2, P * eps) * lambda_max``
    are truncated.
    """

    def __init__(self, n_cols: int):
        if n_cols < 1:
            raise EmptySystemError("need at least one column")
        self.n_cols = n_cols
        self.rows_seen = 0
        self._G = np.zeros((n_cols, n_cols))
        self._c = np.zeros(n_cols)
        self._bb = 0.0
        self._elapsed = 0.0

    def add(self, design_block, rhs_block) -> None:
        design_block = np.asarray(design_block, dtype=np.float64)
        rhs_block = np.asarray(rhs_block, dtype=np.float64)
        if design_block.ndim != 2 or design_block.shape[1] != self.n_cols:
            raise LengthMismatchError(f"block has shape {design_block.shape}, expected (*, {self.n_cols})")
        _check_finite(design_block, rhs_block)
        t0 = time.perf_counter()
        self._G += design_block.T @ design_block
        self._c += design_block.T @ rhs_block
        self._bb += float(rhs_block @ rhs_block)
        self.rows_seen += design_block.shape[0]
        self._elapsed += time.perf_counter() - t0

    def solve(self, rel_tol: float = DEFAULT_REL_TOL, ridge: float = 0.0) -> LsqSolution:
        _check_tol(rel_tol)
        if self.rows_seen == 0:
            raise EmptySystemError("no rows were added")
        t0 = time.perf_counter()
        lam, V = np.linalg.eigh(self._G + ridge * np.eye(self.n_cols))
        cut = max(rel_tol ** 2, self.n_cols * np.finfo(float).eps) * lam.max()
        keep = lam > cut
        x = V[:, keep] @ ((V[:, keep].T @ self._c) / lam[keep])
        r2 = self._bb - 2.0 * x @ self._c + x @ (self._G @ x)
        elapsed = self._elapsed + time.perf_counter() - t0
        sv = np.sqrt(np.clip(lam[::-1], 0.0, None))
        return LsqSolution(x, float(np.sqrt(max(r2, 0.0))), int(keep.sum()), elapsed, sv)


def relative_l2_error(pred, ref) -> float:
    """``||pred - ref||_2 / ||ref||_2``."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape or pred.size == 0:
        raise LengthMismatchError(f"lengths differ or are empty: {pred.size} vs {ref.size}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ZeroReferenceError("reference vector has zero norm")
    return float(np.linalg.norm(pred - ref) / denom)
