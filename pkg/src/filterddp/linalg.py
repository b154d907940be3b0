"""Dense symmetric-indefinite LDL^T factorization with inertia reporting.

The stage systems solved in the backward pass are small, dense, symmetric
and typically indefinite.  Solving them is not enough: the solver also needs
the inertia (counts of positive, negative and zero eigenvalues) to decide
whether the computed step is usable or the Hessian block has to be
regularized.  By Sylvester's law of inertia the eigenvalue sign counts of
the pivot blocks of an LDL^T factorization equal those of the original
matrix, so both come out of one factorization.

Pivoting uses the bounded (rook) search: a candidate pivot column is walked
until either a sufficiently dominant diagonal is found (1x1 pivot) or the
column maximum stops growing (2x2 pivot).  Rook pivoting bounds the element
growth of both L and D, which keeps the reported inertia trustworthy on the
near-singular systems produced while the regularization loop probes for the
right shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularFactorError

# Threshold balancing element growth between 1x1 and 2x2 pivots.
_ALPHA = (1.0 + np.sqrt(17.0)) / 8.0


@dataclass(frozen=True)
class SymIndefFactor:
    """Factorization P K P^T = L D L^T of a symmetric matrix K.

    Attributes:
        lower: unit lower-triangular factor, 2x2 pivot columns interleaved.
        diag: block-diagonal D stored dense (same shape as K).
        blocks: (start, size) of each pivot block, size 1 or 2.
        perm: permutation; row i of the pivoted matrix is row perm[i] of K.
        pivot_eigs: eigenvalues of the pivot blocks, factorization order.
        inertia: (n_plus, n_minus, n_zero) sign counts of K's eigenvalues.
        condition: ratio of largest to smallest pivot-eigenvalue magnitude
            (inf when a zero pivot is present).
    """

    lower: np.ndarray
    diag: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    perm: np.ndarray
    pivot_eigs: np.ndarray
    inertia: tuple[int, int, int]
    condition: float

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def _rook_pivot(W: np.ndarray, k: int) -> tuple[int, int, int | None]:
    """Select the next pivot in the trailing block W[k:, k:].

    Returns (size, i, j): a 1x1 pivot at row i (j is None), or a 2x2 pivot
    on rows (i, j).
    """
    n = W.shape[0]
    if k == n - 1:
        return 1, k, None
    i = k
    col = np.abs(W[k:, i])
    col[i - k] = 0.0
    r = k + int(np.argmax(col))
    omega_i = col[r - k]
    if abs(W[i, i]) >= _ALPHA * omega_i:
        # Covers the all-zero column: omega_i == 0 picks a 1x1 (zero) pivot.
        return 1, i, None
    while True:
        col = np.abs(W[k:, r])
        col[r - k] = 0.0
        p = k + int(np.argmax(col))
        omega_r = col[p - k]
        if abs(W[r, r]) >= _ALPHA * omega_r:
            return 1, r, None
        if omega_r <= omega_i:
            # omega_r == omega_i in exact arithmetic: the (i, r) off-diagonal
            # dominates both columns, so the 2x2 block is safely invertible.
            return 2, i, r
        i, omega_i, r = r, omega_r, p


def _swap(W: np.ndarray, perm: np.ndarray, a: int, b: int) -> None:
    if a == b:
        return
    W[[a, b], :] = W[[b, a], :]
    W[:, [a, b]] = W[:, [b, a]]
    perm[[a, b]] = perm[[b, a]]


def ldlt_factor(K: np.ndarray, zero_pivot_tol: float = 1e-12) -> SymIndefFactor:
    """Factor a symmetric matrix as P K P^T = L D L^T with rook pivoting.

    Args:
        K: square symmetric matrix; symmetrized as (K + K^T)/2 on entry.
        zero_pivot_tol: a pivot eigenvalue counts as zero when its magnitude
            is at most zero_pivot_tol times the largest entry of the trailing
            submatrix it was selected from.  Judging each pivot against its
            own submatrix keeps tiny-but-genuine pivots alive when the blocks
            of K sit at very different scales, as they do once the Hessian
            shift grows large.

    Raises:
        ValueError: on non-square or non-finite input.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix contains non-finite entries")
    n = K.shape[0]
    W = 0.5 * (K + K.T)
    perm = np.arange(n)
    blocks: list[tuple[int, int]] = []
    eigs: list[float] = []
    scales: list[float] = []

    k = 0
    while k < n:
        rem_scale = float(np.max(np.abs(W[k:, k:])))
        size, i, j = _rook_pivot(W, k)
        if size == 1:
            _swap(W, perm, k, i)
            d = W[k, k]
            col = W[k + 1:, k].copy()
            if d != 0.0:
                lcol = col / d
                W[k + 1:, k + 1:] -= np.outer(lcol, col)
            else:
                # Rook search returns a zero 1x1 pivot only for an (almost)
                # zero column; nothing to eliminate.
                lcol = np.zeros_like(col)
            W[k + 1:, k] = lcol
            blocks.append((k, 1))
            eigs.append(d)
            scales.append(rem_scale)
            k += 1
        else:
            _swap(W, perm, k, i)
            if j == k:
                j = i
            _swap(W, perm, k + 1, j)
            E = W[k:k + 2, k:k + 2].copy()
            C = W[k + 2:, k:k + 2].copy()
            det = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
            inv_e = np.array([[E[1, 1], -E[0, 1]], [-E[1, 0], E[0, 0]]]) / det
            L2 = C @ inv_e
            W[k + 2:, k + 2:] -= L2 @ C.T
            W[k + 2:, k:k + 2] = L2
            blocks.append((k, 2))
            half_tr = 0.5 * (E[0, 0] + E[1, 1])
            gap = np.hypot(0.5 * (E[0, 0] - E[1, 1]), E[0, 1])
            eigs.extend([half_tr - gap, half_tr + gap])
            scales.extend([rem_scale, rem_scale])
            k += 2

    lower = np.tril(W, -1) + np.eye(n)
    diag = np.zeros((n, n))
    for start, size in blocks:
        if size == 1:
            diag[start, start] = W[start, start]
        else:
            diag[start:start + 2, start:start + 2] = W[start:start + 2, start:start + 2]
            lower[start + 1, start] = 0.0
    pivot_eigs = np.array(eigs)
    mag = np.abs(pivot_eigs)
    tols = zero_pivot_tol * np.array(scales)
    n_zero = int(np.sum(mag <= tols))
    n_plus = int(np.sum(pivot_eigs > tols))
    n_minus = int(np.sum(pivot_eigs < -tols))
    if n == 0:
        condition = 1.0
    elif n_zero > 0:
        condition = np.inf
    else:
        condition = float(np.max(mag) / np.min(mag))
    return SymIndefFactor(
        lower=lower,
        diag=diag,
        blocks=tuple(blocks),
        perm=perm,
        pivot_eigs=pivot_eigs,
        inertia=(n_plus, n_minus, n_zero),
        condition=condition,
    )


def ldlt_solve(factor: SymIndefFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve K X = rhs given a factorization of K.

    Args:
        factor: output of ldlt_factor with no zero pivots.
        rhs: vector (n,) or matrix (n, m) right-hand side.

    Raises:
        SingularFactorError: if the factorization reported zero pivots.
    """
    if factor.inertia[2] > 0:
        raise SingularFactorError(
            f"matrix is singular ({factor.inertia[2]} zero pivots)"
        )
    rhs = np.asarray(rhs, dtype=float)
    squeeze = rhs.ndim == 1
    b = rhs.reshape(factor.n, -1).copy()
    L = factor.lower
    y = b[factor.perm]
    for start, size in factor.blocks:
        stop = start + size
        y[stop:] -= L[stop:, start:stop] @ y[start:stop]
    for start, size in factor.blocks:
        if size == 1:
            y[start] /= factor.diag[start, start]
        else:
            E = factor.diag[start:start + 2, start:start + 2]
            det = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
            top = (E[1, 1] * y[start] - E[0, 1] * y[start + 1]) / det
            bot = (-E[1, 0] * y[start] + E[0, 0] * y[start + 1]) / det
            y[start], y[start + 1] = top, bot
    for start, size in reversed(factor.blocks):
        stop = start + size
        y[start:stop] -= L[stop:, start:stop].T @ y[stop:]
    x = np.empty_like(y)
    x[factor.perm] = y
    return x[:, 0] if squeeze else x


def contract_first(vec: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """Contract a vector with a 3-d tensor along the first axis.

    (vec, tensor) of shapes (p,) and (p, a, b) give sum_i vec[i] * tensor[i]
    of shape (a, b).
    """
    vec = np.asarray(vec, dtype=float)
    tensor = np.asarray(tensor, dtype=float)
    if vec.ndim != 1 or tensor.ndim != 3 or tensor.shape[0] != vec.shape[0]:
        raise ValueError(
            f"incompatible shapes {vec.shape} and {tensor.shape} for contraction"
        )
    return np.tensordot(vec, tensor, axes=([0], [0]))
