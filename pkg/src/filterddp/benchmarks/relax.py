"""Barrier-coupled offsets for relaxed complementarity rows.

Contact models relax products like lam * s = 0 to lam * s = kappa.  If
kappa sits at its final small value from the start, near-feasible
iterates pin one factor of each inactive product near kappa / gap, and
the primal-dual curvature z / u on that component grows like
mu * gap^2 / kappa^2.  Against the product row's own Schur pivot
(~ kappa^2 / mu) the stage system's pivot ratio scales as
(mu * gap / kappa^2)^2, which passes any fixed conditioning limit once
mu is well above kappa.  Tying kappa to the barrier weight keeps the
ratio bounded along the whole continuation and lands on the final
offset exactly when the weight reaches its floor.

A per-row ceiling caps the coupled offset where the geometry cannot
absorb a large one.  A friction block whose cone bound is cap admits the
isotropic interior point with every component at cap / 3, where both
relaxed products equal cap^2 / 9; ceilings at that value let early
subproblems run with a loose barrier without forcing slacks far outside
the cone.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from ..ocp import OcpModel

Array = np.ndarray


def couple_product_offset(
    model: OcpModel,
    rows: Sequence[int],
    floor: float,
    scale: float,
    ceiling: Optional[Sequence[float]] = None,
    row_scale: Optional[Sequence[float]] = None,
) -> OcpModel:
    """Tie the constant offset of the listed constraint rows to the barrier.

    The wrapped model keeps the build-time offset (floor) until a solver
    announces a barrier weight mu, after which row r's offset becomes
    max(floor, min(scale * mu, ceiling[r])).  Only constraint values
    shift; the offset is additive so no derivative callback changes.
    scale = 0 keeps the offset fixed; ceiling = None leaves the coupled
    offset uncapped.

    row_scale[r] declares that the model already divides row r by that
    value (normalizing the residual to order one), so the runtime shift
    is divided the same way.
    """
    rows = np.asarray(rows, dtype=int)
    if ceiling is None:
        ceil = np.full(rows.shape[0], np.inf)
    else:
        ceil = np.asarray(ceiling, dtype=float)
        if ceil.shape != rows.shape:
            raise ValueError(f"ceiling shape {ceil.shape} != rows shape {rows.shape}")
    if row_scale is None:
        divisor = np.ones(rows.shape[0])
    else:
        divisor = np.asarray(row_scale, dtype=float)
        if divisor.shape != rows.shape:
            raise ValueError(f"row_scale shape {divisor.shape} != rows shape {rows.shape}")
    cell = np.full(rows.shape[0], floor)
    base_con = model.constraints

    def constraints(x: Array, u: Array) -> Array:
        c = np.array(base_con(x, u), dtype=float)
        c[rows] -= (cell - floor) / divisor
        return c

    def on_barrier_update(mu: float) -> None:
        cell[:] = np.maximum(floor, np.minimum(scale * mu, ceil))

    return replace(model, constraints=constraints, on_barrier_update=on_barrier_update)
