"""Build problem callbacks from sympy expressions.

The physics benchmarks define cost, dynamics and constraints symbolically;
every derivative the solver needs is generated here by symbolic
differentiation and lambdified once at build time.  The solver itself never
differentiates anything.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from ..ocp import Dims, OcpModel

Array = np.ndarray


def _all_zero(nested) -> bool:
    if isinstance(nested, (list, tuple)):
        return all(_all_zero(e) for e in nested)
    return sp.sympify(nested).is_zero is True


def _lamb(args: Sequence[sp.Symbol], expr_like):
    return sp.lambdify(args, expr_like, modules="numpy", cse=True)


def _scalar_fn(fn) -> Callable[[Array, Array], float]:
    return lambda x, u: float(fn(*x, *u))


def _array_fn(fn, shape: tuple[int, ...], sym_axes: Optional[tuple[int, ...]] = None):
    def call(x: Array, u: Array) -> Array:
        out = np.asarray(fn(*x, *u), dtype=float).reshape(shape)
        if sym_axes is not None:
            out = 0.5 * (out + out.transpose(sym_axes))
        return out

    return call


def _jacobian(exprs: Sequence, vs: Sequence[sp.Symbol]):
    return [[sp.diff(e, v) for v in vs] for e in exprs]


def _second(exprs: Sequence, va: Sequence[sp.Symbol], vb: Sequence[sp.Symbol]):
    return [[[sp.diff(e, a, b) for b in vb] for a in va] for e in exprs]


def build_symbolic_model(
    name: str,
    x_syms: Sequence[sp.Symbol],
    u_syms: Sequence[sp.Symbol],
    cost_expr,
    dynamics_exprs: Sequence,
    constraint_exprs: Sequence,
    x_init: Array,
    horizon: int,
    nonneg_mask: Optional[Sequence[bool]] = None,
) -> OcpModel:
    """Differentiate the stage expressions and assemble a problem.

    Second-derivative callbacks that are identically zero are dropped
    (the solver treats missing tensors as zero).  Symmetric tensors are
    symmetrized numerically so transposed index pairs agree exactly.
    """
    xs = list(x_syms)
    us = list(u_syms)
    args = xs + us
    n_x, n_u = len(xs), len(us)
    n_c = len(constraint_exprs)
    dims = Dims(horizon=horizon, n_x=n_x, n_u=n_u, n_c=n_c)

    cost_x = [sp.diff(cost_expr, v) for v in xs]
    cost_u = [sp.diff(cost_expr, v) for v in us]
    cost_xx = [[sp.diff(cost_expr, a, b) for b in xs] for a in xs]
    cost_ux = [[sp.diff(cost_expr, a, b) for b in xs] for a in us]
    cost_uu = [[sp.diff(cost_expr, a, b) for b in us] for a in us]

    kwargs = dict(
        dims=dims,
        x_init=np.asarray(x_init, dtype=float),
        cost=_scalar_fn(_lamb(args, cost_expr)),
        cost_x=_array_fn(_lamb(args, cost_x), (n_x,)),
        cost_u=_array_fn(_lamb(args, cost_u), (n_u,)),
        cost_xx=_array_fn(_lamb(args, cost_xx), (n_x, n_x), sym_axes=(1, 0)),
        cost_ux=_array_fn(_lamb(args, cost_ux), (n_u, n_x)),
        cost_uu=_array_fn(_lamb(args, cost_uu), (n_u, n_u), sym_axes=(1, 0)),
        nonneg_mask=None if nonneg_mask is None else np.asarray(nonneg_mask, dtype=bool),
        name=name,
    )

    def add_field(prefix: str, exprs: Sequence, lead: int) -> None:
        kwargs[prefix] = _array_fn(_lamb(args, list(exprs)), (lead,))
        jx = _jacobian(exprs, xs)
        ju = _jacobian(exprs, us)
        key_x = "dynamics_x" if prefix == "dynamics" else "con_x"
        key_u = "dynamics_u" if prefix == "dynamics" else "con_u"
        kwargs[key_x] = _array_fn(_lamb(args, jx), (lead, n_x))
        kwargs[key_u] = _array_fn(_lamb(args, ju), (lead, n_u))
        for suffix, va, vb, shape, sym in (
            ("xx", xs, xs, (lead, n_x, n_x), (0, 2, 1)),
            ("ux", us, xs, (lead, n_u, n_x), None),
            ("uu", us, us, (lead, n_u, n_u), (0, 2, 1)),
        ):
            tensor = _second(exprs, va, vb)
            key = ("dynamics_" if prefix == "dynamics" else "con_") + suffix
            if _all_zero(tensor):
                kwargs[key] = None
            else:
                kwargs[key] = _array_fn(_lamb(args, tensor), shape, sym_axes=sym)

    if dynamics_exprs is not None:
        add_field("dynamics", list(dynamics_exprs), n_x)
    if n_c:
        add_field("constraints", list(constraint_exprs), n_c)

    return OcpModel(**kwargs)


def discrete_el_rows(
    q_prev: Sequence[sp.Symbol],
    q_cur: Sequence[sp.Symbol],
    q_next: Sequence[sp.Symbol],
    lagrangian: Callable[[Sequence, Sequence], object],
    dt: float,
) -> list:
    """Discrete Euler-Lagrange residual rows for a midpoint quadrature.

    The discrete Lagrangian over one interval is dt * L(midpoint q,
    finite-difference velocity).  Rows are the slot-2 derivative over the
    incoming interval plus the slot-1 derivative over the outgoing one;
    external generalized forces are the caller's to add.
    """
    n = len(q_cur)
    mid_in = [(q_prev[i] + q_cur[i]) / 2 for i in range(n)]
    vel_in = [(q_cur[i] - q_prev[i]) / dt for i in range(n)]
    mid_out = [(q_cur[i] + q_next[i]) / 2 for i in range(n)]
    vel_out = [(q_next[i] - q_cur[i]) / dt for i in range(n)]
    ld_in = dt * lagrangian(mid_in, vel_in)
    ld_out = dt * lagrangian(mid_out, vel_out)
    return [sp.diff(ld_in, q_cur[i]) + sp.diff(ld_out, q_cur[i]) for i in range(n)]
