"""Equivariant and invariant networks built on Reynolds design averages.

The equivariant family keeps one small network per basis tableau of the
output order.  A forward pass walks depths in ascending order; for each
design element g of depth D it feeds the (g . X) gather to every depth-D
component and writes the result, divided by the design size, at the output
index obtained by relabeling the tableau representative with g^-1.  The
design's unique-normalization property means every output entry is written
exactly once, so for output order 2 a pass costs exactly n^2 component
evaluations instead of a factorial-size group sum.

Reduction: components may read a fixed list of coordinates of (g . X)
instead of the whole tensor (gathered by index lookup, nothing is
materialized).  With coordinates drawn from {1, 2}^order the parameter count
does not depend on n, which is what makes cross-size transfer possible.
The per-depth averaging divisors are recorded at build time and survive
transfer unchanged; re-deriving them at the new size would rescale every
learned component by the ratio of design sizes.

The stab_restricted flag narrows depth-D components to coordinates indexed
entirely within 1..D.  Those gathers are fixed by the pointwise stabilizer
of 1..D, which upgrades the design average to the full-group average and
makes the network exactly equivariant (a generic component sees a design
gap; fresh models report it rather than hide it).
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .groups import enumerate_design, invert
from .nn import MLPParams, init_params, mlp_backward, mlp_forward, mlp_forward_cached
from .rng import CounterRng
from .tableaux import (
    BasisTableau,
    ExtendedTableau,
    all_basis_tableaux,
    enum_basis_tableaux,
    tableau_to_indices,
)
from .tensors import DenseTensor, flat_index

POOLINGS = ("orbit_sum", "max_diag_offdiag")


@dataclass(frozen=True)
class ReducedSpec:
    """Which coordinates of the permuted input the components read."""

    coords: tuple[tuple[int, ...], ...]
    stab_restricted: bool = False

    def active(self, depth: int) -> tuple[tuple[int, ...], ...]:
        if not self.stab_restricted:
            return self.coords
        kept = tuple(c for c in self.coords if max(c) <= depth)
        if not kept:
            raise ValueError(f"no coordinates within 1..{depth} in {self.coords}")
        return kept


def default_reduced_spec(order_in: int, stab_restricted: bool = False) -> ReducedSpec:
    """All coordinates over {1, 2}: four entries for matrix input."""
    return ReducedSpec(tuple(itertools.product((1, 2), repeat=order_in)), stab_restricted)


@dataclass
class EquivariantReyNet:
    n: int
    order_in: int
    channels_in: int
    order_out: int
    channels_out: int
    components: dict[BasisTableau, MLPParams | Callable]
    reduced: ReducedSpec | None
    depth_divisors: dict[int, int]

    @property
    def tableaux(self) -> tuple[BasisTableau, ...]:
        return all_basis_tableaux(self.order_out)


def component_input_dim(
    n: int, order_in: int, channels_in: int, reduced: ReducedSpec | None, depth: int
) -> int:
    if reduced is None:
        return n**order_in * channels_in
    return len(reduced.active(depth)) * channels_in


def build_equivariant(
    seed: int,
    n: int,
    order_in: int,
    channels_in: int,
    order_out: int,
    channels_out: int,
    widths: tuple[int, ...] = (128, 128),
    reduced: ReducedSpec | None = None,
) -> EquivariantReyNet:
    if order_in < 1 or order_out < 1:
        raise ValueError("input and output orders must be at least 1")
    if n < order_out:
        raise ValueError(f"need n >= output order, got n={n}, order={order_out}")
    if reduced is not None:
        top = max(max(c) for c in reduced.coords)
        if top > n:
            raise ValueError(f"reduced coordinate index {top} exceeds n={n}")
    components: dict[BasisTableau, MLPParams | Callable] = {}
    stream = CounterRng(seed)
    for k, tab in enumerate(all_basis_tableaux(order_out)):
        d_in = component_input_dim(n, order_in, channels_in, reduced, tab.depth)
        dims = (d_in,) + tuple(widths) + (channels_out,)
        components[tab] = init_params(stream.split(k).key, dims)
    divisors = {
        depth: len(enumerate_design(n, depth)) for depth in range(1, order_out + 1)
    }
    return EquivariantReyNet(
        n, order_in, channels_in, order_out, channels_out, components, reduced, divisors
    )


@dataclass(frozen=True)
class _DepthPlan:
    depth: int
    design_size: int
    gather: np.ndarray  # (|H|, d_in) flat positions into the input
    tableaux: tuple[BasisTableau, ...]
    rows: np.ndarray  # (len(tableaux), |H|) flat output rows


@lru_cache(maxsize=None)
def _forward_plan(
    n: int, order_in: int, channels_in: int, order_out: int, reduced: ReducedSpec | None
) -> tuple[_DepthPlan, ...]:
    plans = []
    base = np.arange(n**order_in).reshape((n,) * order_in)
    for depth in range(1, order_out + 1):
        design = enumerate_design(n, depth)
        inverses = [invert(g).image for g in design.elements]
        gather_rows = []
        for inv_im in inverses:
            inv0 = np.array([i - 1 for i in inv_im])
            if reduced is None:
                pos = base[np.ix_(*([inv0] * order_in))].ravel()
            else:
                pos = np.array(
                    [
                        sum(inv0[c - 1] * n ** (order_in - 1 - j) for j, c in enumerate(coord))
                        for coord in reduced.active(depth)
                    ],
                    dtype=np.int64,
                )
            gather_rows.append(
                (pos[:, None] * channels_in + np.arange(channels_in)).ravel()
            )
        tableaux = enum_basis_tableaux(order_out, depth)
        rows = np.empty((len(tableaux), len(design.elements)), dtype=np.int64)
        for ti, tab in enumerate(tableaux):
            for gi, inv_im in enumerate(inverses):
                labels = tuple(inv_im[:depth])
                u = tableau_to_indices(ExtendedTableau(n, labels, tab))
                rows[ti, gi] = flat_index(u, n)
        plans.append(
            _DepthPlan(depth, len(design.elements), np.array(gather_rows), tableaux, rows)
        )
    written = np.concatenate([p.rows.ravel() for p in plans])
    if not np.array_equal(np.sort(written), np.arange(n**order_out)):
        raise AssertionError("design scatter does not cover each output row once")
    return tuple(plans)


def _plan_for(model: EquivariantReyNet) -> tuple[_DepthPlan, ...]:
    return _forward_plan(
        model.n, model.order_in, model.channels_in, model.order_out, model.reduced
    )


def _eval_component(comp, x2d: np.ndarray) -> np.ndarray:
    if isinstance(comp, MLPParams):
        return mlp_forward(comp, x2d)
    return np.asarray(comp(x2d), dtype=np.float64)


def forward_batch(
    model: EquivariantReyNet, flat_x: np.ndarray, count: list[int] | None = None
) -> np.ndarray:
    """(batch, n^order_in * channels_in) -> (batch, n^order_out, channels_out).

    `count`, when given, accumulates the number of component evaluations.
    """
    b_out = model.channels_out
    batch = flat_x.shape[0]
    y = np.empty((batch, model.n**model.order_out, b_out))
    for plan in _plan_for(model):
        gathered = flat_x[:, plan.gather]
        size = plan.design_size
        flat_in = gathered.reshape(batch * size, -1)
        scale = 1.0 / model.depth_divisors[plan.depth]
        for ti, tab in enumerate(plan.tableaux):
            v = _eval_component(model.components[tab], flat_in)
            if count is not None:
                count[0] += batch * size
            y[:, plan.rows[ti], :] = v.reshape(batch, size, b_out) * scale
    return y


def forward_batch_cached(model: EquivariantReyNet, flat_x: np.ndarray):
    """Forward keeping per-component activations for one backward pass."""
    b_out = model.channels_out
    batch = flat_x.shape[0]
    y = np.empty((batch, model.n**model.order_out, b_out))
    caches = []
    for plan in _plan_for(model):
        gathered = flat_x[:, plan.gather]
        size = plan.design_size
        flat_in = gathered.reshape(batch * size, -1)
        scale = 1.0 / model.depth_divisors[plan.depth]
        acts_by_tab = {}
        for ti, tab in enumerate(plan.tableaux):
            comp = model.components[tab]
            if not isinstance(comp, MLPParams):
                raise TypeError("backward pass needs trainable components")
            v, acts = mlp_forward_cached(comp, flat_in)
            acts_by_tab[tab] = acts
            y[:, plan.rows[ti], :] = v.reshape(batch, size, b_out) * scale
        caches.append((plan, acts_by_tab))
    return y, caches


def backward_from_cache(
    model: EquivariantReyNet, caches, upstream: np.ndarray
) -> dict[BasisTableau, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Parameter gradients of sum(upstream * forward) per component."""
    batch = upstream.shape[0]
    grads = {}
    for plan, acts_by_tab in caches:
        size = plan.design_size
        scale = 1.0 / model.depth_divisors[plan.depth]
        for ti, tab in enumerate(plan.tableaux):
            up = upstream[:, plan.rows[ti], :] * scale
            dw, db, _ = mlp_backward(
                model.components[tab], acts_by_tab[tab], up.reshape(batch * size, -1)
            )
            grads[tab] = (dw, db)
    return grads


def equivariant_forward(model: EquivariantReyNet, x: DenseTensor) -> DenseTensor:
    if (x.n, x.order, x.channels) != (model.n, model.order_in, model.channels_in):
        raise ValueError("input tensor does not match the model signature")
    y = forward_batch(model, x.data.reshape(1, -1))[0]
    return DenseTensor(
        model.n,
        model.order_out,
        model.channels_out,
        y.reshape((model.n,) * model.order_out + (model.channels_out,)),
    )


def model_backward(
    model: EquivariantReyNet, x: DenseTensor, upstream: DenseTensor
) -> dict[BasisTableau, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Single-sample parameter gradients of sum(upstream * forward(x))."""
    _, caches = forward_batch_cached(model, x.data.reshape(1, -1))
    flat_up = upstream.data.reshape(1, -1, model.channels_out)
    return backward_from_cache(model, caches, flat_up)


def corner_forward_batch(model: EquivariantReyNet, flat_x: np.ndarray):
    """Representative entries only: (batch, census, channels_out).

    The identity is the one design element scattering onto a representative
    row, and it sits first in design order, so each component is evaluated
    once on the unpermuted gather.
    """
    if model.n < model.order_out:
        raise ValueError("corner entries need n >= output order")
    cols = []
    for plan in _plan_for(model):
        gathered = flat_x[:, plan.gather[0]]
        scale = 1.0 / model.depth_divisors[plan.depth]
        for tab in plan.tableaux:
            v = _eval_component(model.components[tab], gathered)
            cols.append(v * scale)
    return np.stack(cols, axis=1)


def corner_forward_batch_cached(model: EquivariantReyNet, flat_x: np.ndarray):
    cols, caches = [], []
    for plan in _plan_for(model):
        gathered = flat_x[:, plan.gather[0]]
        scale = 1.0 / model.depth_divisors[plan.depth]
        acts_by_tab = {}
        for tab in plan.tableaux:
            comp = model.components[tab]
            if not isinstance(comp, MLPParams):
                raise TypeError("backward pass needs trainable components")
            v, acts = mlp_forward_cached(comp, gathered)
            acts_by_tab[tab] = acts
            cols.append(v * scale)
        caches.append((plan, acts_by_tab))
    return np.stack(cols, axis=1), caches


def corner_backward_from_cache(model: EquivariantReyNet, caches, upstream: np.ndarray):
    """Gradients for the representative-entry forward; upstream (batch, census, b)."""
    grads = {}
    col = 0
    for plan, acts_by_tab in caches:
        scale = 1.0 / model.depth_divisors[plan.depth]
        for tab in plan.tableaux:
            up = upstream[:, col, :] * scale
            dw, db, _ = mlp_backward(model.components[tab], acts_by_tab[tab], up)
            grads[tab] = (dw, db)
            col += 1
    return grads


def transfer_n(model: EquivariantReyNet, n_new: int) -> EquivariantReyNet:
    """Re-enumerate designs at a new size, keeping parameters and divisors.

    Only reduced models transfer; a full gather's input width is tied to n.
    """
    if model.reduced is None:
        raise ValueError("only reduced models transfer across sizes")
    if n_new < model.order_out:
        raise ValueError(f"need n >= {model.order_out}, got {n_new}")
    top = max(max(c) for c in model.reduced.coords)
    if top > n_new:
        raise ValueError(f"reduced coordinate index {top} exceeds n={n_new}")
    return EquivariantReyNet(
        n_new,
        model.order_in,
        model.channels_in,
        model.order_out,
        model.channels_out,
        {tab: copy.deepcopy(comp) for tab, comp in model.components.items()},
        model.reduced,
        dict(model.depth_divisors),
    )


@dataclass
class InvariantReyNet:
    body: EquivariantReyNet
    pooling: str
    head: MLPParams


def pooled_width(order_out: int, channels_out: int, pooling: str) -> int:
    if pooling == "orbit_sum":
        return len(all_basis_tableaux(order_out)) * channels_out
    if pooling == "max_diag_offdiag":
        if order_out != 2:
            raise ValueError("max_diag_offdiag pooling needs an order-2 body")
        return 2 * channels_out
    raise ValueError(f"unknown pooling {pooling!r}, expected one of {POOLINGS}")


def build_invariant(
    seed: int,
    n: int,
    order_in: int,
    channels_in: int,
    body_order: int,
    body_channels: int,
    out_dim: int,
    widths: tuple[int, ...] = (128, 128),
    reduced: ReducedSpec | None = None,
    pooling: str = "max_diag_offdiag",
) -> InvariantReyNet:
    body = build_equivariant(
        seed, n, order_in, channels_in, body_order, body_channels, widths, reduced
    )
    width = pooled_width(body_order, body_channels, pooling)
    head = init_params(CounterRng(seed).split(10_000).key, (width,) + tuple(widths) + (out_dim,))
    return InvariantReyNet(body, pooling, head)


@lru_cache(maxsize=None)
def _orbit_matrix(n: int, m: int) -> np.ndarray:
    """(census, n^m) weights: stabilizer size on orbit members, else zero."""
    from .tensors import orbit_plan

    tableaux, orbit_of, weights = orbit_plan(n, m)
    mat = np.zeros((len(tableaux), n**m))
    mat[orbit_of, np.arange(n**m)] = weights[orbit_of]
    return mat


def _pool_forward(model: InvariantReyNet, y: np.ndarray):
    """(batch, n^m, b) -> (batch, width), plus what backward needs."""
    body = model.body
    batch, _, b = y.shape
    if model.pooling == "orbit_sum":
        mat = _orbit_matrix(body.n, body.order_out)
        pooled = np.einsum("kr,brc->bkc", mat, y)
        return pooled.reshape(batch, -1), ("orbit_sum", mat)
    n = body.n
    grid = y.reshape(batch, n, n, b)
    diag = grid[:, np.arange(n), np.arange(n), :]
    off = np.where(np.eye(n, dtype=bool)[None, :, :, None], -np.inf, grid).reshape(
        batch, n * n, b
    )
    diag_arg = np.argmax(diag, axis=1)
    off_arg = np.argmax(off, axis=1)
    feats = np.concatenate(
        [np.take_along_axis(diag, diag_arg[:, None, :], axis=1)[:, 0, :],
         np.take_along_axis(off, off_arg[:, None, :], axis=1)[:, 0, :]],
        axis=1,
    )
    return feats, ("max", diag_arg, off_arg)


def _pool_backward(model: InvariantReyNet, cache, dfeats: np.ndarray) -> np.ndarray:
    body = model.body
    n = body.n
    b = body.channels_out
    batch = dfeats.shape[0]
    if cache[0] == "orbit_sum":
        mat = cache[1]
        dpool = dfeats.reshape(batch, mat.shape[0], b)
        return np.einsum("kr,bkc->brc", mat, dpool)
    _, diag_arg, off_arg = cache
    dy = np.zeros((batch, n * n, b))
    d_diag = dfeats[:, :b]
    d_off = dfeats[:, b:]
    bi = np.arange(batch)[:, None]
    ci = np.arange(b)[None, :]
    diag_rows = diag_arg * (n + 1)
    np.add.at(dy, (bi, diag_rows, ci), d_diag)
    np.add.at(dy, (bi, off_arg, ci), d_off)
    return dy


def invariant_forward_batch(model: InvariantReyNet, flat_x: np.ndarray) -> np.ndarray:
    y = forward_batch(model.body, flat_x)
    feats, _ = _pool_forward(model, y)
    return mlp_forward(model.head, feats)


def invariant_forward(model: InvariantReyNet, x: DenseTensor) -> np.ndarray:
    body = model.body
    if (x.n, x.order, x.channels) != (body.n, body.order_in, body.channels_in):
        raise ValueError("input tensor does not match the model signature")
    return invariant_forward_batch(model, x.data.reshape(1, -1))[0]


def invariant_forward_batch_cached(model: InvariantReyNet, flat_x: np.ndarray):
    y, body_caches = forward_batch_cached(model.body, flat_x)
    feats, pool_cache = _pool_forward(model, y)
    out, head_acts = mlp_forward_cached(model.head, feats)
    return out, (body_caches, pool_cache, head_acts)


def invariant_backward_from_cache(model: InvariantReyNet, caches, upstream: np.ndarray):
    body_caches, pool_cache, head_acts = caches
    dw_head, db_head, dfeats = mlp_backward(model.head, head_acts, upstream)
    dy = _pool_backward(model, pool_cache, dfeats)
    body_grads = backward_from_cache(model.body, body_caches, dy)
    return body_grads, (dw_head, db_head)


def transfer_invariant(model: InvariantReyNet, n_new: int) -> InvariantReyNet:
    return InvariantReyNet(
        transfer_n(model.body, n_new), model.pooling, copy.deepcopy(model.head)
    )


@dataclass
class FlatNet:
    """Plain MLP on the flattened tensor; the non-equivariant baseline."""

    n: int
    order_in: int
    channels_in: int
    order_out: int | None
    channels_out: int
    params: MLPParams


def build_flat(
    seed: int,
    n: int,
    order_in: int,
    channels_in: int,
    order_out: int | None,
    channels_out: int,
    widths: tuple[int, ...] = (128, 128),
) -> FlatNet:
    d_in = n**order_in * channels_in
    d_out = channels_out if order_out is None else n**order_out * channels_out
    params = init_params(seed, (d_in,) + tuple(widths) + (d_out,))
    return FlatNet(n, order_in, channels_in, order_out, channels_out, params)


def flat_forward(model: FlatNet, x: DenseTensor):
    if (x.n, x.order, x.channels) != (model.n, model.order_in, model.channels_in):
        raise ValueError("input tensor does not match the model signature")
    out = mlp_forward(model.params, x.data.reshape(-1))
    if model.order_out is None:
        return out
    return DenseTensor(
        model.n,
        model.order_out,
        model.channels_out,
        out.reshape((model.n,) * model.order_out + (model.channels_out,)),
    )
