"""Generators built around linear subspace models.

Two shapes of generator share one calling convention:

* ``LinearEigenModel``: x = U diag(L) z + mu + sigma * eps. One subspace over
  the observation space plus learned isotropic noise.
* ``LayeredEigenModel``: a stack of expanding affine maps with leaky-relu
  between them; at every depth a subspace sample is transformed and added to
  the features before the next map. The base feature vector comes from an
  affine map of the input noise, the last map has no nonlinearity.

Both expose ``latent_dims`` (coordinate count per layer), ``noise_dim``,
``forward(zs, eps)`` on plain arrays for evaluation, ``forward_node`` for the
training graph, and ``parameters()`` as an ordered (name, node) list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ContractError, ShapeError
from .subspace import SubspaceModel, init_subspace, sample_batch, sample_batch_node

__all__ = [
    "LinearEigenModel", "LayerMap", "LayeredEigenModel",
    "init_linear_model", "init_layered_model", "linear_forward",
    "layered_forward", "traverse", "ablate_subspaces", "copy_model",
    "DEFAULT_WIDTHS",
]

DEFAULT_WIDTHS = (4, 8, 16)


@dataclass
class LinearEigenModel:
    subspace: SubspaceModel
    log_sigma: Node  # noise scale kept in log domain so sigma stays positive

    @property
    def data_dim(self) -> int:
        return self.subspace.d

    @property
    def noise_dim(self) -> int:
        return self.subspace.d

    @property
    def latent_dims(self):
        return [self.subspace.q]

    def sigma(self) -> float:
        return float(np.exp(self.log_sigma.value[0, 0]))

    def subspaces(self):
        return [self.subspace]

    def parameters(self):
        return self.subspace.parameters() + [("log_sigma", self.log_sigma)]

    def forward(self, zs, eps) -> np.ndarray:
        Z, E = _check_inputs(self, zs, eps)
        return sample_batch(self.subspace, Z) + np.exp(self.log_sigma.value[0, 0]) * E

    def forward_node(self, zs, eps) -> Node:
        Z, E = _check_inputs(self, zs, eps)
        noise = ad.hadamard(ad.exp(self.log_sigma), ad.const(E))
        return ad.add(sample_batch_node(self.subspace, Z), noise)


@dataclass
class LayerMap:
    """One expanding stage: weight (d_out x d_in), bias (1 x d_out), and the
    square transform applied to the subspace sample before injection."""

    weight: Node
    bias: Node
    activation: str  # "leaky_relu" | "identity"
    f_transform: Optional[Node]

    def __post_init__(self):
        d_out, d_in = self.weight.value.shape
        if d_out < d_in:
            raise ContractError(f"layer must not contract: {d_in} -> {d_out}")
        if self.bias.value.shape != (1, d_out):
            raise ShapeError(f"bias must be (1, {d_out})")
        if self.f_transform is not None and self.f_transform.value.shape != (d_in, d_in):
            raise ShapeError(f"f_transform must be ({d_in}, {d_in})")
        if self.activation not in ("leaky_relu", "identity"):
            raise ContractError(f"unknown activation {self.activation!r}")


@dataclass
class LayeredEigenModel:
    layers: list  # (SubspaceModel | None, LayerMap) pairs, bottom to top
    bottom_weight: Node
    bottom_bias: Node
    noise_dim: int
    latent_dims: list

    @property
    def t(self) -> int:
        return len(self.layers)

    @property
    def data_dim(self) -> int:
        return self.layers[-1][1].weight.value.shape[0]

    def subspaces(self):
        return [s for s, _ in self.layers if s is not None]

    def parameters(self):
        out = [("bottom.weight", self.bottom_weight), ("bottom.bias", self.bottom_bias)]
        for i, (s, lm) in enumerate(self.layers, start=1):
            if s is not None:
                out.extend(s.parameters(prefix=f"layer{i}."))
            if lm.f_transform is not None:
                out.append((f"layer{i}.f_transform", lm.f_transform))
            out.append((f"layer{i}.weight", lm.weight))
            out.append((f"layer{i}.bias", lm.bias))
        return out

    def forward(self, zs, eps) -> np.ndarray:
        Zs, E = _check_inputs(self, zs, eps)
        h = E @ self.bottom_weight.value.T + self.bottom_bias.value
        for (s, lm), Z in zip(self.layers, Zs):
            h = h + _injection_values(s, lm, Z)
            h = h @ lm.weight.value.T + lm.bias.value
            if lm.activation == "leaky_relu":
                h = np.where(h >= 0.0, h, ad.LEAKY_RELU_ALPHA * h)
        return h

    def forward_node(self, zs, eps) -> Node:
        Zs, E = _check_inputs(self, zs, eps)
        h = ad.add(ad.matmul(ad.const(E), ad.transpose(self.bottom_weight)),
                   self.bottom_bias)
        for (s, lm), Z in zip(self.layers, Zs):
            if s is not None:
                inj = ad.matmul(sample_batch_node(s, Z), ad.transpose(lm.f_transform))
            else:
                inj = ad.const(_zero_pad(Z, lm.weight.value.shape[1]))
            h = ad.add(ad.matmul(ad.add(h, inj), ad.transpose(lm.weight)), lm.bias)
            if lm.activation == "leaky_relu":
                h = ad.leaky_relu(h)
        return h


def _injection_values(s, lm, Z):
    if s is None:
        return _zero_pad(Z, lm.weight.value.shape[1])
    return sample_batch(s, Z) @ lm.f_transform.value.T


def _zero_pad(Z, width):
    out = np.zeros((Z.shape[0], width))
    out[:, : Z.shape[1]] = Z
    return out


def _check_inputs(model, zs, eps):
    """Normalize (zs, eps) to batch arrays and verify every dimension."""
    dims = model.latent_dims
    if isinstance(zs, np.ndarray) and len(dims) == 1:
        zs = [zs]
    if len(zs) != len(dims):
        raise ShapeError(f"expected {len(dims)} latent blocks, got {len(zs)}")
    E = np.asarray(eps, dtype=np.float64)
    single = E.ndim == 1
    if single:
        E = E[None, :]
    if E.ndim != 2 or E.shape[1] != model.noise_dim:
        raise ShapeError(f"eps must have width {model.noise_dim}, got {E.shape}")
    Zs = []
    for k, (z, q) in enumerate(zip(zs, dims)):
        Z = np.asarray(z, dtype=np.float64)
        if single and Z.ndim == 1:
            Z = Z[None, :]
        if Z.ndim != 2 or Z.shape[1] != q or Z.shape[0] != E.shape[0]:
            raise ShapeError(f"latent block {k} must be ({E.shape[0]}, {q}), got {Z.shape}")
        Zs.append(Z)
    if isinstance(model, LinearEigenModel):
        return Zs[0], E
    return Zs, E


def init_linear_model(d: int, q: int, rng) -> LinearEigenModel:
    return LinearEigenModel(
        subspace=init_subspace(d, q, rng),
        log_sigma=ad.param(np.zeros((1, 1))),
    )


def init_layered_model(data_dim: int, q: int = 2, widths=DEFAULT_WIDTHS,
                       noise_dim: int = 4, rng=None) -> LayeredEigenModel:
    """Default stack: noise_dim -> widths[0] -> ... -> widths[-1] -> data_dim,
    one q-dimensional subspace injected at every hidden width."""
    rng = np.random.default_rng() if rng is None else rng
    if data_dim < widths[-1]:
        raise ContractError(f"data dim {data_dim} below final width {widths[-1]}")
    layers = []
    dims = list(widths) + [data_dim]
    for i in range(len(widths)):
        d_in, d_out = dims[i], dims[i + 1]
        if q > d_in:
            raise ContractError(f"q={q} exceeds layer width {d_in}")
        sub = init_subspace(d_in, q, rng)
        lm = LayerMap(
            weight=ad.param(rng.standard_normal((d_out, d_in)) * np.sqrt(2.0 / d_in)),
            bias=ad.param(np.zeros((1, d_out))),
            activation="identity" if i == len(widths) - 1 else "leaky_relu",
            f_transform=ad.param(np.eye(d_in)),
        )
        layers.append((sub, lm))
    return LayeredEigenModel(
        layers=layers,
        bottom_weight=ad.param(rng.standard_normal((widths[0], noise_dim))
                               * np.sqrt(1.0 / noise_dim)),
        bottom_bias=ad.param(np.zeros((1, widths[0]))),
        noise_dim=noise_dim,
        latent_dims=[q] * len(widths),
    )


def linear_forward(m: LinearEigenModel, z, eps) -> np.ndarray:
    """Single-sample forward of the linear model, plain arrays in and out."""
    z = np.asarray(z, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if z.ndim != 1 or eps.ndim != 1:
        raise ShapeError("linear_forward takes single vectors")
    return m.forward(z[None, :], eps[None, :])[0]


def layered_forward(m: LayeredEigenModel, zs, eps) -> np.ndarray:
    """Single-sample forward of the layered model."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 1:
        raise ShapeError("layered_forward takes a single noise vector")
    return m.forward([np.asarray(z, dtype=np.float64)[None, :] for z in zs],
                     eps[None, :])[0]


def traverse(m, layer: int, dim: int, grid, zs=None, eps=None, seed=0):
    """Sweep one latent coordinate over grid values, all else frozen.

    layer and dim are 1-based. Frozen latents are taken from zs/eps when
    given, otherwise drawn once from seed. Returns one output vector per
    grid value.
    """
    dims = m.latent_dims
    if not 1 <= layer <= len(dims):
        raise ContractError(f"layer {layer} out of range 1..{len(dims)}")
    if not 1 <= dim <= dims[layer - 1]:
        raise ContractError(f"dim {dim} out of range 1..{dims[layer - 1]}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ContractError("grid must be a nonempty finite 1-D sequence")

    rng = np.random.default_rng(seed)
    if zs is None:
        zs = [rng.standard_normal(q) for q in dims]
    else:
        zs = [np.array(z, dtype=np.float64) for z in zs]
    if eps is None:
        eps = rng.standard_normal(m.noise_dim)

    outputs = []
    for g in grid:
        zs[layer - 1][dim - 1] = g
        Zs = [z[None, :] for z in zs]
        outputs.append(m.forward(Zs if len(dims) > 1 else Zs[0],
                                 np.asarray(eps)[None, :])[0])
    return outputs


def ablate_subspaces(m: LayeredEigenModel) -> LayeredEigenModel:
    """Counterpart model that adds zero-padded z straight to the features.

    Drops every subspace and injection transform; weights and biases are
    copied, not shared, so the two models train independently.
    """
    layers = []
    for _, lm in m.layers:
        layers.append((None, LayerMap(
            weight=ad.param(lm.weight.value.copy()),
            bias=ad.param(lm.bias.value.copy()),
            activation=lm.activation,
            f_transform=None,
        )))
    return LayeredEigenModel(
        layers=layers,
        bottom_weight=ad.param(m.bottom_weight.value.copy()),
        bottom_bias=ad.param(m.bottom_bias.value.copy()),
        noise_dim=m.noise_dim,
        latent_dims=list(m.latent_dims),
    )


def copy_model(m):
    """Structural deep copy with fresh parameter nodes (used for the EMA twin)."""
    if isinstance(m, LinearEigenModel):
        s = m.subspace
        sub = SubspaceModel(U=ad.param(s.U.value.copy()), L=ad.param(s.L.value.copy()),
                            mu=ad.param(s.mu.value.copy()), d=s.d, q=s.q)
        return LinearEigenModel(subspace=sub, log_sigma=ad.param(m.log_sigma.value.copy()))
    layers = []
    for s, lm in m.layers:
        sub = None
        if s is not None:
            sub = SubspaceModel(U=ad.param(s.U.value.copy()), L=ad.param(s.L.value.copy()),
                                mu=ad.param(s.mu.value.copy()), d=s.d, q=s.q)
        layers.append((sub, LayerMap(
            weight=ad.param(lm.weight.value.copy()),
            bias=ad.param(lm.bias.value.copy()),
            activation=lm.activation,
            f_transform=None if lm.f_transform is None
            else ad.param(lm.f_transform.value.copy()),
        )))
    return LayeredEigenModel(
        layers=layers,
        bottom_weight=ad.param(m.bottom_weight.value.copy()),
        bottom_bias=ad.param(m.bottom_bias.value.copy()),
        noise_dim=m.noise_dim,
        latent_dims=list(m.latent_dims),
    )
