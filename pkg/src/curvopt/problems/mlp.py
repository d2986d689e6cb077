"""
Small fully connected networks as finite-sum objectives.

Parameter layout: for each layer in order, the weight matrix W (fan_in x
fan_out, row-major) followed by the bias b (fan_out). Per-sample losses are

- squared:                1/2 ||a_L - t||^2
- sigmoid_cross_entropy:  sum_k BCE(sigmoid(z_L)_k, t_k)   (logits z_L)
- softmax_cross_entropy:  -log softmax(z_L)_{t}            (class index t)

The cross-entropy losses act on the output pre-activation, so the last
layer's activation must be `identity` for them.

Hessian-vector products use the R-operator: one extra forward pass for the
directional derivatives of the activations, one extra backward pass for the
directional derivative of the gradient. The Gauss-Newton product J^T H_out J v
shares the forward R pass and back-propagates H_out R{output} linearly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy.special import expit, log_expit, logsumexp, softmax

from .._forward_cache import ForwardCache
from ..errors import DimensionMismatchError
from ..oracle import BatchSpec, FiniteSumOracle, ParamVector, as_param_vector


class Activation(str, Enum):
    LOGISTIC = "logistic"
    TANH = "tanh"
    IDENTITY = "identity"


class LossKind(str, Enum):
    SOFTMAX_CROSS_ENTROPY = "softmax_cross_entropy"
    SIGMOID_CROSS_ENTROPY = "sigmoid_cross_entropy"
    SQUARED = "squared"


def _activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.LOGISTIC:
        return expit(z)
    if kind is Activation.TANH:
        return np.tanh(z)
    return z


def _derivatives(kind: Activation, a: np.ndarray) -> tuple[np.ndarray | float, np.ndarray | float]:
    """First and second derivative of the activation, expressed through its output."""
    if kind is Activation.LOGISTIC:
        d1 = a * (1.0 - a)
        return d1, d1 * (1.0 - 2.0 * a)
    if kind is Activation.TANH:
        d1 = 1.0 - a * a
        return d1, -2.0 * a * d1
    return 1.0, 0.0


@dataclass(frozen=True, slots=True)
class MLPSpec:
    layer_sizes: tuple[int, ...]
    activations: tuple[Activation, ...]
    loss: LossKind = LossKind.SQUARED

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        object.__setattr__(self, "activations", tuple(Activation(a) for a in self.activations))
        object.__setattr__(self, "loss", LossKind(self.loss))
        if len(self.layer_sizes) < 2 or any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer_sizes needs at least two positive entries")
        if len(self.activations) != len(self.layer_sizes) - 1:
            raise ValueError("one activation per non-input layer is required")
        if self.loss is not LossKind.SQUARED and self.activations[-1] is not Activation.IDENTITY:
            raise ValueError(f"{self.loss.value} acts on logits; the last activation must be identity")

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    @property
    def num_params(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.shapes)

    def unflatten(self, params: Any) -> list[tuple[np.ndarray, np.ndarray]]:
        """Views (W, b) per layer into the flat vector."""
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.num_params,):
            raise DimensionMismatchError("params", self.num_params, params.shape)
        layers = []
        offset = 0
        for fan_in, fan_out in self.shapes:
            W = params[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = params[offset : offset + fan_out]
            offset += fan_out
            layers.append((W, b))
        return layers

    def flatten(self, layers: list[tuple[np.ndarray, np.ndarray]]) -> ParamVector:
        if len(layers) != len(self.shapes):
            raise DimensionMismatchError("layers", len(self.shapes), len(layers))
        parts = []
        for (W, b), (fan_in, fan_out) in zip(layers, self.shapes):
            if np.shape(W) != (fan_in, fan_out) or np.shape(b) != (fan_out,):
                raise DimensionMismatchError("layer", (fan_in, fan_out), np.shape(W))
            parts.append(np.asarray(W, dtype=np.float64).ravel())
            parts.append(np.asarray(b, dtype=np.float64))
        return np.concatenate(parts)


@dataclass(frozen=True, slots=True, eq=False)
class DatasetInMemory:
    """Inputs (n x d0) and targets: class indices (n,) or a target matrix (n x d_L)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    def check(self, spec: MLPSpec) -> None:
        n, d0 = self.inputs.shape
        if d0 != spec.layer_sizes[0]:
            raise DimensionMismatchError("inputs", spec.layer_sizes[0], d0)
        out = spec.layer_sizes[-1]
        t = self.targets
        if t.shape[0] != n:
            raise DimensionMismatchError("targets", n, t.shape[0])
        if spec.loss is LossKind.SOFTMAX_CROSS_ENTROPY:
            if t.ndim != 1 or np.any(t < 0) or np.any(t >= out) or np.any(t != np.round(t)):
                raise ValueError(f"softmax targets must be class indices in [0, {out})")
        elif t.ndim == 1 and out == 1:
            pass
        elif t.ndim != 2 or t.shape[1] != out:
            raise DimensionMismatchError("targets", (n, out), t.shape)


@dataclass(slots=True)
class ForwardPass:
    """Per-layer pre-activations zs[l] and outputs acts[l] (acts[0] = inputs)."""

    zs: list[np.ndarray]
    acts: list[np.ndarray]


# ============================================================================
# Pure kernels (weights w_j multiply per-sample terms)
# ============================================================================


def forward_pass(spec: MLPSpec, layers: list[tuple[np.ndarray, np.ndarray]], X: np.ndarray) -> ForwardPass:
    acts = [X]
    zs: list[np.ndarray] = []
    for (W, b), act in zip(layers, spec.activations):
        z = acts[-1] @ W + b
        zs.append(z)
        acts.append(_activate(act, z))
    return ForwardPass(zs, acts)


def _target_matrix(spec: MLPSpec, T: np.ndarray) -> np.ndarray:
    if spec.loss is LossKind.SOFTMAX_CROSS_ENTROPY:
        onehot = np.zeros((T.shape[0], spec.layer_sizes[-1]))
        onehot[np.arange(T.shape[0]), T.astype(np.intp)] = 1.0
        return onehot
    return T.reshape(T.shape[0], -1)


def per_sample_loss(spec: MLPSpec, fp: ForwardPass, T: np.ndarray) -> np.ndarray:
    if spec.loss is LossKind.SQUARED:
        diff = fp.acts[-1] - _target_matrix(spec, T)
        return 0.5 * np.sum(diff * diff, axis=1)
    z = fp.zs[-1]
    if spec.loss is LossKind.SIGMOID_CROSS_ENTROPY:
        t = _target_matrix(spec, T)
        return -np.sum(t * log_expit(z) + (1.0 - t) * log_expit(-z), axis=1)
    labels = T.astype(np.intp)
    return logsumexp(z, axis=1) - z[np.arange(z.shape[0]), labels]


def _output_delta(spec: MLPSpec, fp: ForwardPass, T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(dloss/da_L, dloss/dz_L) for each sample."""
    t = _target_matrix(spec, T)
    if spec.loss is LossKind.SQUARED:
        g_out = fp.acts[-1] - t
        d1, _ = _derivatives(spec.activations[-1], fp.acts[-1])
        return g_out, g_out * d1
    z = fp.zs[-1]
    if spec.loss is LossKind.SIGMOID_CROSS_ENTROPY:
        delta = expit(z) - t
    else:
        delta = softmax(z, axis=1) - t
    return delta, delta


def _output_curvature(spec: MLPSpec, fp: ForwardPass, rz: np.ndarray) -> np.ndarray:
    """H_out applied to the directional derivative of the logits (CE losses)."""
    z = fp.zs[-1]
    if spec.loss is LossKind.SIGMOID_CROSS_ENTROPY:
        p = expit(z)
        return p * (1.0 - p) * rz
    p = softmax(z, axis=1)
    return p * rz - p * np.sum(p * rz, axis=1, keepdims=True)


def _accumulate(
    layers: list[tuple[np.ndarray, np.ndarray]],
    deltas: list[np.ndarray],
    inputs: list[np.ndarray],
) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(a.T @ d, d.sum(axis=0)) for a, d in zip(inputs, deltas)]


def backward_pass(
    spec: MLPSpec,
    layers: list[tuple[np.ndarray, np.ndarray]],
    fp: ForwardPass,
    T: np.ndarray,
    w: np.ndarray,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradient of sum_j w_j l_j by back-propagation."""
    _, delta = _output_delta(spec, fp, T)
    delta = delta * w[:, None]
    deltas = [delta]
    for l in range(len(layers) - 1, 0, -1):
        d1, _ = _derivatives(spec.activations[l - 1], fp.acts[l])
        delta = (delta @ layers[l][0].T) * d1
        deltas.append(delta)
    deltas.reverse()
    return _accumulate(layers, deltas, fp.acts[:-1])


def _r_forward(
    spec: MLPSpec,
    layers: list[tuple[np.ndarray, np.ndarray]],
    direction: list[tuple[np.ndarray, np.ndarray]],
    fp: ForwardPass,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """R{z_l} and R{a_l} for the direction (VW, Vb)."""
    r_acts = [np.zeros_like(fp.acts[0])]
    r_zs: list[np.ndarray] = []
    for l, ((W, _), (VW, Vb), act) in enumerate(zip(layers, direction, spec.activations)):
        rz = r_acts[-1] @ W + fp.acts[l] @ VW + Vb
        d1, _ = _derivatives(act, fp.acts[l + 1])
        r_zs.append(rz)
        r_acts.append(d1 * rz)
    return r_zs, r_acts


def r_op_pass(
    spec: MLPSpec,
    layers: list[tuple[np.ndarray, np.ndarray]],
    direction: list[tuple[np.ndarray, np.ndarray]],
    fp: ForwardPass,
    T: np.ndarray,
    w: np.ndarray,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact Hessian-vector product of sum_j w_j l_j (Pearlmutter's R-operator)."""
    r_zs, r_acts = _r_forward(spec, layers, direction, fp)
    L = len(layers)
    g_out, delta = _output_delta(spec, fp, T)
    if spec.loss is LossKind.SQUARED:
        d1, d2 = _derivatives(spec.activations[-1], fp.acts[-1])
        r_delta = r_acts[-1] * d1 + g_out * d2 * r_zs[-1]
    else:
        r_delta = _output_curvature(spec, fp, r_zs[-1])

    wcol = w[:, None]
    deltas = [delta * wcol]
    r_deltas = [r_delta * wcol]
    for l in range(L - 1, 0, -1):
        W, _ = layers[l]
        VW, _ = direction[l]
        d1, d2 = _derivatives(spec.activations[l - 1], fp.acts[l])
        g_hidden = delta @ W.T
        r_g_hidden = r_delta @ W.T + delta @ VW.T
        r_delta = r_g_hidden * d1 + g_hidden * d2 * r_zs[l - 1]
        delta = g_hidden * d1
        deltas.append(delta * wcol)
        r_deltas.append(r_delta * wcol)
    deltas.reverse()
    r_deltas.reverse()

    out = []
    for l in range(L):
        a_prev, r_a_prev = fp.acts[l], r_acts[l]
        out.append((r_a_prev.T @ deltas[l] + a_prev.T @ r_deltas[l], r_deltas[l].sum(axis=0)))
    return out


def ggn_pass(
    spec: MLPSpec,
    layers: list[tuple[np.ndarray, np.ndarray]],
    direction: list[tuple[np.ndarray, np.ndarray]],
    fp: ForwardPass,
    w: np.ndarray,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """J^T H_out J v, with J the Jacobian of a_L (squared) or z_L (cross-entropy)."""
    r_zs, r_acts = _r_forward(spec, layers, direction, fp)
    if spec.loss is LossKind.SQUARED:
        d1, _ = _derivatives(spec.activations[-1], fp.acts[-1])
        delta = r_acts[-1] * d1
    else:
        delta = _output_curvature(spec, fp, r_zs[-1])
    delta = delta * w[:, None]
    deltas = [delta]
    for l in range(len(layers) - 1, 0, -1):
        d1, _ = _derivatives(spec.activations[l - 1], fp.acts[l])
        delta = (delta @ layers[l][0].T) * d1
        deltas.append(delta)
    deltas.reverse()
    return _accumulate(layers, deltas, fp.acts[:-1])


# ============================================================================
# Oracle
# ============================================================================


class MLPProblem(FiniteSumOracle):
    def __init__(
        self,
        spec: MLPSpec,
        data: DatasetInMemory,
        *,
        chunk_size: int = 1024,
        workers: int | None = None,
        cache_capacity: int = 32,
    ):
        data.check(spec)
        super().__init__(len(data), spec.num_params, chunk_size=chunk_size, workers=workers)
        self.spec = spec
        self.data = data
        self._cache = ForwardCache(cache_capacity)

    def _forward(self, x: ParamVector, idx: np.ndarray) -> tuple[list, ForwardPass]:
        # Only computed activations are cached; layers are views into the caller's x.
        layers = self.spec.unflatten(x)
        key = ForwardCache.make_key(x, idx)
        fp = self._cache.get_or_compute(key, lambda: forward_pass(self.spec, layers, self.data.inputs[idx]))
        return layers, fp

    def _loss_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> float:
        _, fp = self._forward(x, idx)
        return float(w @ per_sample_loss(self.spec, fp, self.data.targets[idx]))

    def _grad_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        layers, fp = self._forward(x, idx)
        return self.spec.flatten(backward_pass(self.spec, layers, fp, self.data.targets[idx], w))

    def _hvp_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        layers, fp = self._forward(x, idx)
        direction = self.spec.unflatten(v)
        return self.spec.flatten(r_op_pass(self.spec, layers, direction, fp, self.data.targets[idx], w))

    def _ggn_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        layers, fp = self._forward(x, idx)
        direction = self.spec.unflatten(v)
        return self.spec.flatten(ggn_pass(self.spec, layers, direction, fp, w))

    def predict(self, x: Any, inputs: np.ndarray | None = None) -> np.ndarray:
        layers = self.spec.unflatten(as_param_vector(x, self.dim))
        fp = forward_pass(self.spec, layers, self.data.inputs if inputs is None else inputs)
        return fp.zs[-1] if self.spec.loss is not LossKind.SQUARED else fp.acts[-1]

    def error_rate(self, x: Any) -> float | None:
        """Classification error; None for reconstruction (squared) objectives."""
        if self.spec.loss is LossKind.SQUARED:
            return None
        out = self.predict(x)
        t = self.data.targets
        if self.spec.loss is LossKind.SOFTMAX_CROSS_ENTROPY:
            return float(np.mean(np.argmax(out, axis=1) != t))
        pred = (out >= 0.0).astype(np.float64)
        return float(np.mean(pred != t.reshape(pred.shape)))


def mlp_forward(problem: MLPProblem, params: Any, batch: BatchSpec | None = None) -> tuple[float, ForwardPass]:
    """Batch loss and the activations of one forward pass over the batch."""
    loss = problem.loss(params, batch)
    idx = batch.indices if batch is not None else np.arange(problem.n)
    _, fp = problem._forward(as_param_vector(params, problem.dim), idx)
    return loss, fp


def mlp_grad(problem: MLPProblem, params: Any, batch: BatchSpec | None = None) -> ParamVector:
    return problem.grad(params, batch)


def mlp_hvp(problem: MLPProblem, params: Any, v: Any, batch: BatchSpec | None = None) -> ParamVector:
    return problem.hvp(params, v, batch)


def mlp_ggn_vp(problem: MLPProblem, params: Any, v: Any, batch: BatchSpec | None = None) -> ParamVector:
    return problem.ggn_vp(params, v, batch)
