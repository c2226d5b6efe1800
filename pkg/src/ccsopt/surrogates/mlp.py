"""Dense multilayer perceptron on flat parameter vectors.

All Bayesian treatments of network weights in this package (sampling,
variational fits, ensembles, dropout) share this forward/backward core so
parameter vectors are interchangeable across methods. Dropout uses the
inverted convention: retained units are scaled by 1/(1-p) at mask time, so
deterministic prediction simply omits masks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ccsopt.errors import DimensionMismatch, ShapeMismatch


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a fully connected regression net.

    hidden_widths must name at least one hidden layer; scalar linear maps
    are not MLPs and other components rely on that invariant.
    """

    d_in: int
    hidden_widths: tuple[int, ...] = (32, 32)
    d_out: int = 1
    activation: str = "tanh"
    dropout_rate: float = 0.0

    def __post_init__(self):
        if len(self.hidden_widths) < 1:
            raise ShapeMismatch("MlpSpec needs at least one hidden layer")
        if self.d_in < 1 or self.d_out < 1 or min(self.hidden_widths) < 1:
            raise ShapeMismatch("all layer widths must be >= 1")
        if self.activation not in ("tanh", "relu"):
            raise ShapeMismatch(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ShapeMismatch("dropout_rate must be in [0, 1)")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.d_in, *self.hidden_widths, self.d_out)

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


def layer_shapes(spec: MlpSpec) -> list[tuple[tuple[int, int], tuple[int]]]:
    w = spec.widths
    return [((w[i + 1], w[i]), (w[i + 1],)) for i in range(spec.n_layers)]


def n_params(spec: MlpSpec) -> int:
    return sum(wo * wi + wo for (wo, wi), _ in layer_shapes(spec))


def unpack_params(spec: MlpSpec, params: np.ndarray):
    """Split a flat vector into [(W, b)] per layer (views, no copies)."""
    params = np.asarray(params, dtype=float).ravel()
    if params.size != n_params(spec):
        raise ShapeMismatch(
            f"got {params.size} params, spec needs {n_params(spec)}"
        )
    out, pos = [], 0
    for (wo, wi), _ in layer_shapes(spec):
        w = params[pos : pos + wo * wi].reshape(wo, wi)
        pos += wo * wi
        b = params[pos : pos + wo]
        pos += wo
        out.append((w, b))
    return out


def pack_params(spec: MlpSpec, layers) -> np.ndarray:
    flat = []
    for w, b in layers:
        flat.append(np.asarray(w, dtype=float).ravel())
        flat.append(np.asarray(b, dtype=float).ravel())
    vec = np.concatenate(flat)
    if vec.size != n_params(spec):
        raise ShapeMismatch("packed size disagrees with spec")
    return vec


def prior_like_decay_mask(spec: MlpSpec) -> np.ndarray:
    """1.0 on weight entries, 0.0 on biases: L2 decay targets weights only."""
    parts = []
    for (wo, wi), _ in layer_shapes(spec):
        parts.append(np.ones(wo * wi))
        parts.append(np.zeros(wo))
    return np.concatenate(parts)


def init_params(spec: MlpSpec, gen: np.random.Generator) -> np.ndarray:
    """Random init: weight std 1/sqrt(fan_in), biases zero."""
    layers = []
    for (wo, wi), _ in layer_shapes(spec):
        layers.append((gen.standard_normal((wo, wi)) / np.sqrt(wi), np.zeros(wo)))
    return pack_params(spec, layers)


def draw_masks(spec: MlpSpec, gen: np.random.Generator) -> Optional[list[np.ndarray]]:
    """Inverted-dropout retain masks, one per hidden layer, or None if p=0."""
    p = spec.dropout_rate
    if p == 0.0:
        return None
    keep = 1.0 - p
    return [
        (gen.random(w) < keep).astype(float) / keep for w in spec.hidden_widths
    ]


def _act(name: str, z: np.ndarray) -> np.ndarray:
    return np.tanh(z) if name == "tanh" else np.maximum(z, 0.0)


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return 1.0 - a * a if name == "tanh" else (z > 0.0).astype(float)


def mlp_forward(
    spec: MlpSpec,
    params: np.ndarray,
    x: np.ndarray,
    masks: Optional[Sequence[np.ndarray]] = None,
) -> np.ndarray:
    """Evaluate the net. x may be (d_in,) or (n, d_in); output matches."""
    single = np.asarray(x).ndim == 1
    h = np.atleast_2d(np.asarray(x, dtype=float))
    if h.shape[1] != spec.d_in:
        raise DimensionMismatch(f"input dim {h.shape[1]}, spec wants {spec.d_in}")
    if masks is not None and len(masks) != len(spec.hidden_widths):
        raise ShapeMismatch("one mask per hidden layer required")
    layers = unpack_params(spec, params)
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        if li < spec.n_layers - 1:
            h = _act(spec.activation, z)
            if masks is not None:
                h = h * masks[li]
        else:
            h = z
    return h[0] if single else h


def mlp_forward_members(
    spec: MlpSpec, members: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Forward a stack of parameter vectors at once: (m, P) x (n, d) -> (m, n).

    Equivalent to looping mlp_forward over rows of `members` (no masks),
    but batched into one einsum per layer. Output dimension must be 1.
    """
    if spec.d_out != 1:
        raise ShapeMismatch("batched member forward supports d_out == 1")
    members = np.atleast_2d(np.asarray(members, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != spec.d_in:
        raise DimensionMismatch(f"input dim {x.shape[1]}, spec wants {spec.d_in}")
    if members.shape[1] != n_params(spec):
        raise ShapeMismatch(
            f"members have {members.shape[1]} params, spec needs {n_params(spec)}"
        )
    m = members.shape[0]
    h = np.broadcast_to(x, (m, *x.shape))  # (m, n, d)
    pos = 0
    for li, ((wo, wi), _) in enumerate(layer_shapes(spec)):
        w = members[:, pos : pos + wo * wi].reshape(m, wo, wi)
        pos += wo * wi
        b = members[:, pos : pos + wo]
        pos += wo
        z = np.einsum("mni,moi->mno", h, w) + b[:, None, :]
        h = _act(spec.activation, z) if li < spec.n_layers - 1 else z
    return h[:, :, 0]


def forward_backward(
    spec: MlpSpec,
    params: np.ndarray,
    x: np.ndarray,
    masks: Optional[Sequence[np.ndarray]] = None,
) -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
    """Forward pass plus a pullback mapping d(loss)/d(output) to the flat
    parameter gradient. x must be (n, d_in); output is (n, d_out)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != spec.d_in:
        raise DimensionMismatch(f"input dim {x.shape[1]}, spec wants {spec.d_in}")
    layers = unpack_params(spec, params)
    acts = [x]  # layer inputs (masked post-activations)
    raw_acts = []  # unmasked post-activations, for activation gradients
    zs = []
    h = x
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        zs.append(z)
        if li < spec.n_layers - 1:
            a = _act(spec.activation, z)
            raw_acts.append(a)
            h = a * masks[li] if masks is not None else a
            acts.append(h)
        else:
            h = z
    out = h

    def pullback(dout: np.ndarray) -> np.ndarray:
        delta = np.atleast_2d(np.asarray(dout, dtype=float))
        grads = [None] * spec.n_layers
        for li in range(spec.n_layers - 1, -1, -1):
            w, _ = layers[li]
            grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
            if li > 0:
                delta = delta @ w
                if masks is not None:
                    delta = delta * masks[li - 1]
                delta = delta * _act_grad(
                    spec.activation, zs[li - 1], raw_acts[li - 1]
                )
        return pack_params(spec, grads)

    return out, pullback
