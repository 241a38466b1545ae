"""Small numpy MLP with scalar, softmax-categorical and linear-categorical heads.

The network maps an input batch ``(B, d_in)`` through ReLU hidden layers to a
head output of shape ``(B, A, K)`` (``K = 1`` for the scalar head). With no
hidden layers it is a linear model over the inputs, which is how the Fourier
"lite" agents are built.

Loss functions return ``(loss, grads)`` where ``grads`` are exact gradients of
the returned loss with respect to the online parameters; bootstrap targets are
computed from separate target parameters and held fixed (semi-gradient).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from ..dist_core import Support, cdf_direction, pmf_direction, project_masses_batch

Head = Literal["dqn", "c51", "s51"]
GradWrt = Literal["cdf", "pmf"]


@dataclass
class Batch:
    x: np.ndarray  # (B, d_in)
    a: np.ndarray  # (B,)
    r: np.ndarray  # (B,)
    x_next: np.ndarray  # (B, d_in)
    terminal: np.ndarray  # (B,) bool

    def __len__(self) -> int:
        return self.a.shape[0]


class MLP:
    """Fully connected ReLU network with a head of ``n_actions * n_out`` units.

    ``params`` is a flat list ``[W_1, b_1, ..., W_head, b_head]`` (``b_head``
    omitted when ``head_bias`` is False). Weights use fan-in scaled uniform
    initialisation.
    """

    def __init__(self, d_in: int, n_actions: int, n_out: int = 1, hidden: Sequence[int] = (64, 64),
                 rng: Optional[np.random.Generator] = None, head_bias: bool = True, head_scale: float = 1.0,
                 dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self.d_in = d_in
        self.n_actions = n_actions
        self.n_out = n_out
        self.hidden = tuple(hidden)
        self.head_bias = head_bias
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = (d_in,) + self.hidden
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params += [rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out)]
        fan_in = sizes[-1]
        bound = head_scale / np.sqrt(fan_in)
        self.params.append(rng.uniform(-bound, bound, (fan_in, n_actions * n_out)))
        if head_bias:
            self.params.append(rng.uniform(-bound, bound, n_actions * n_out))
        self.params = [p.astype(self.dtype) for p in self.params]

    @property
    def n_hidden_layers(self) -> int:
        return len(self.hidden)

    @property
    def head_weight(self) -> np.ndarray:
        return self.params[2 * self.n_hidden_layers]

    @property
    def head_bias_vector(self) -> Optional[np.ndarray]:
        return self.params[2 * self.n_hidden_layers + 1] if self.head_bias else None

    def copy_params(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params]

    def hidden_forward(self, x: np.ndarray, params: Optional[list[np.ndarray]] = None) -> list[np.ndarray]:
        """Input and hidden activations, last entry feeds the head."""
        params = self.params if params is None else params
        h = np.atleast_2d(np.asarray(x, dtype=self.dtype))
        acts = [h]
        for i in range(self.n_hidden_layers):
            h = np.maximum(h @ params[2 * i] + params[2 * i + 1], 0.0)
            acts.append(h)
        return acts

    def forward(self, x: np.ndarray, params: Optional[list[np.ndarray]] = None, cache: bool = False):
        """Head output ``(B, A, n_out)``; with ``cache`` also the layer activations."""
        params = self.params if params is None else params
        acts = self.hidden_forward(x, params)
        h = acts[-1]
        j = 2 * self.n_hidden_layers
        out = h @ params[j]
        if self.head_bias:
            out = out + params[j + 1]
        out = out.reshape(h.shape[0], self.n_actions, self.n_out)
        return (out, acts) if cache else out

    def _block(self, a: int) -> slice:
        return slice(a * self.n_out, (a + 1) * self.n_out)

    def forward_at(self, x: np.ndarray, actions: np.ndarray):
        """Head output ``(B, n_out)`` for one action per row, plus the activations."""
        acts = self.hidden_forward(x)
        h = acts[-1]
        j = 2 * self.n_hidden_layers
        out = np.empty((h.shape[0], self.n_out), dtype=self.dtype)
        for a in range(self.n_actions):
            rows = actions == a
            if rows.any():
                blk = self._block(a)
                out[rows] = h[rows] @ self.params[j][:, blk]
                if self.head_bias:
                    out[rows] += self.params[j + 1][blk]
        return out, acts

    def backward_at(self, acts: list[np.ndarray], actions: np.ndarray, d_sel: np.ndarray) -> list[np.ndarray]:
        """Gradients given ``dL/d(head output)`` only at ``actions`` (other outputs have zero gradient)."""
        h = acts[-1]
        j = 2 * self.n_hidden_layers
        W = self.params[j]
        grads: list[np.ndarray] = [None] * len(self.params)
        grads[j] = np.zeros_like(W)
        if self.head_bias:
            grads[j + 1] = np.zeros_like(self.params[j + 1])
        dh = np.zeros_like(h) if self.n_hidden_layers else None
        for a in range(self.n_actions):
            rows = actions == a
            if not rows.any():
                continue
            blk = self._block(a)
            g = d_sel[rows]
            grads[j][:, blk] = h[rows].T @ g
            if self.head_bias:
                grads[j + 1][blk] = g.sum(axis=0)
            if dh is not None:
                dh[rows] = g @ W[:, blk].T
        return self._backward_hidden(acts, dh, grads)

    def backward(self, acts: list[np.ndarray], d_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given ``d_out = dL/d(head output)``."""
        B = d_out.shape[0]
        g = d_out.reshape(B, -1)
        grads: list[np.ndarray] = [None] * len(self.params)
        j = 2 * self.n_hidden_layers
        grads[j] = acts[-1].T @ g
        if self.head_bias:
            grads[j + 1] = g.sum(axis=0)
        dh = g @ self.params[j].T
        return self._backward_hidden(acts, dh, grads)

    def _backward_hidden(self, acts, dh, grads):
        for i in reversed(range(self.n_hidden_layers)):
            dh = dh * (acts[i + 1] > 0)
            grads[2 * i] = acts[i].T @ dh
            grads[2 * i + 1] = dh.sum(axis=0)
            if i > 0:
                dh = dh @ self.params[2 * i].T
        return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class HeadSpec:
    """How head outputs are read.

    ``dqn``: scalar values. ``c51``: softmax over logits. ``s51``: outputs are
    the masses (``grad_wrt="pmf"``) or the CDF values (``grad_wrt="cdf"``) of a
    linear categorical distribution.
    """

    kind: Head
    support: Optional[Support] = None
    grad_wrt: GradWrt = "cdf"

    @property
    def n_out(self) -> int:
        return 1 if self.kind == "dqn" else self.support.size

    def pmf(self, out: np.ndarray) -> np.ndarray:
        if self.kind == "c51":
            return softmax(out)
        if self.kind == "s51":
            return out if self.grad_wrt == "pmf" else np.diff(out, axis=-1, prepend=0.0)
        raise ValueError("scalar head has no distribution")

    def values(self, out: np.ndarray) -> np.ndarray:
        """Per-action means ``(B, A)``."""
        if self.kind == "dqn":
            return out[..., 0]
        return self.pmf(out) @ self.support.atoms


def _projected_targets(spec: HeadSpec, out_next: np.ndarray, batch: Batch, gamma: float) -> np.ndarray:
    """Projected target masses ``(B, K)`` from target-network outputs at the greedy next action."""
    atoms = spec.support.atoms
    B = len(batch)
    out_next = out_next.astype(np.float64, copy=False)
    a_star = np.argmax(spec.values(out_next), axis=1)
    p_next = spec.pmf(out_next)[np.arange(B), a_star]
    g = np.where(batch.terminal, 0.0, gamma)
    loc = batch.r[:, None] + g[:, None] * atoms[None, :]
    # terminal rows: all atoms collapse onto r; give them unit mass in total
    p_next = np.where(batch.terminal[:, None], np.eye(1, atoms.size, 0), p_next)
    return project_masses_batch(loc, p_next, atoms)


def dqn_lite_loss(net: MLP, target_params, batch: Batch, gamma: float):
    """Mean ``0.5 (Q(x,a) - y)^2`` with ``y = r + gamma max_a' Q_target(x', a')``."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    B = len(batch)
    out, acts = net.forward_at(batch.x, batch.a)
    q_next = net.forward(batch.x_next, target_params)[..., 0]
    y = batch.r + np.where(batch.terminal, 0.0, gamma) * q_next.max(axis=1)
    err = out[:, 0] - y
    return float(0.5 * np.mean(err**2)), net.backward_at(acts, batch.a, (err / B)[:, None].astype(net.dtype))


def c51_lite_loss(net: MLP, target_params, batch: Batch, gamma: float, spec: HeadSpec):
    """Mean cross-entropy between the projected target and the predicted softmax."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    B = len(batch)
    logits, acts = net.forward_at(batch.x, batch.a)
    m = _projected_targets(spec, net.forward(batch.x_next, target_params), batch, gamma)
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-np.mean(np.sum(m * log_p, axis=1)))
    d_sel = (np.exp(log_p) - m) / B
    return loss, net.backward_at(acts, batch.a, d_sel.astype(net.dtype))


def s51_lite_loss(net: MLP, target_params, batch: Batch, gamma: float, spec: HeadSpec):
    """Mean squared Cramer loss against the projected target.

    ``pmf`` mode: outputs are masses, loss ``sum_{i<K} c (F_i - F'_i)^2``.
    ``cdf`` mode: outputs are CDF values, loss ``sum_{i<=K} c (F_i - F'_i)^2``;
    the last term is zero whenever both CDFs have unit mass and otherwise pulls
    the prediction towards unit mass.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    B = len(batch)
    c = spec.support.require_spacing()
    pred, acts = net.forward_at(batch.x, batch.a)
    pred = pred.astype(np.float64)
    m = _projected_targets(spec, net.forward(batch.x_next, target_params), batch, gamma)
    F_target = np.cumsum(m, axis=1)
    if spec.grad_wrt == "pmf":
        F = np.cumsum(pred, axis=1)
        diff = (F - F_target)[:, :-1]
        loss = float(np.mean(c * np.sum(diff**2, axis=1)))
        d_sel = -pmf_direction(F, F_target, c) / B
    else:
        diff = pred - F_target
        loss = float(np.mean(c * np.sum(diff**2, axis=1)))
        d_sel = -cdf_direction(pred, F_target, c) / B
    return loss, net.backward_at(acts, batch.a, d_sel.astype(net.dtype))


def loss_and_grads(net: MLP, target_params, batch: Batch, gamma: float, spec: HeadSpec):
    if spec.kind == "dqn":
        return dqn_lite_loss(net, target_params, batch, gamma)
    if spec.kind == "c51":
        return c51_lite_loss(net, target_params, batch, gamma, spec)
    if spec.kind == "s51":
        return s51_lite_loss(net, target_params, batch, gamma, spec)
    raise ValueError(f"unknown head {spec.kind!r}")
