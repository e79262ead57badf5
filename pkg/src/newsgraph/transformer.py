"""Transformer over walk-ordered subgraph sequences.

Input is the (wl, d) feature matrix built by the restart-walk sampler,
with a boolean row mask marking real nodes.  A sinusoidal position table
can be added so the model sees how far from the root each node was
reached, then a stack of post-norm self-attention layers mixes the rows.
Padded rows are blocked from the attention mix through the column mask
and skipped by the pooled readouts.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import _uniform


def relative_positional_encoding(wl: int, d: int) -> np.ndarray:
    """Sinusoid table: row j holds sin/cos pairs of j / 10000^(2i/d)."""
    if d % 2 != 0:
        raise ValueError("positional encoding needs an even width")
    pos = np.arange(wl, dtype=np.float64)[:, None]
    idx = np.arange(d // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * idx / d)
    table = np.empty((wl, d), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


@dataclass
class TransformerLayer:
    """One attention block: projection triples per head, then a two-layer
    feed-forward, each followed by an add-and-normalize step."""

    heads: list
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor

    @classmethod
    def init(cls, d: int, n_heads: int, d_ff: int, rng) -> "TransformerLayer":
        if d % n_heads != 0:
            raise ValueError(f"width {d} is not divisible by {n_heads} heads")
        d_head = d // n_heads
        heads = [
            (_uniform(rng, d, d, d_head),
             _uniform(rng, d, d, d_head),
             _uniform(rng, d, d, d_head))
            for _ in range(n_heads)
        ]
        return cls(
            heads=heads,
            w1=_uniform(rng, d, d, d_ff),
            b1=_uniform(rng, d, d_ff),
            w2=_uniform(rng, d_ff, d_ff, d),
            b2=_uniform(rng, d_ff, d),
            ln1_gain=Tensor(np.ones(d), requires_grad=True),
            ln1_bias=Tensor(np.zeros(d), requires_grad=True),
            ln2_gain=Tensor(np.ones(d), requires_grad=True),
            ln2_bias=Tensor(np.zeros(d), requires_grad=True),
        )

    def tensors(self) -> list:
        out = []
        for w_q, w_k, w_v in self.heads:
            out.extend((w_q, w_k, w_v))
        out.extend((self.w1, self.b1, self.w2, self.b2,
                    self.ln1_gain, self.ln1_bias,
                    self.ln2_gain, self.ln2_bias))
        return out


@dataclass
class TransformerParams:
    layers: list
    d: int
    n_heads: int

    @classmethod
    def init(cls, d: int, n_layers: int, n_heads: int, rng,
             d_ff: int | None = None) -> "TransformerParams":
        if d_ff is None:
            d_ff = 4 * d
        layers = [TransformerLayer.init(d, n_heads, d_ff, rng)
                  for _ in range(n_layers)]
        return cls(layers=layers, d=d, n_heads=n_heads)

    def tensors(self) -> list:
        return [t for layer in self.layers for t in layer.tensors()]

    def named_tensors(self):
        for li, layer in enumerate(self.layers):
            for hi, (w_q, w_k, w_v) in enumerate(layer.heads):
                yield f"layer{li}.head{hi}.w_q", w_q
                yield f"layer{li}.head{hi}.w_k", w_k
                yield f"layer{li}.head{hi}.w_v", w_v
            for field in ("w1", "b1", "w2", "b2",
                          "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias"):
                yield f"layer{li}.{field}", getattr(layer, field)


def attention_mix(h: Tensor, valid: np.ndarray, heads: list):
    """Masked multi-head attention.

    Returns the concatenated head outputs (wl, d) and the per-head weight
    matrices.  Rows of the weight matrices sum to one over the valid
    columns; masked columns get exactly zero.
    """
    outs = []
    weights = []
    for w_q, w_k, w_v in heads:
        q = ad.matmul(h, w_q)
        k = ad.matmul(h, w_k)
        v = ad.matmul(h, w_v)
        d_head = w_q.data.shape[1]
        scores = ad.mul(ad.matmul(q, ad.transpose(k)),
                        1.0 / math.sqrt(d_head))
        w = ad.masked_softmax(scores, valid)
        weights.append(w)
        outs.append(ad.matmul(w, v))
    return ad.concat_cols(outs), weights


def self_attention_block(h: Tensor, valid: np.ndarray,
                         layer: TransformerLayer, return_attn: bool = False):
    """Post-norm block: x = LN(h + attn(h)); out = LN(x + FFN(x))."""
    mixed, attn = attention_mix(h, valid, layer.heads)
    x = ad.layer_norm(ad.add(h, mixed), layer.ln1_gain, layer.ln1_bias)
    inner = ad.relu(ad.add(ad.matmul(x, layer.w1), layer.b1))
    ff = ad.add(ad.matmul(inner, layer.w2), layer.b2)
    out = ad.layer_norm(ad.add(x, ff), layer.ln2_gain, layer.ln2_bias)
    if return_attn:
        return out, attn
    return out


def transformer_forward(s: Tensor, mask: np.ndarray,
                        params: TransformerParams,
                        use_rpe: bool = True) -> Tensor:
    """Run the layer stack over a padded sequence matrix."""
    mask = np.asarray(mask, dtype=bool)
    wl, d = s.data.shape
    if mask.shape != (wl,):
        raise ValueError("mask must have one flag per sequence row")
    if not mask[0]:
        raise ValueError("the root row must be valid")
    h = s
    if use_rpe:
        table = relative_positional_encoding(wl, d) * mask[:, None]
        h = ad.add(h, Tensor(table))
    for layer in params.layers:
        h = self_attention_block(h, mask, layer)
    return h


def readout(h: Tensor, mask: np.ndarray, mode: str = "first") -> Tensor:
    if mode == "first":
        return ad.row(h, 0)
    if mode == "mean":
        return ad.mean_rows(h, np.asarray(mask, dtype=bool))
    if mode == "max":
        return ad.max_rows(h, np.asarray(mask, dtype=bool))
    raise ValueError(f"unknown readout mode {mode!r}")
