"""Dual-level article encoder: word embeddings feed a bidirectional GRU with
attention pooling per sentence, then the sentence vectors go through a second
bidirectional GRU with attention pooling to give one vector per article.

The article vector width is twice the GRU state width (forward and backward
states concatenated), at both levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import Document

__all__ = [
    "GruBlock",
    "TextEncoderParams",
    "gru_sequence",
    "attention_pool",
    "encode_article",
]


def _uniform(rng, fan_in, *shape):
    """Glorot-style uniform init; the last axis of ``shape`` is the fan-out
    (1 for vectors)."""
    fan_out = shape[-1] if len(shape) > 1 else 1
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(*shape):
    return Tensor(np.zeros(shape), requires_grad=True)


@dataclass
class GruBlock:
    """One direction of a gated recurrent layer.

    Gates use the logistic sigmoid, the candidate uses tanh, and the state
    update is h' = (1-z)*h + z*cand with a zero initial state.
    """

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor

    @classmethod
    def init(cls, d_in: int, d_state: int, rng) -> "GruBlock":
        # Biases start at zero so the states are driven by the inputs alone;
        # a nonzero bias acts as a shared forcing term that pushes every
        # document toward the same trajectory.
        return cls(
            w_z=_uniform(rng, d_in, d_in, d_state),
            u_z=_uniform(rng, d_state, d_state, d_state),
            b_z=_zeros(d_state),
            w_r=_uniform(rng, d_in, d_in, d_state),
            u_r=_uniform(rng, d_state, d_state, d_state),
            b_r=_zeros(d_state),
            w_h=_uniform(rng, d_in, d_in, d_state),
            u_h=_uniform(rng, d_state, d_state, d_state),
            b_h=_zeros(d_state),
        )

    def tensors(self):
        return [self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r,
                self.w_h, self.u_h, self.b_h]

    @property
    def d_state(self) -> int:
        return self.u_z.shape[0]


def gru_sequence(block: GruBlock, inputs: Tensor, reverse: bool = False) -> Tensor:
    """Run the recurrence over the rows of ``inputs``; returns one state row
    per input row, re-reversed so row t always describes input t."""
    n = inputs.shape[0]
    h = Tensor(np.zeros(block.d_state))
    states: list = [None] * n
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        x = ad.row(inputs, t)
        z = ad.sigmoid(ad.add(ad.add(ad.matmul(x, block.w_z),
                                     ad.matmul(h, block.u_z)), block.b_z))
        r = ad.sigmoid(ad.add(ad.add(ad.matmul(x, block.w_r),
                                     ad.matmul(h, block.u_r)), block.b_r))
        cand = ad.tanh(ad.add(ad.add(ad.matmul(x, block.w_h),
                                     ad.matmul(ad.mul(r, h), block.u_h)),
                              block.b_h))
        h = ad.add(ad.mul(ad.one_minus(z), h), ad.mul(z, cand))
        states[t] = h
    return ad.stack_rows(states)


def attention_pool(hiddens: Tensor, w: Tensor, b: Tensor, u: Tensor):
    """Content attention over rows: score each row with a one-layer tanh
    projection against a learned context vector, softmax, weighted-sum.

    Returns (pooled vector, attention weights).
    """
    proj = ad.tanh(ad.add(ad.matmul(hiddens, w), b))
    weights = ad.softmax(ad.matmul(proj, u))
    return ad.matmul(weights, hiddens), weights


@dataclass
class TextEncoderParams:
    embedding: Tensor  # (vocab, d_w); row 0 is the padding/unknown token
    word_fwd: GruBlock
    word_bwd: GruBlock
    sent_fwd: GruBlock
    sent_bwd: GruBlock
    attn_w_w: Tensor
    attn_b_w: Tensor
    attn_u_w: Tensor
    attn_w_s: Tensor
    attn_b_s: Tensor
    attn_u_s: Tensor

    @classmethod
    def init(cls, vocab_size: int, d_w: int, d_state: int, rng) -> "TextEncoderParams":
        two = 2 * d_state
        # Embeddings start at unit scale rather than 1/sqrt(d_w) so the
        # pooled article vectors keep O(1)-sized entries; downstream they are
        # summed with sinusoidal position rows whose entries are O(1), and a
        # much smaller scale would drown the content entirely.
        return cls(
            embedding=Tensor(rng.uniform(-1.0, 1.0, size=(vocab_size, d_w)),
                             requires_grad=True),
            word_fwd=GruBlock.init(d_w, d_state, rng),
            word_bwd=GruBlock.init(d_w, d_state, rng),
            sent_fwd=GruBlock.init(two, d_state, rng),
            sent_bwd=GruBlock.init(two, d_state, rng),
            attn_w_w=_uniform(rng, two, two, two),
            attn_b_w=_zeros(two),
            attn_u_w=_uniform(rng, two, two),
            attn_w_s=_uniform(rng, two, two, two),
            attn_b_s=_zeros(two),
            attn_u_s=_uniform(rng, two, two),
        )

    @property
    def d_news(self) -> int:
        return 2 * self.word_fwd.d_state

    def tensors(self) -> list[Tensor]:
        out = [self.embedding]
        for blk in (self.word_fwd, self.word_bwd, self.sent_fwd, self.sent_bwd):
            out.extend(blk.tensors())
        out.extend([self.attn_w_w, self.attn_b_w, self.attn_u_w,
                    self.attn_w_s, self.attn_b_s, self.attn_u_s])
        return out

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        names = ["embedding"]
        for tag in ("word_fwd", "word_bwd", "sent_fwd", "sent_bwd"):
            names += [f"{tag}.{p}" for p in
                      ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")]
        names += ["attn_w_w", "attn_b_w", "attn_u_w",
                  "attn_w_s", "attn_b_s", "attn_u_s"]
        return list(zip(names, self.tensors()))


def encode_article(doc: Document, params: TextEncoderParams,
                   max_sentences: int = 0, max_tokens: int = 0) -> Tensor:
    """Article vector of width 2*d_state. Optional hard caps on sentence and
    token counts (0 = unlimited)."""
    sentences = doc.sentences
    if max_sentences:
        sentences = sentences[:max_sentences]
    sent_vecs = []
    for sent in sentences:
        ids = np.asarray(sent[:max_tokens] if max_tokens else sent,
                         dtype=np.intp)
        emb = ad.gather_rows(params.embedding, ids)
        fwd = gru_sequence(params.word_fwd, emb)
        bwd = gru_sequence(params.word_bwd, emb, reverse=True)
        states = ad.concat_cols([fwd, bwd])
        pooled, _ = attention_pool(states, params.attn_w_w, params.attn_b_w,
                                   params.attn_u_w)
        sent_vecs.append(pooled)
    stacked = ad.stack_rows(sent_vecs)
    fwd = gru_sequence(params.sent_fwd, stacked)
    bwd = gru_sequence(params.sent_bwd, stacked, reverse=True)
    states = ad.concat_cols([fwd, bwd])
    pooled, _ = attention_pool(states, params.attn_w_s, params.attn_b_s,
                               params.attn_u_s)
    return pooled
