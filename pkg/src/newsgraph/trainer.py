"""Two-phase training for the walk-based fake-news classifier.

Phase one trains the article encoder with a throwaway softmax head, then
freezes one vector per article.  Phase two builds the news/entity/topic
graph, samples a restart walk per news node, and trains the sequence
transformer plus the final classifier on the walk matrices, keeping the
parameters from the epoch with the best validation macro F1.  A joint
mode trains the encoder and the transformer together in a single phase
for comparison.

Every random choice is drawn from a seed derived from (config.seed,
component salt), so two runs with the same config produce bitwise
identical results.
"""

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, Tape, Tensor, adam_step
from .corpus import (
    EntityTable,
    RawArticle,
    Vocabulary,
    annotate,
    build_entity_table,
    build_vocab,
)
from .encoder import TextEncoderParams, _uniform, encode_article
from .graph import NodeId, NodeKind, build_graph, drop_kinds, graph_stats, node_features
from .metrics import Metrics, evaluate_metrics
from .topics import TopicModel, fit_lda, fold_in
from .transformer import TransformerParams, readout, transformer_forward
from .walks import sample_subgraph, sequence_matrix, walk_seed

_READOUTS = ("first", "mean", "max")
_ABLATIONS = ("none", "no_hg", "no_et", "no_e", "no_t")

# salts for per-component seed derivation
(_SPLIT, _LDA, _ENCODER, _AUX, _TRANSFORMER,
 _CLASSIFIER, _BATCH1, _BATCH2, _WALKS, _NOISE) = range(1, 11)


@dataclass
class TrainConfig:
    wl: int = 11
    restart: float = 0.1
    lambda_t: int = 3
    topics: int = 50
    layers: int = 5
    heads: int = 4
    d: int = 600
    d_w: int = 128
    lr: float = 5e-5
    weight_decay: float = 5e-3
    epochs: int = 200
    split: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    readout: str = "first"
    use_rpe: bool = True
    ablation: str = "none"
    resample_walks: bool = False
    eval_walks: int = 1
    feature_noise: float = 0.0
    balance_batches: bool = False
    min_freq: int = 2
    alpha: float | None = None
    beta: float = 0.01
    lda_iterations: int = 200
    batch_size: int = 32
    patience: int = 20
    phase1_epochs: int = 30
    d_hid: int | None = None
    mlp_relu: bool = True
    joint: bool = False
    edge_pairs: str = "sharing"
    edge_topic: str = "top1"
    max_sentences: int = 0
    max_tokens: int = 0


def validate_config(cfg: TrainConfig) -> None:
    if cfg.d % 2 != 0:
        raise ValueError("d must be even; it spans two recurrence directions")
    if cfg.d % cfg.heads != 0:
        raise ValueError("d must be divisible by the head count")
    if not 0.0 <= cfg.restart <= 1.0:
        raise ValueError("restart must lie in [0, 1]")
    if cfg.wl < 1:
        raise ValueError("wl must be at least 1")
    if cfg.readout not in _READOUTS:
        raise ValueError(f"readout must be one of {_READOUTS}")
    if cfg.ablation not in _ABLATIONS:
        raise ValueError(f"ablation must be one of {_ABLATIONS}")
    if cfg.batch_size < 1:
        raise ValueError("batch_size must be positive")
    if cfg.eval_walks < 1:
        raise ValueError("eval_walks must be positive")
    if cfg.feature_noise < 0:
        raise ValueError("feature_noise must not be negative")
    if cfg.topics < 1:
        raise ValueError("topics must be positive")
    if cfg.layers < 0:
        raise ValueError("layers must not be negative")


def component_seed(seed: int, salt: int) -> int:
    return int(np.random.SeedSequence((seed, salt)).generate_state(1)[0])


def _component_rng(seed: int, salt: int):
    return np.random.default_rng(np.random.SeedSequence((seed, salt)))


def split_dataset(n: int, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    """Shuffled train/val/test index split.

    Train and validation sizes are floored, the test split takes the
    remainder, so every article lands in exactly one part.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ValueError("need three non-negative fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to one")
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(fractions[0] * n)
    n_val = math.floor(fractions[1] * n)
    return (order[:n_train],
            order[n_train:n_train + n_val],
            order[n_train + n_val:])


# ------------------------------------------------------------- classifier


@dataclass
class MlpParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, d_in: int, d_hid: int, rng) -> "MlpParams":
        return cls(
            w1=_uniform(rng, d_in, d_in, d_hid),
            b1=_uniform(rng, d_in, d_hid),
            w2=_uniform(rng, d_hid, d_hid, 2),
            b2=_uniform(rng, d_hid, 2),
        )

    def tensors(self) -> list:
        return [self.w1, self.b1, self.w2, self.b2]

    def named_tensors(self):
        return [("w1", self.w1), ("b1", self.b1),
                ("w2", self.w2), ("b2", self.b2)]


def classify_batch(x: Tensor, mlp: MlpParams, use_relu: bool = True) -> Tensor:
    """Class probabilities, one row per input row."""
    h = ad.add(ad.matmul(x, mlp.w1), mlp.b1)
    h = ad.relu(h) if use_relu else ad.tanh(h)
    return ad.softmax(ad.add(ad.matmul(h, mlp.w2), mlp.b2))


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """Mean negative log probability of the true class, floored at 1e-12."""
    labels = np.asarray(labels, dtype=np.int64)
    picked = ad.take_per_row(probs, labels)
    floored = ad.log(ad.clip_min(picked, 1e-12))
    return ad.mul(ad.total_sum(floored), -1.0 / labels.shape[0])


# --------------------------------------------------------------- pipeline


@dataclass
class PreparedCorpus:
    articles: list
    docs: list
    labels: np.ndarray
    vocab: Vocabulary
    entities: EntityTable
    topics: TopicModel
    dists: list


def prepare_corpus(articles: list[RawArticle],
                   cfg: TrainConfig) -> PreparedCorpus:
    """Vocabulary, entity table, annotation and topic fit for a corpus."""
    if not articles:
        raise ValueError("corpus is empty")
    if any(a.label is None for a in articles):
        raise ValueError("every article needs a 0/1 label here")
    vocab = build_vocab(articles, min_freq=cfg.min_freq)
    entities = build_entity_table(articles)
    docs = [annotate(a, vocab, entities) for a in articles]
    model = fit_lda(docs, k=cfg.topics, alpha=cfg.alpha, beta=cfg.beta,
                    iterations=cfg.lda_iterations,
                    seed=component_seed(cfg.seed, _LDA),
                    vocab_size=len(vocab.id_to_token))
    return PreparedCorpus(
        articles=articles, docs=docs,
        labels=np.array([a.label for a in articles], dtype=np.int64),
        vocab=vocab, entities=entities, topics=model,
        dists=model.distributions())


def build_article_graph(prep: PreparedCorpus, cfg: TrainConfig,
                        article_vectors: np.ndarray,
                        encoder: TextEncoderParams):
    """Graph plus node features, with ablation drops already applied."""
    graph = build_graph(prep.docs, prep.dists, lambda_t=cfg.lambda_t,
                        n_entities=len(prep.entities.id_to_surface),
                        edge_pairs=cfg.edge_pairs, edge_topic=cfg.edge_topic)
    graph.features = node_features(graph, article_vectors, encoder,
                                   prep.topics, prep.entities, prep.vocab)
    if cfg.ablation in ("no_e", "no_et"):
        graph = drop_kinds(graph, drop_entities=True,
                           drop_topics=cfg.ablation == "no_et")
    elif cfg.ablation == "no_t":
        graph = drop_kinds(graph, drop_topics=True)
    return graph


def untrained_graph(prep: PreparedCorpus, cfg: TrainConfig):
    """Graph over a prepared corpus with features from a fresh encoder.

    Topology does not depend on the encoder weights, so inspection
    commands can look at structure and walks without a training run."""
    enc = TextEncoderParams.init(len(prep.vocab.id_to_token), cfg.d_w,
                                 cfg.d // 2,
                                 _component_rng(cfg.seed, _ENCODER))
    return build_article_graph(prep, cfg, _encode_all(prep.docs, enc, cfg),
                               enc)


def walk_stream_seed(cfg: TrainConfig) -> int:
    """Global seed of the walk stream, shared with training runs."""
    return component_seed(cfg.seed, _WALKS)


def _walk_matrices(graph, cfg: TrainConfig, walk_global: int,
                   indices, epoch: int = 0):
    out = {}
    for i in indices:
        seq = sample_subgraph(graph, NodeId(NodeKind.NEWS, int(i)), cfg.wl,
                              cfg.restart, walk_seed(walk_global, int(i),
                                                     epoch))
        out[int(i)] = sequence_matrix(graph, seq)
    return out


@dataclass
class ModelBundle:
    """Everything needed to score a corpus after training."""

    config: TrainConfig
    vocab: Vocabulary
    entities: EntityTable
    topics: TopicModel
    encoder: TextEncoderParams
    transformer: TransformerParams | None
    classifier: MlpParams


@dataclass
class TrainResult:
    config: TrainConfig
    bundle: ModelBundle
    metrics: dict
    probs: dict
    split_indices: dict
    history: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)


def _chunks(order, size):
    for at in range(0, len(order), size):
        yield order[at:at + size]


def _epoch_order(train_idx, labels, rng, balance: bool):
    """Visit order for one epoch.  With ``balance`` the minority class is
    upsampled to the majority count, so batches are label-balanced on
    average and the majority-vote attractor loses its pull."""
    train_idx = np.asarray(train_idx)
    if balance:
        pos = train_idx[labels[train_idx] == 1]
        neg = train_idx[labels[train_idx] == 0]
        if len(pos) and len(neg) and len(pos) != len(neg):
            minority, majority = (pos, neg) if len(pos) < len(neg) \
                else (neg, pos)
            extra = rng.choice(minority, size=len(majority) - len(minority),
                               replace=True)
            train_idx = np.concatenate([majority, minority, extra])
    return rng.permutation(train_idx)


def _optimizer_step(params, state, lr, weight_decay):
    adam_step(params, [p.grad for p in params], state, lr, weight_decay)
    for p in params:
        p.zero_grad()


def _snapshot(params):
    return [p.data.copy() for p in params]


def _restore(params, snap):
    for p, saved in zip(params, snap):
        p.data[...] = saved


def _encode_all(docs, enc, cfg):
    return np.stack([
        encode_article(d, enc, cfg.max_sentences, cfg.max_tokens).data
        for d in docs])


def _root_vector(sm, tr, cfg: TrainConfig, noise_rng=None) -> Tensor:
    matrix = sm.matrix
    if noise_rng is not None and cfg.feature_noise > 0.0:
        # Training-time jitter: the root row is otherwise a fixed
        # per-article fingerprint, and the walk rows alone are enough to
        # memorize the training set instead of learning a rule that
        # transfers to unseen roots.
        matrix = matrix + noise_rng.normal(0.0, cfg.feature_noise,
                                           matrix.shape)
    h = transformer_forward(Tensor(matrix), sm.mask, tr,
                            use_rpe=cfg.use_rpe)
    return readout(h, sm.mask, cfg.readout)


def train(articles: list[RawArticle], cfg: TrainConfig) -> TrainResult:
    validate_config(cfg)
    prep = prepare_corpus(articles, cfg)
    n = len(articles)
    train_idx, val_idx, test_idx = split_dataset(
        n, cfg.split, component_seed(cfg.seed, _SPLIT))
    if min(len(train_idx), len(val_idx), len(test_idx)) == 0:
        raise ValueError("corpus too small for the requested split")
    labels = prep.labels
    history: list[dict] = []

    enc = TextEncoderParams.init(len(prep.vocab.id_to_token), cfg.d_w,
                                 cfg.d // 2,
                                 _component_rng(cfg.seed, _ENCODER))
    d_hid = cfg.d_hid if cfg.d_hid else max(2, cfg.d // 2)
    clf = MlpParams.init(cfg.d, d_hid, _component_rng(cfg.seed, _CLASSIFIER))

    if cfg.joint:
        return _train_joint(prep, cfg, enc, clf, labels, history,
                            train_idx, val_idx, test_idx)

    # phase one: encoder pretraining behind a throwaway head
    aux = MlpParams.init(cfg.d, d_hid, _component_rng(cfg.seed, _AUX))
    p1_params = enc.tensors() + aux.tensors()
    p1_state = AdamState.for_params(p1_params)
    p1_rng = _component_rng(cfg.seed, _BATCH1)
    for epoch in range(1, cfg.phase1_epochs + 1):
        order = _epoch_order(train_idx, labels, p1_rng,
                             cfg.balance_batches)
        losses = []
        for batch in _chunks(order, cfg.batch_size):
            with Tape() as tape:
                vecs = ad.stack_rows([
                    encode_article(prep.docs[i], enc, cfg.max_sentences,
                                   cfg.max_tokens) for i in batch])
                loss = cross_entropy(
                    classify_batch(vecs, aux, cfg.mlp_relu), labels[batch])
            tape.backprop(loss)
            _optimizer_step(p1_params, p1_state, cfg.lr, cfg.weight_decay)
            losses.append(float(loss.data))
        history.append({"phase": 1, "epoch": epoch,
                        "loss": float(np.mean(losses))})

    article_vectors = _encode_all(prep.docs, enc, cfg)

    if cfg.ablation == "no_hg":
        return _train_vector_only(prep, cfg, enc, clf, article_vectors,
                                  labels, history,
                                  train_idx, val_idx, test_idx)

    graph = build_article_graph(prep, cfg, article_vectors, enc)
    walk_global = component_seed(cfg.seed, _WALKS)
    seqs = _walk_matrices(graph, cfg, walk_global, range(graph.n_news))

    tr = TransformerParams.init(cfg.d, cfg.layers, cfg.heads,
                                _component_rng(cfg.seed, _TRANSFORMER))
    p2_params = tr.tensors() + clf.tensors()
    p2_state = AdamState.for_params(p2_params)
    p2_rng = _component_rng(cfg.seed, _BATCH2)
    noise_rng = _component_rng(cfg.seed, _NOISE)

    # Extra evaluation draws average out walk-sampling noise; their seed
    # epochs start past the training range so the streams never collide.
    extra_eval = [_walk_matrices(graph, cfg, walk_global,
                                 range(graph.n_news), epoch=cfg.epochs + w)
                  for w in range(1, cfg.eval_walks)]

    def eval_probs(indices):
        total = None
        for cur in (seqs, *extra_eval):
            rows = np.stack([_root_vector(cur[int(i)], tr, cfg).data
                             for i in indices])
            probs = classify_batch(Tensor(rows), clf, cfg.mlp_relu).data
            total = probs if total is None else total + probs
        return total / (len(extra_eval) + 1)

    best_snap, best_f1, best_epoch, stale = None, -1.0, 0, 0
    for epoch in range(1, cfg.epochs + 1):
        if cfg.resample_walks and epoch > 1:
            seqs.update(_walk_matrices(graph, cfg, walk_global, train_idx,
                                       epoch=epoch - 1))
        order = _epoch_order(train_idx, labels, p2_rng,
                             cfg.balance_batches)
        losses = []
        for batch in _chunks(order, cfg.batch_size):
            with Tape() as tape:
                vecs = ad.stack_rows([
                    _root_vector(seqs[int(i)], tr, cfg, noise_rng)
                    for i in batch])
                loss = cross_entropy(
                    classify_batch(vecs, clf, cfg.mlp_relu), labels[batch])
            tape.backprop(loss)
            _optimizer_step(p2_params, p2_state, cfg.lr, cfg.weight_decay)
            losses.append(float(loss.data))
        val = evaluate_metrics(eval_probs(val_idx), labels[val_idx])
        history.append({"phase": 2, "epoch": epoch,
                        "loss": float(np.mean(losses)),
                        "val_acc": val.accuracy, "val_f1": val.macro_f1})
        if val.macro_f1 > best_f1:
            best_snap, best_f1, best_epoch, stale = (
                _snapshot(p2_params), val.macro_f1, epoch, 0)
        else:
            stale += 1
            if stale > cfg.patience:
                break
    if best_snap is not None:
        _restore(p2_params, best_snap)
    if cfg.resample_walks:
        seqs = _walk_matrices(graph, cfg, walk_global, range(graph.n_news))

    bundle = ModelBundle(cfg, prep.vocab, prep.entities, prep.topics,
                         enc, tr, clf)
    return _finish(prep, cfg, bundle, eval_probs, labels, history,
                   train_idx, val_idx, test_idx,
                   extra_stats={"graph": graph_stats(graph),
                                "best_epoch": best_epoch})


def _train_vector_only(prep, cfg, enc, clf, article_vectors, labels,
                       history, train_idx, val_idx, test_idx):
    """Text-only ablation: classify frozen article vectors, no graph."""
    params = clf.tensors()
    state = AdamState.for_params(params)
    rng = _component_rng(cfg.seed, _BATCH2)

    def eval_probs(indices):
        x = Tensor(article_vectors[np.asarray(indices, dtype=np.int64)])
        return classify_batch(x, clf, cfg.mlp_relu).data

    best_snap, best_f1, best_epoch, stale = None, -1.0, 0, 0
    for epoch in range(1, cfg.epochs + 1):
        order = _epoch_order(train_idx, labels, rng,
                             cfg.balance_batches)
        losses = []
        for batch in _chunks(order, cfg.batch_size):
            with Tape() as tape:
                loss = cross_entropy(
                    classify_batch(Tensor(article_vectors[batch]), clf,
                                   cfg.mlp_relu), labels[batch])
            tape.backprop(loss)
            _optimizer_step(params, state, cfg.lr, cfg.weight_decay)
            losses.append(float(loss.data))
        val = evaluate_metrics(eval_probs(val_idx), labels[val_idx])
        history.append({"phase": 2, "epoch": epoch,
                        "loss": float(np.mean(losses)),
                        "val_acc": val.accuracy, "val_f1": val.macro_f1})
        if val.macro_f1 > best_f1:
            best_snap, best_f1, best_epoch, stale = (
                _snapshot(params), val.macro_f1, epoch, 0)
        else:
            stale += 1
            if stale > cfg.patience:
                break
    if best_snap is not None:
        _restore(params, best_snap)
    bundle = ModelBundle(cfg, prep.vocab, prep.entities, prep.topics,
                         enc, None, clf)
    return _finish(prep, cfg, bundle, eval_probs, labels, history,
                   train_idx, val_idx, test_idx,
                   extra_stats={"graph": None, "best_epoch": best_epoch})


def _train_joint(prep, cfg, enc, clf, labels, history,
                 train_idx, val_idx, test_idx):
    """Single-phase mode: gradients reach the encoder through the walk
    rows of news nodes.  Entity and topic rows are snapshots taken from
    the freshly initialized embeddings and stay fixed."""
    article_vectors = _encode_all(prep.docs, enc, cfg)
    graph = build_article_graph(prep, cfg, article_vectors, enc)
    walk_global = component_seed(cfg.seed, _WALKS)
    walks = {}
    for i in range(graph.n_news):
        walks[i] = sample_subgraph(graph, NodeId(NodeKind.NEWS, i), cfg.wl,
                                   cfg.restart, walk_seed(walk_global, i, 0))
    tr = TransformerParams.init(cfg.d, cfg.layers, cfg.heads,
                                _component_rng(cfg.seed, _TRANSFORMER))
    params = enc.tensors() + tr.tensors() + clf.tensors()
    state = AdamState.for_params(params)
    rng = _component_rng(cfg.seed, _BATCH2)
    zero_row = np.zeros(cfg.d)

    def root_vector(i):
        seq = walks[int(i)]
        rows = []
        for node in seq.nodes:
            if node.kind == NodeKind.NEWS:
                rows.append(encode_article(prep.docs[node.index], enc,
                                           cfg.max_sentences,
                                           cfg.max_tokens))
            else:
                rows.append(Tensor(graph.features[node]))
        rows.extend(Tensor(zero_row) for _ in range(cfg.wl - len(rows)))
        mask = np.arange(cfg.wl) < len(seq.nodes)
        h = transformer_forward(ad.stack_rows(rows), mask, tr,
                                use_rpe=cfg.use_rpe)
        return readout(h, mask, cfg.readout), mask

    def eval_probs(indices):
        rows = np.stack([root_vector(i)[0].data for i in indices])
        return classify_batch(Tensor(rows), clf, cfg.mlp_relu).data

    best_snap, best_f1, best_epoch, stale = None, -1.0, 0, 0
    for epoch in range(1, cfg.epochs + 1):
        order = _epoch_order(train_idx, labels, rng,
                             cfg.balance_batches)
        losses = []
        for batch in _chunks(order, cfg.batch_size):
            with Tape() as tape:
                vecs = ad.stack_rows([root_vector(i)[0] for i in batch])
                loss = cross_entropy(
                    classify_batch(vecs, clf, cfg.mlp_relu), labels[batch])
            tape.backprop(loss)
            _optimizer_step(params, state, cfg.lr, cfg.weight_decay)
            losses.append(float(loss.data))
        val = evaluate_metrics(eval_probs(val_idx), labels[val_idx])
        history.append({"phase": 0, "epoch": epoch,
                        "loss": float(np.mean(losses)),
                        "val_acc": val.accuracy, "val_f1": val.macro_f1})
        if val.macro_f1 > best_f1:
            best_snap, best_f1, best_epoch, stale = (
                _snapshot(params), val.macro_f1, epoch, 0)
        else:
            stale += 1
            if stale > cfg.patience:
                break
    if best_snap is not None:
        _restore(params, best_snap)
    bundle = ModelBundle(cfg, prep.vocab, prep.entities, prep.topics,
                         enc, tr, clf)
    return _finish(prep, cfg, bundle, eval_probs, labels, history,
                   train_idx, val_idx, test_idx,
                   extra_stats={"graph": graph_stats(graph),
                                "best_epoch": best_epoch})


def _finish(prep, cfg, bundle, eval_probs, labels, history,
            train_idx, val_idx, test_idx, extra_stats):
    split_indices = {"train": train_idx, "val": val_idx, "test": test_idx}
    probs = {name: eval_probs(idx) for name, idx in split_indices.items()}
    metrics = {name: evaluate_metrics(probs[name], labels[idx])
               for (name, idx) in split_indices.items()}
    stats = {
        "n_articles": len(prep.articles),
        "n_fake": int(labels.sum()),
        "vocab_size": len(prep.vocab.id_to_token),
        "n_entities": len(prep.entities.id_to_surface),
    }
    stats.update(extra_stats)
    return TrainResult(config=cfg, bundle=bundle, metrics=metrics,
                       probs=probs, split_indices=split_indices,
                       history=history, stats=stats)


def evaluate_bundle(bundle: ModelBundle, articles: list[RawArticle]):
    """Score a labeled corpus with a trained model.

    Unknown entity surfaces are skipped and topic mixes come from the
    fold-in estimator, so this works on corpora the model never saw.
    Returns (probs, labels, Metrics).
    """
    cfg = bundle.config
    if any(a.label is None for a in articles):
        raise ValueError("evaluation needs labeled articles")
    labels = np.array([a.label for a in articles], dtype=np.int64)
    docs = [annotate(a, bundle.vocab, bundle.entities, strict=False)
            for a in articles]
    vectors = _encode_all(docs, bundle.encoder, cfg)

    if cfg.ablation == "no_hg" or bundle.transformer is None:
        probs = classify_batch(Tensor(vectors), bundle.classifier,
                               cfg.mlp_relu).data
        return probs, labels, evaluate_metrics(probs, labels)

    dists = [fold_in(bundle.topics, d.tokens(), salt=i)
             for i, d in enumerate(docs)]
    graph = build_graph(docs, dists, lambda_t=cfg.lambda_t,
                        n_entities=len(bundle.entities.id_to_surface),
                        edge_pairs=cfg.edge_pairs, edge_topic=cfg.edge_topic)
    graph.features = node_features(graph, vectors, bundle.encoder,
                                   bundle.topics, bundle.entities,
                                   bundle.vocab)
    if cfg.ablation in ("no_e", "no_et"):
        graph = drop_kinds(graph, drop_entities=True,
                           drop_topics=cfg.ablation == "no_et")
    elif cfg.ablation == "no_t":
        graph = drop_kinds(graph, drop_topics=True)
    walk_global = component_seed(cfg.seed, _WALKS)
    total = None
    for w in range(cfg.eval_walks):
        seqs = _walk_matrices(graph, cfg, walk_global, range(graph.n_news),
                              epoch=0 if w == 0 else cfg.epochs + w)
        rows = np.stack([
            _root_vector(seqs[i], bundle.transformer, cfg).data
            for i in range(graph.n_news)])
        probs = classify_batch(Tensor(rows), bundle.classifier,
                               cfg.mlp_relu).data
        total = probs if total is None else total + probs
    probs = total / cfg.eval_walks
    return probs, labels, evaluate_metrics(probs, labels)


def ablation_config(cfg: TrainConfig, variant: str) -> TrainConfig:
    """Config for one named model variant.

    full keeps cfg as is; no_rpe, readout_mean and readout_max flip the
    matching switch; no_hg, no_et, no_e and no_t set the structural
    ablation field.
    """
    if variant == "full":
        return replace(cfg, ablation="none")
    if variant == "no_rpe":
        return replace(cfg, ablation="none", use_rpe=False)
    if variant == "readout_mean":
        return replace(cfg, ablation="none", readout="mean")
    if variant == "readout_max":
        return replace(cfg, ablation="none", readout="max")
    if variant in ("no_hg", "no_et", "no_e", "no_t"):
        return replace(cfg, ablation=variant)
    raise ValueError(f"unknown variant {variant!r}")


ABLATION_VARIANTS = ("full", "no_rpe", "readout_mean", "readout_max",
                     "no_hg", "no_et", "no_e", "no_t")


def config_dict(cfg: TrainConfig) -> dict:
    out = asdict(cfg)
    out["split"] = list(cfg.split)
    return out
