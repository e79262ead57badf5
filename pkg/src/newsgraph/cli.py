"""Command line front end for the pipeline.

Subcommands cover the whole workflow: corpus synthesis, ingestion checks,
topic model evaluation, graph inspection, walk dumps, training, checkpoint
evaluation, model variant comparison and hyperparameter sweeps.  Every
command writes its tables as CSV, renders matching figures next to them,
and records a manifest holding the resolved configuration, the seed and a
content hash per input, so a run can be reproduced from its artifacts.

Exit status is 0 on success, 1 for usage errors and 2 for runtime
failures such as missing files or malformed inputs.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import fields, replace

import numpy as np

from . import plots, report
from .checkpoint import load_checkpoint, save_checkpoint
from .config import parse_grid, read_config_file, resolve_config
from .corpus import (CorpusError, build_entity_table, build_vocab,
                     load_corpus, write_corpus)
from .graph import GraphError, NodeId, NodeKind, graph_stats
from .synth import SynthSpec, generate_synthetic
from .topics import coherence, perplexity
from .trainer import (ABLATION_VARIANTS, TrainConfig, ablation_config,
                      evaluate_bundle, prepare_corpus, train,
                      untrained_graph, validate_config, walk_stream_seed)
from .walks import sample_subgraph, walk_seed

__all__ = ["UsageError", "run_command", "main"]

_CONFIG_FIELDS = tuple(f.name for f in fields(TrainConfig))


class UsageError(ValueError):
    """Bad flag combination detected after argparse already accepted it."""


def _add_config_flags(parser, exclude=()):
    parser.add_argument("--config", metavar="FILE",
                        help="configuration file with key = value lines")
    group = parser.add_argument_group(
        "configuration overrides",
        "one flag per training configuration field; flag values beat "
        "file values, file values beat defaults")
    for name in _CONFIG_FIELDS:
        if name in exclude:
            continue
        group.add_argument("--" + name.replace("_", "-"),
                           dest="cfg_" + name, metavar="V", default=None,
                           help=argparse.SUPPRESS)


def _resolve(args) -> TrainConfig:
    file_values = read_config_file(args.config) if args.config else None
    overrides = {}
    for name in _CONFIG_FIELDS:
        value = getattr(args, "cfg_" + name, None)
        if value is not None:
            overrides[name] = value
    cfg = resolve_config(file_values, overrides)
    validate_config(cfg)
    return cfg


def _out_dir(args) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _inputs(args, **named) -> dict:
    paths = dict(named)
    corpus = getattr(args, "corpus", None)
    if corpus:
        paths["corpus"] = corpus
    if getattr(args, "config", None):
        paths["config"] = args.config
    return paths


def _force_labels(articles):
    """Structure commands ignore labels, so unlabeled rows pass as real."""
    return [a if a.label is not None else replace(a, label=0)
            for a in articles]


def _metric_tuple(m):
    return (m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1,
            m.auc)


def _mean_metrics(ms):
    """Componentwise means; AUC skips rounds where it is undefined."""
    cols = list(zip(*(_metric_tuple(m)[:4] for m in ms)))
    means = tuple(float(np.mean(col)) for col in cols)
    aucs = [m.auc for m in ms if m.auc is not None]
    return means + (float(np.mean(aucs)) if aucs else None,)


def _fmt_auc(auc) -> str:
    return "n/a" if auc is None else f"{auc:.3f}"


def _print_rounds_summary(test_metrics):
    accs = [m.accuracy for m in test_metrics]
    f1s = [m.macro_f1 for m in test_metrics]
    aucs = [m.auc for m in test_metrics if m.auc is not None]
    line = (f"test over {len(test_metrics)} rounds: "
            f"acc {np.mean(accs):.3f} ± {np.std(accs):.3f}, "
            f"macro F1 {np.mean(f1s):.3f} ± {np.std(f1s):.3f}")
    if aucs:
        line += f", auc {np.mean(aucs):.3f} ± {np.std(aucs):.3f}"
    print(line)


def _int_pair(text: str):
    parts = [int(p) for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI")
    return tuple(parts)


def _nan_safe(values):
    return [float("nan") if v is None else v for v in values]


# ---------------------------------------------------------------- commands


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        clusters=args.clusters,
        entities_per_cluster=args.entities_per_cluster,
        words_per_cluster=args.words_per_cluster,
        articles_per_cluster=args.articles_per_cluster,
        fake_fraction=args.fake_fraction,
        sentences=args.sentences,
        words_per_sentence=args.words_per_sentence,
        subtopics_per_cluster=args.subtopics_per_cluster,
        real_mentions=args.real_mentions,
        fake_mentions=args.fake_mentions,
        seed=args.seed)
    articles = generate_synthetic(spec)
    out = _out_dir(args)
    path = args.out or os.path.join(out, "corpus.tsv")
    write_corpus(articles, path)
    report.write_manifest(os.path.join(out, "manifest.json"), spec,
                          extras={"command": "synth", "corpus": path})
    n_fake = sum(1 for a in articles if a.label == 1)
    print(f"wrote {len(articles)} articles ({n_fake} fake) to {path}")
    return 0


def _cmd_ingest(args) -> int:
    cfg = _resolve(args)
    articles = load_corpus(args.corpus)
    vocab = build_vocab(articles, min_freq=cfg.min_freq)
    entities = build_entity_table(articles)
    labels = [a.label for a in articles]
    stats = {
        "articles": len(articles),
        "real": labels.count(0),
        "fake": labels.count(1),
        "unlabeled": labels.count(None),
        "vocab_size": len(vocab.id_to_token),
        "token_instances": sum(vocab.freq.values()),
        "entities": len(entities.id_to_surface),
    }
    out = _out_dir(args)
    report.write_graph_stats(os.path.join(out, "ingest_stats.txt"), stats)
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "ingest"})
    for key, value in stats.items():
        print(f"{key} = {value}")
    return 0


def _cmd_topics(args) -> int:
    cfg = _resolve(args)
    articles = _force_labels(load_corpus(args.corpus))
    out = _out_dir(args)
    rows = []
    for k in args.k:
        prep = prepare_corpus(articles, replace(cfg, topics=int(k)))
        rows.append((int(k), perplexity(prep.topics, prep.docs),
                     coherence(prep.topics, prep.docs)))
        print(f"k={rows[-1][0]} perplexity={rows[-1][1]:.3f} "
              f"coherence={rows[-1][2]:.4f}")
    report.write_topics_csv(os.path.join(out, "topic_eval.csv"), rows)
    plots.plot_topic_eval(os.path.join(out, "topic_eval.png"), rows)
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "topics",
                                  "k_grid": [int(k) for k in args.k]})
    return 0


def _cmd_graph(args) -> int:
    cfg = _resolve(args)
    articles = _force_labels(load_corpus(args.corpus))
    prep = prepare_corpus(articles, cfg)
    graph = untrained_graph(prep, cfg)
    stats = graph_stats(graph)
    out = _out_dir(args)
    report.write_graph_stats(os.path.join(out, "graph_stats.txt"), stats)
    plots.plot_degree_hist(os.path.join(out, "degree_hist.png"), graph)
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "graph"})
    for key, value in stats.items():
        print(f"{key} = {value}")
    return 0


def _cmd_sample(args) -> int:
    cfg = _resolve(args)
    articles = _force_labels(load_corpus(args.corpus))
    prep = prepare_corpus(articles, cfg)
    graph = untrained_graph(prep, cfg)
    roots = [int(i) for i in args.roots] if args.roots \
        else list(range(graph.n_news))
    bad = [i for i in roots if not 0 <= i < graph.n_news]
    if bad:
        raise ValueError(f"root index {bad[0]} outside 0..{graph.n_news - 1}")
    stream = walk_stream_seed(cfg)
    rows = []
    for i in roots:
        seq = sample_subgraph(graph, NodeId(NodeKind.NEWS, i), cfg.wl,
                              cfg.restart, walk_seed(stream, i))
        for pos, node in enumerate(seq.nodes):
            rows.append((articles[i].id, pos, node.kind.name.lower(),
                         node.index))
    out = _out_dir(args)
    report.write_sample_csv(os.path.join(out, "walks.csv"), rows)
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "sample", "roots": roots})
    print(f"wrote {len(rows)} walk rows for {len(roots)} roots to "
          f"{os.path.join(out, 'walks.csv')}")
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve(args)
    articles = load_corpus(args.corpus)
    out = _out_dir(args)
    rows, results = [], []
    for rnd in range(args.rounds):
        started = time.time()
        result = train(articles, replace(cfg, seed=cfg.seed + rnd))
        results.append(result)
        for split in ("train", "val", "test"):
            rows.append((rnd, split, result.metrics[split]))
        m = result.metrics["test"]
        print(f"round {rnd}: test acc={m.accuracy:.3f} "
              f"macro_f1={m.macro_f1:.3f} auc={_fmt_auc(m.auc)} "
              f"({time.time() - started:.1f}s)")
    report.write_metrics_csv(os.path.join(out, "metrics.csv"), rows)
    first = results[0]
    save_checkpoint(os.path.join(out, "model.ckpt"), first.bundle)
    test_m = first.metrics["test"]
    report.write_roc_csv(os.path.join(out, "roc.csv"), test_m.roc)
    plots.plot_roc(os.path.join(out, "roc.png"), test_m.roc, test_m.auc)
    if first.history:
        report.write_history_csv(os.path.join(out, "history.csv"),
                                 first.history)
        plots.plot_history(os.path.join(out, "history.png"), first.history)
    if "graph" in first.stats:
        report.write_graph_stats(os.path.join(out, "graph_stats.txt"),
                                 first.stats["graph"])
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "train",
                                  "rounds": args.rounds})
    if args.rounds > 1:
        _print_rounds_summary([r.metrics["test"] for r in results])
    return 0


def _cmd_eval(args) -> int:
    bundle = load_checkpoint(args.checkpoint)
    articles = load_corpus(args.corpus)
    probs, labels, m = evaluate_bundle(bundle, articles)
    out = _out_dir(args)
    report.write_metrics_csv(os.path.join(out, "metrics.csv"),
                             [(0, "all", m)])
    report.write_roc_csv(os.path.join(out, "roc.csv"), m.roc)
    plots.plot_roc(os.path.join(out, "roc.png"), m.roc, m.auc)
    report.write_manifest(os.path.join(out, "manifest.json"), bundle.config,
                          inputs=_inputs(args, checkpoint=args.checkpoint),
                          extras={"command": "eval"})
    print(f"eval: {len(articles)} articles, acc={m.accuracy:.3f} "
          f"macro_f1={m.macro_f1:.3f} auc={_fmt_auc(m.auc)}")
    return 0


def _cmd_ablate(args) -> int:
    cfg = _resolve(args)
    articles = load_corpus(args.corpus)
    out = _out_dir(args)
    rows = []
    for variant in ABLATION_VARIANTS:
        per_round = []
        for rnd in range(args.rounds):
            vcfg = ablation_config(replace(cfg, seed=cfg.seed + rnd),
                                   variant)
            per_round.append(train(articles, vcfg).metrics["test"])
        row = (variant,) + _mean_metrics(per_round)
        rows.append(row)
        print(f"{variant}: acc={row[1]:.3f} macro_f1={row[4]:.3f} "
              f"auc={_fmt_auc(row[5])}")
    report.write_ablation_csv(os.path.join(out, "ablation.csv"), rows)
    plots.plot_ablation_bars(os.path.join(out, "ablation.png"), rows)
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "ablate",
                                  "rounds": args.rounds})
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve(args)
    articles = load_corpus(args.corpus)
    out = _out_dir(args)
    swept = []

    if args.wl or args.r:
        wls = [int(v) for v in args.wl] if args.wl else [cfg.wl]
        rs = [float(v) for v in args.r] if args.r else [cfg.restart]
        rows = []
        grid = np.full((len(wls), len(rs)), np.nan)
        for i, wl in enumerate(wls):
            for j, r in enumerate(rs):
                m = train(articles, replace(cfg, wl=wl,
                                            restart=r)).metrics["test"]
                rows.append((wl, r) + _metric_tuple(m))
                grid[i, j] = m.accuracy
                print(f"wl={wl} r={r}: acc={m.accuracy:.3f} "
                      f"auc={_fmt_auc(m.auc)}")
        report.write_sweep_csv(os.path.join(out, "sweep_wl_r.csv"),
                               ("wl", "r"), rows)
        plots.plot_sweep_heatmap(os.path.join(out, "sweep_wl_r.png"),
                                 wls, rs, grid)
        swept.append("wl_r")

    for name in ("layers", "d", "lambda_t"):
        values = getattr(args, name)
        if not values:
            continue
        values = [int(v) for v in values]
        rows = []
        for value in values:
            m = train(articles,
                      replace(cfg, **{name: value})).metrics["test"]
            rows.append((value,) + _metric_tuple(m))
            print(f"{name}={value}: acc={m.accuracy:.3f} "
                  f"auc={_fmt_auc(m.auc)}")
        report.write_sweep_csv(os.path.join(out, f"sweep_{name}.csv"),
                               (name,), rows)
        plots.plot_param_lines(
            os.path.join(out, f"sweep_{name}.png"), name, values,
            [_nan_safe(r[1:]) for r in rows])
        swept.append(name)

    if not swept:
        raise UsageError(
            "sweep needs at least one grid: --wl, --r, --layers, --d "
            "or --lambda-t")
    report.write_manifest(os.path.join(out, "manifest.json"), cfg,
                          inputs=_inputs(args),
                          extras={"command": "sweep", "swept": swept})
    return 0


# ----------------------------------------------------------------- parser


def _add_common(parser, corpus=True):
    if corpus:
        parser.add_argument("--corpus", required=True, metavar="FILE",
                            help="input corpus in the tab separated format")
    parser.add_argument("--out-dir", default=".", metavar="DIR",
                        help="directory for artifacts (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsgraph",
        description="news/entity/topic graph pipeline for fake news "
                    "detection")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a planted-anomaly corpus")
    defaults = SynthSpec()
    p.add_argument("--clusters", type=int, default=defaults.clusters)
    p.add_argument("--entities-per-cluster", type=int,
                   default=defaults.entities_per_cluster)
    p.add_argument("--words-per-cluster", type=int,
                   default=defaults.words_per_cluster)
    p.add_argument("--articles-per-cluster", type=int,
                   default=defaults.articles_per_cluster)
    p.add_argument("--fake-fraction", type=float,
                   default=defaults.fake_fraction)
    p.add_argument("--sentences", type=int, default=defaults.sentences)
    p.add_argument("--words-per-sentence", type=int,
                   default=defaults.words_per_sentence)
    p.add_argument("--subtopics-per-cluster", type=int,
                   default=defaults.subtopics_per_cluster)
    p.add_argument("--real-mentions", type=_int_pair, metavar="LO,HI",
                   default=defaults.real_mentions)
    p.add_argument("--fake-mentions", type=_int_pair, metavar="LO,HI",
                   default=defaults.fake_mentions)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", metavar="FILE",
                   help="corpus path (default: OUT_DIR/corpus.tsv)")
    _add_common(p, corpus=False)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a corpus and report stats")
    _add_common(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("topics", help="topic count sweep with perplexity "
                                      "and coherence")
    _add_common(p)
    p.add_argument("--k", type=parse_grid, default=[2, 4, 8, 16],
                   metavar="GRID", help="topic counts, e.g. 2..16:2 or "
                                        "2,4,8,16 (default: 2,4,8,16)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_topics)

    p = sub.add_parser("graph", help="build the graph and report stats")
    _add_common(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("sample", help="dump restart walks as CSV")
    _add_common(p)
    p.add_argument("--roots", type=parse_grid, metavar="GRID",
                   help="news indices to walk from (default: all)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train", help="train and write metrics, checkpoint "
                                     "and figures")
    _add_common(p)
    p.add_argument("--rounds", type=int, default=1, metavar="N",
                   help="repeat with seeds SEED..SEED+N-1 and report "
                        "mean ± std (default: 1)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a corpus with a checkpoint")
    p.add_argument("--checkpoint", required=True, metavar="FILE")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="compare the model variants")
    _add_common(p)
    p.add_argument("--rounds", type=int, default=1, metavar="N",
                   help="rounds per variant, metrics averaged (default: 1)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("sweep", help="hyperparameter grids")
    _add_common(p)
    p.add_argument("--wl", type=parse_grid, metavar="GRID",
                   help="walk length grid, e.g. 4..15")
    p.add_argument("--r", type=parse_grid, metavar="GRID",
                   help="restart probability grid, e.g. 0.1..0.8")
    p.add_argument("--layers", type=parse_grid, metavar="GRID")
    p.add_argument("--d", type=parse_grid, metavar="GRID")
    p.add_argument("--lambda-t", type=parse_grid, metavar="GRID")
    _add_config_flags(p, exclude=("wl", "restart", "layers", "d",
                                  "lambda_t"))
    p.set_defaults(func=_cmd_sweep)

    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (CorpusError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
