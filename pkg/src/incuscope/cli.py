"""Command line pipeline: gen, import, build, train, forecast, serve,
summary.

A typical run goes corpus directory -> artifact tree -> model -> service:

    incuscope gen genspec.json -o ./csv
    incuscope import ./csv -o ./tree
    incuscope build ./tree
    incuscope train ./tree -o model.json --seed 7
    incuscope forecast ./tree --model model.json
    incuscope serve ./tree --addr 127.0.0.1:8000

Exit codes: 0 success, 1 pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpusgen import GenSpec, genspec_from_dict, write_corpus
from .forecast import (
    DEFAULT_TURN_THRESHOLD,
    LabeledSequence,
    TrainConfig,
    forecast_series,
    load_model,
    save_model,
    train,
)
from .ingest import STATUS_GRADUATED, STATUS_RETIRED
from .service import ApiConfig, serve_forever
from .store import (
    build_artifact_tree,
    copy_corpus,
    dataset_summary,
    import_csv_corpus,
    import_tree_corpus,
    load_feature_matrix,
    write_forecast,
)


def _cmd_gen(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"generator spec {args.spec}: {exc}") from exc
    spec = genspec_from_dict(doc) if doc else GenSpec()
    paths = write_corpus(spec, args.output)
    print(f"generated {spec.num_projects} projects into {Path(args.output)}")
    for path in paths:
        print(f"  {path.name}")
    return 0


def _cmd_import(args: argparse.Namespace) -> int:
    target = copy_corpus(args.csv_dir, args.output)
    corpus = import_csv_corpus(target, write_report=True)
    summary = dataset_summary(corpus)
    print(
        f"imported {summary.num_projects} projects, "
        f"{summary.num_emails} emails, {summary.num_commits} commits "
        f"into {target}"
    )
    if corpus.errors:
        print(f"  {len(corpus.errors)} rows skipped, see {target}/ingest_errors.txt")
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    corpus = import_tree_corpus(args.tree)
    project_ids = build_artifact_tree(corpus, args.tree)
    months = sum(
        corpus.projects[pid].months_in_incubation for pid in project_ids
    )
    print(f"built {len(project_ids)} projects, {months} month bundles")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = import_tree_corpus(args.tree)
    labels = {STATUS_GRADUATED: 1, STATUS_RETIRED: 0}
    dataset = []
    for pid in sorted(corpus.projects):
        project = corpus.projects[pid]
        if project.status not in labels:
            print(f"  skipping {pid}: still incubating, no label")
            continue
        features = load_feature_matrix(
            args.tree, pid, project.months_in_incubation
        )
        dataset.append(
            LabeledSequence(features, labels[project.status], project_id=pid)
        )
    config = TrainConfig(
        hidden_dim=args.hidden,
        dropout_rate=args.dropout,
        epochs=args.epochs,
    )
    model, history = train(dataset, config, seed=args.seed)
    save_model(model, args.output)
    last = history[-1]
    print(
        f"trained {last.epoch} epochs on {len(dataset)} projects: "
        f"loss {last.loss:.4f}, accuracy {last.accuracy:.3f}"
    )
    print(f"saved model to {args.output}")
    return 0


def _cmd_forecast(args: argparse.Namespace) -> int:
    corpus = import_tree_corpus(args.tree)
    model = load_model(args.model)
    count = 0
    for pid in sorted(corpus.projects):
        months = corpus.projects[pid].months_in_incubation
        features = load_feature_matrix(args.tree, pid, months)
        series = forecast_series(model, features, project_id=pid)
        write_forecast(args.tree, pid, series.probabilities, args.threshold)
        count += 1
    print(f"wrote forecasts for {count} projects")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    host, _, port_text = args.addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"--addr must be host:port, got {args.addr!r}")
    config = ApiConfig(
        root=Path(args.tree),
        host=host,
        port=int(port_text),
        static_dir=Path(args.static) if args.static else None,
        cors_origins=tuple(args.cors or ()),
    )
    print(f"serving {config.root} on http://{config.host}:{config.port}")
    serve_forever(config)
    return 0


def _cmd_summary(args: argparse.Namespace) -> int:
    corpus = import_tree_corpus(args.tree)
    s = dataset_summary(corpus)
    incubating = s.num_projects - s.num_graduated - s.num_retired
    print(
        f"projects: {s.num_projects} "
        f"({s.num_graduated} graduated, {s.num_retired} retired, "
        f"{incubating} incubating)"
    )
    print(f"emails: {s.num_emails}")
    print(f"commits: {s.num_commits}")
    print(f"mean months in incubation: {s.mean_months_in_incubation:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incuscope",
        description=(
            "Monthly socio-technical networks and sustainability forecasts "
            "for incubating open source projects."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("spec", help="generator settings JSON ({} for defaults)")
    p.add_argument("--output", "-o", required=True, help="corpus directory to write")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("import", help="validate a corpus and seed an artifact tree")
    p.add_argument("csv_dir", help="directory with the four corpus CSVs")
    p.add_argument("--output", "-o", required=True, help="artifact tree root")
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("build", help="build all month bundles in a tree")
    p.add_argument("tree", help="artifact tree root")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("train", help="train the forecaster on a built tree")
    p.add_argument("tree", help="artifact tree root")
    p.add_argument("--output", "-o", required=True, help="model checkpoint path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.3)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("forecast", help="write per-project forecast files")
    p.add_argument("tree", help="artifact tree root")
    p.add_argument("--model", required=True, help="model checkpoint path")
    p.add_argument("--threshold", type=float, default=DEFAULT_TURN_THRESHOLD)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("serve", help="serve a built tree over HTTP")
    p.add_argument("tree", help="artifact tree root")
    p.add_argument("--addr", default="127.0.0.1:8000", help="host:port to bind")
    p.add_argument("--static", help="directory of dashboard assets to host at /")
    p.add_argument("--cors", action="append", help="allowed CORS origin (repeatable)")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("summary", help="print corpus counts for a tree")
    p.add_argument("tree", help="artifact tree root")
    p.set_defaults(func=_cmd_summary)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
