"""Shared fixtures: tiny record builders and a small prebuilt artifact tree."""

from __future__ import annotations

import json
from datetime import date, datetime, timezone
from pathlib import Path

import pytest

from incuscope.corpusgen import GenSpec, write_corpus
from incuscope.forecast import LabeledSequence, TrainConfig, forecast_series, train
from incuscope.ingest import Commit, Email, ProjectInfo, resolve_identities
from incuscope.store import (
    build_artifact_tree,
    copy_corpus,
    import_csv_corpus,
    load_feature_matrix,
    write_forecast,
)


def ts(text: str) -> datetime:
    """Shorthand RFC 3339 timestamp for fixtures."""
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(
        timezone.utc
    )


def make_email(
    message_id: str,
    sender: str,
    recipients: list[str],
    when: str,
    subject: str = "topic",
    reply_to_id: str | None = None,
    project_id: str = "proj",
    body: str = "",
) -> Email:
    return Email(
        message_id=message_id,
        project_id=project_id,
        sender=sender,
        recipients=recipients,
        reply_to_id=reply_to_id,
        timestamp=ts(when),
        subject=subject,
        body=body,
    )


def make_commit(
    commit_id: str,
    author: str,
    when: str,
    files: list[str],
    project_id: str = "proj",
) -> Commit:
    return Commit(
        commit_id=commit_id,
        project_id=project_id,
        author=author,
        timestamp=ts(when),
        files=files,
    )


def make_project(
    project_id: str = "proj",
    status: str = "graduated",
    start: str = "2019-01-01",
    months: int = 6,
) -> ProjectInfo:
    return ProjectInfo(
        project_id=project_id,
        name=project_id.title(),
        homepage_url=f"https://{project_id}.example.org",
        status=status,
        sponsor="Incubator",
        description=f"{project_id} fixture",
        incubation_start=date.fromisoformat(start),
        months_in_incubation=months,
    )


def identities_for(emails=(), commits=()):
    return resolve_identities(list(emails), list(commits))


SMALL_SPEC = GenSpec(
    num_projects=6, months_min=4, months_max=7, devs_min=3, devs_max=5, seed=20
)


@pytest.fixture(scope="session")
def small_tree(tmp_path_factory) -> Path:
    """A fully built artifact tree (6 synthetic projects) with forecasts."""
    base = tmp_path_factory.mktemp("tree-fixture")
    csv_dir = base / "csv"
    tree = base / "tree"
    write_corpus(SMALL_SPEC, csv_dir)
    copy_corpus(csv_dir, tree)
    corpus = import_csv_corpus(tree / "corpus", write_report=True)
    build_artifact_tree(corpus, tree)

    dataset = []
    for pid in sorted(corpus.projects):
        project = corpus.projects[pid]
        label = 1 if project.status == "graduated" else 0
        features = load_feature_matrix(tree, pid, project.months_in_incubation)
        dataset.append(LabeledSequence(features, label, project_id=pid))
    model, _ = train(
        dataset, TrainConfig(hidden_dim=8, dropout_rate=0.3, epochs=25), seed=4
    )
    for seq in dataset:
        series = forecast_series(model, seq.features, project_id=seq.project_id)
        write_forecast(tree, seq.project_id, series.probabilities)
    return tree


@pytest.fixture(scope="session")
def small_corpus(small_tree) -> object:
    return import_csv_corpus(small_tree / "corpus", write_report=False)
