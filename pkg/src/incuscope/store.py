"""Corpus import and the on-disk artifact tree.

Every project-month gets its own directory of small JSON files so any
month of any project can be served or inspected without touching the
rest:

    root/
      corpus/                 verbatim copies of the input CSVs
                              (+ aliases.txt, ingest_errors.txt)
      <project_id>/
        info.json             project card
        forecast.json         written by the forecast stage
        <month>/
          social.json         bipartite communication network
          tech.json           bipartite contribution network
          metrics.json        network measures for both flavors
          report.json         only for months with a filed report
          drilldown.json      per-developer email/commit records

Serialization is deterministic: keys sorted, floats quantized to 9
significant digits at bundle assembly, two-space indent, trailing
newline.  Building the same corpus twice yields byte-identical trees,
which keeps the artifact tree diffable and lets the HTTP layer serve
stored bytes verbatim.
"""

from __future__ import annotations

import csv
import json
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .forecast import DEFAULT_TURN_THRESHOLD, detect_turns
from .graph import (
    SOCIAL,
    TECHNICAL,
    Edge,
    Snapshot,
    build_social_snapshot,
    build_technical_snapshot,
)
from .ingest import (
    ALIASES_FILENAME,
    COMMITS_FILENAME,
    CORPUS_FILENAMES,
    EMAILS_FILENAME,
    ERROR_REPORT_FILENAME,
    PROJECTS_FILENAME,
    REPORTS_FILENAME,
    Commit,
    CorpusFormatError,
    Email,
    IdentityMap,
    MonthlyReport,
    ProjectInfo,
    STATUS_GRADUATED,
    STATUS_RETIRED,
    format_timestamp,
    month_index,
    parse_alias_file,
    parse_commit_records,
    parse_email_records,
    parse_project_records,
    parse_report_records,
    resolve_identities,
)
from .metrics import (
    MetricsRecord,
    compute_metrics,
    feature_sequence,
    node_percentages,
)

SCHEMA_VERSION = 1

SOCIAL_FILENAME = "social.json"
TECH_FILENAME = "tech.json"
METRICS_FILENAME = "metrics.json"
REPORT_FILENAME = "report.json"
DRILLDOWN_FILENAME = "drilldown.json"
INFO_FILENAME = "info.json"
FORECAST_FILENAME = "forecast.json"

CORPUS_DIRNAME = "corpus"

# JSON "flavor" tags, also the file name stems
FLAVOR_TAGS = {SOCIAL: "social", TECHNICAL: "tech"}
FLAVOR_FROM_TAG = {tag: flavor for flavor, tag in FLAVOR_TAGS.items()}


def round9(x: float) -> float:
    """Quantize to 9 significant decimal digits (the serialization grid)."""
    return float(f"{float(x):.9g}")


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ValueError(f"missing artifact file {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt artifact file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"corrupt artifact file {path}: not a JSON object")
    return doc


def _field(doc: dict, key: str, path: Path):
    if key not in doc:
        raise ValueError(f"artifact file {path}: missing field {key!r}")
    return doc[key]


@dataclass
class Corpus:
    """A fully parsed and identity-resolved input corpus."""

    projects: dict[str, ProjectInfo]
    emails: list[Email]
    commits: list[Commit]
    reports: dict[tuple[str, int], MonthlyReport]
    identities: IdentityMap
    alias_groups: list[list[str]]
    errors: list[str]

    def project_emails(self, project_id: str) -> list[Email]:
        return [e for e in self.emails if e.project_id == project_id]

    def project_commits(self, project_id: str) -> list[Commit]:
        return [c for c in self.commits if c.project_id == project_id]


@dataclass(frozen=True)
class CorpusSummary:
    num_projects: int
    num_graduated: int
    num_retired: int
    num_emails: int
    num_commits: int
    mean_months_in_incubation: float


def _read_csv_rows(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def import_csv_corpus(directory: str | Path, write_report: bool = True) -> Corpus:
    """Parse a corpus directory into validated, identity-resolved records.

    Events outside a project's incubation window, or referencing unknown
    projects, are dropped and noted in the error report.  The report is
    written to ``<directory>/ingest_errors.txt`` unless ``write_report``
    is false (pass false for read-only directories).
    """
    directory = Path(directory)
    for name in CORPUS_FILENAMES:
        if not (directory / name).is_file():
            raise CorpusFormatError(f"corpus directory {directory}: missing {name}")

    project_list = parse_project_records(_read_csv_rows(directory / PROJECTS_FILENAME))
    if not project_list:
        raise CorpusFormatError(f"corpus directory {directory}: no projects")
    projects = {p.project_id: p for p in project_list}

    emails_raw, email_errors = parse_email_records(
        _read_csv_rows(directory / EMAILS_FILENAME)
    )
    commits_raw, commit_errors = parse_commit_records(
        _read_csv_rows(directory / COMMITS_FILENAME)
    )
    reports_raw, report_errors = parse_report_records(
        _read_csv_rows(directory / REPORTS_FILENAME)
    )

    errors = [f"{EMAILS_FILENAME} {e}" for e in email_errors]
    errors += [f"{COMMITS_FILENAME} {e}" for e in commit_errors]
    errors += [f"{REPORTS_FILENAME} {e}" for e in report_errors]

    def in_window(kind: str, filename: str, record_id: str, pid: str, ts) -> bool:
        project = projects.get(pid)
        if project is None:
            errors.append(f"{filename}: {kind} {record_id}: unknown project {pid!r}")
            return False
        try:
            m = month_index(ts, project.incubation_start)
        except ValueError:
            errors.append(
                f"{filename}: {kind} {record_id}: timestamp precedes incubation start"
            )
            return False
        if m > project.months_in_incubation:
            errors.append(
                f"{filename}: {kind} {record_id}: month {m} outside window "
                f"1..{project.months_in_incubation}"
            )
            return False
        return True

    emails = [
        e for e in emails_raw
        if in_window("message", EMAILS_FILENAME, e.message_id, e.project_id, e.timestamp)
    ]
    commits = [
        c for c in commits_raw
        if in_window("commit", COMMITS_FILENAME, c.commit_id, c.project_id, c.timestamp)
    ]
    emails.sort(key=lambda e: (e.timestamp, e.message_id))
    commits.sort(key=lambda c: (c.timestamp, c.commit_id))

    reports: dict[tuple[str, int], MonthlyReport] = {}
    for r in reports_raw:
        project = projects.get(r.project_id)
        if project is None:
            errors.append(
                f"{REPORTS_FILENAME}: report for unknown project {r.project_id!r}"
            )
            continue
        if r.month > project.months_in_incubation:
            errors.append(
                f"{REPORTS_FILENAME}: {r.project_id} month {r.month} outside window "
                f"1..{project.months_in_incubation}"
            )
            continue
        key = (r.project_id, r.month)
        if key in reports:
            errors.append(
                f"{REPORTS_FILENAME}: duplicate report for {r.project_id} "
                f"month {r.month}, keeping the first"
            )
            continue
        reports[key] = r

    alias_path = directory / ALIASES_FILENAME
    alias_groups = (
        parse_alias_file(alias_path.read_text()) if alias_path.is_file() else []
    )
    identities = resolve_identities(emails, commits, alias_groups)

    if write_report:
        report_text = "".join(line + "\n" for line in errors)
        (directory / ERROR_REPORT_FILENAME).write_text(report_text)

    return Corpus(
        projects=projects,
        emails=emails,
        commits=commits,
        reports=reports,
        identities=identities,
        alias_groups=alias_groups,
        errors=errors,
    )


def dataset_summary(corpus: Corpus) -> CorpusSummary:
    """Headline corpus counts and the mean incubation length in months."""
    projects = list(corpus.projects.values())
    if not projects:
        raise ValueError("empty corpus")
    return CorpusSummary(
        num_projects=len(projects),
        num_graduated=sum(1 for p in projects if p.status == STATUS_GRADUATED),
        num_retired=sum(1 for p in projects if p.status == STATUS_RETIRED),
        num_emails=len(corpus.emails),
        num_commits=len(corpus.commits),
        mean_months_in_incubation=(
            sum(p.months_in_incubation for p in projects) / len(projects)
        ),
    )


def corpus_dir(root: str | Path) -> Path:
    return Path(root) / CORPUS_DIRNAME


def copy_corpus(source_dir: str | Path, root: str | Path) -> Path:
    """Copy the corpus CSVs (and alias file, if any) into the tree."""
    source_dir = Path(source_dir)
    target = corpus_dir(root)
    target.mkdir(parents=True, exist_ok=True)
    for name in CORPUS_FILENAMES:
        shutil.copyfile(source_dir / name, target / name)
    if (source_dir / ALIASES_FILENAME).is_file():
        shutil.copyfile(source_dir / ALIASES_FILENAME, target / ALIASES_FILENAME)
    return target


def import_tree_corpus(root: str | Path) -> Corpus:
    """Re-import the corpus copy stored inside an artifact tree."""
    return import_csv_corpus(corpus_dir(root), write_report=False)


@dataclass(frozen=True)
class EmailRef:
    """Drilldown row for one email."""

    message_id: str
    ts: str
    subject: str


@dataclass(frozen=True)
class CommitRef:
    """Drilldown row for one commit."""

    commit_id: str
    ts: str
    files: tuple[str, ...]


@dataclass
class MonthBundle:
    """Everything stored for one project-month."""

    project_id: str
    month: int
    social: Snapshot
    technical: Snapshot
    social_metrics: MetricsRecord
    technical_metrics: MetricsRecord
    labels: dict[str, str]
    report: MonthlyReport | None
    emails_index: dict[str, tuple[EmailRef, ...]]
    commits_index: dict[str, tuple[CommitRef, ...]]


def _quantize_metrics(record: MetricsRecord) -> MetricsRecord:
    return replace(
        record,
        mean_degree=round9(record.mean_degree),
        clustering_coefficient=round9(record.clustering_coefficient),
    )


def assemble_month_bundle(corpus: Corpus, project_id: str, month: int) -> MonthBundle:
    """Build the complete bundle for one project-month from the corpus."""
    project = corpus.projects[project_id]
    if not 1 <= month <= project.months_in_incubation:
        raise ValueError(
            f"month {month} outside {project_id} window "
            f"1..{project.months_in_incubation}"
        )
    emails = corpus.project_emails(project_id)
    commits = corpus.project_commits(project_id)
    ids = corpus.identities
    social = build_social_snapshot(emails, ids, month, project.incubation_start)
    technical = build_technical_snapshot(commits, ids, month, project.incubation_start)

    labels: dict[str, str] = {}
    for node in (*social.left_nodes, *social.right_nodes, *technical.left_nodes):
        labels[node] = ids.display_name(node)
    for node in technical.right_nodes:
        labels.setdefault(node, node)

    emails_index: dict[str, list[EmailRef]] = {}
    for e in emails:
        if month_index(e.timestamp, project.incubation_start) != month:
            continue
        ref = EmailRef(e.message_id, format_timestamp(e.timestamp), e.subject)
        emails_index.setdefault(ids.canon(e.sender), []).append(ref)
    commits_index: dict[str, list[CommitRef]] = {}
    for c in commits:
        if month_index(c.timestamp, project.incubation_start) != month:
            continue
        ref = CommitRef(c.commit_id, format_timestamp(c.timestamp), tuple(c.files))
        commits_index.setdefault(ids.canon(c.author), []).append(ref)
    # newest first, as served
    def sort_newest(refs, id_attr):
        refs.sort(key=lambda r: (r.ts, getattr(r, id_attr)), reverse=True)

    for refs in emails_index.values():
        sort_newest(refs, "message_id")
    for refs in commits_index.values():
        sort_newest(refs, "commit_id")

    return MonthBundle(
        project_id=project_id,
        month=month,
        social=social,
        technical=technical,
        social_metrics=_quantize_metrics(compute_metrics(social)),
        technical_metrics=_quantize_metrics(compute_metrics(technical)),
        labels=labels,
        report=corpus.reports.get((project_id, month)),
        emails_index={k: tuple(v) for k, v in emails_index.items()},
        commits_index={k: tuple(v) for k, v in commits_index.items()},
    )


def snapshot_doc(snapshot: Snapshot, labels: dict[str, str]) -> dict:
    """Network JSON with per-side percentage shares precomputed for the UI."""
    pct = node_percentages(snapshot)
    nodes = [
        {"id": n, "side": "L", "label": labels.get(n, n),
         "pct": round9(pct["left"][n])}
        for n in snapshot.left_nodes
    ] + [
        {"id": n, "side": "R", "label": labels.get(n, n),
         "pct": round9(pct["right"][n])}
        for n in snapshot.right_nodes
    ]
    return {
        "schema": SCHEMA_VERSION,
        "project": snapshot.project_id,
        "flavor": FLAVOR_TAGS[snapshot.flavor],
        "month_from": snapshot.month_from,
        "month_to": snapshot.month_to,
        "nodes": nodes,
        "links": [
            {"source": e.source, "target": e.target, "weight": e.weight}
            for e in snapshot.edges
        ],
    }


def snapshot_from_doc(doc: dict, path: Path) -> tuple[Snapshot, dict[str, str]]:
    flavor_tag = _field(doc, "flavor", path)
    if flavor_tag not in FLAVOR_FROM_TAG:
        raise ValueError(f"artifact file {path}: unknown flavor {flavor_tag!r}")
    left, right, labels = [], [], {}
    for node in _field(doc, "nodes", path):
        side = _field(node, "side", path)
        (left if side == "L" else right).append(_field(node, "id", path))
        labels[node["id"]] = _field(node, "label", path)
    edges = [
        Edge(_field(l, "source", path), _field(l, "target", path),
             int(_field(l, "weight", path)))
        for l in _field(doc, "links", path)
    ]
    snapshot = Snapshot(
        project_id=_field(doc, "project", path),
        flavor=FLAVOR_FROM_TAG[flavor_tag],
        month_from=int(_field(doc, "month_from", path)),
        month_to=int(_field(doc, "month_to", path)),
        left_nodes=left,
        right_nodes=right,
        edges=edges,
    )
    return snapshot, labels


def metrics_doc(social_rec: MetricsRecord, technical_rec: MetricsRecord) -> dict:
    def side(rec: MetricsRecord) -> dict:
        return {
            "nodes": rec.num_nodes,
            "left": rec.num_left_nodes,
            "right": rec.num_right_nodes,
            "edges": rec.num_edges,
            "mean_degree": round9(rec.mean_degree),
            "clustering": round9(rec.clustering_coefficient),
        }

    return {
        "schema": SCHEMA_VERSION,
        "social": side(social_rec),
        "tech": side(technical_rec),
    }


def _metrics_from_doc(
    doc: dict, path: Path, project_id: str, month: int
) -> tuple[MetricsRecord, MetricsRecord]:
    def side(tag: str, flavor: str) -> MetricsRecord:
        d = _field(doc, tag, path)
        return MetricsRecord(
            project_id=project_id,
            flavor=flavor,
            month_from=month,
            month_to=month,
            num_left_nodes=int(_field(d, "left", path)),
            num_right_nodes=int(_field(d, "right", path)),
            num_nodes=int(_field(d, "nodes", path)),
            num_edges=int(_field(d, "edges", path)),
            mean_degree=float(_field(d, "mean_degree", path)),
            clustering_coefficient=float(_field(d, "clustering", path)),
        )

    return side("social", SOCIAL), side("tech", TECHNICAL)


def drilldown_doc(bundle: MonthBundle) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "emails": {
            dev: [
                {"message_id": r.message_id, "ts": r.ts, "subject": r.subject}
                for r in refs
            ]
            for dev, refs in bundle.emails_index.items()
        },
        "commits": {
            dev: [
                {"commit_id": r.commit_id, "ts": r.ts, "files": list(r.files)}
                for r in refs
            ]
            for dev, refs in bundle.commits_index.items()
        },
    }


def info_doc(project: ProjectInfo) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "project_id": project.project_id,
        "name": project.name,
        "homepage_url": project.homepage_url,
        "status": project.status,
        "sponsor": project.sponsor,
        "description": project.description,
        "incubation_start": project.incubation_start.isoformat(),
        "months": project.months_in_incubation,
    }


def month_dir(root: str | Path, project_id: str, month: int) -> Path:
    return Path(root) / project_id / str(month)


def write_month_bundle(
    bundle: MonthBundle, root: str | Path, info: ProjectInfo | None = None
) -> list[Path]:
    """Write one project-month to the tree; optionally also info.json."""
    directory = month_dir(root, bundle.project_id, bundle.month)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, doc: dict) -> None:
        path = directory / name
        write_json(path, doc)
        written.append(path)

    emit(SOCIAL_FILENAME, snapshot_doc(bundle.social, bundle.labels))
    emit(TECH_FILENAME, snapshot_doc(bundle.technical, bundle.labels))
    emit(METRICS_FILENAME, metrics_doc(bundle.social_metrics, bundle.technical_metrics))
    emit(DRILLDOWN_FILENAME, drilldown_doc(bundle))
    if bundle.report is not None:
        emit(REPORT_FILENAME, {
            "schema": SCHEMA_VERSION,
            "month": bundle.report.month,
            "text": bundle.report.text,
        })
    if info is not None:
        info_path = Path(root) / bundle.project_id / INFO_FILENAME
        write_json(info_path, info_doc(info))
        written.append(info_path)
    return written


def read_month_bundle(project_id: str, month: int, root: str | Path) -> MonthBundle:
    """Inverse of write_month_bundle."""
    directory = month_dir(root, project_id, month)
    social_doc = read_json(directory / SOCIAL_FILENAME)
    tech_doc = read_json(directory / TECH_FILENAME)
    social, social_labels = snapshot_from_doc(social_doc, directory / SOCIAL_FILENAME)
    technical, tech_labels = snapshot_from_doc(tech_doc, directory / TECH_FILENAME)

    metrics_path = directory / METRICS_FILENAME
    social_rec, tech_rec = _metrics_from_doc(
        read_json(metrics_path), metrics_path, project_id, month
    )

    drill_path = directory / DRILLDOWN_FILENAME
    drill = read_json(drill_path)
    emails_index = {
        dev: tuple(
            EmailRef(_field(r, "message_id", drill_path), _field(r, "ts", drill_path),
                     _field(r, "subject", drill_path))
            for r in refs
        )
        for dev, refs in _field(drill, "emails", drill_path).items()
    }
    commits_index = {
        dev: tuple(
            CommitRef(_field(r, "commit_id", drill_path), _field(r, "ts", drill_path),
                      tuple(_field(r, "files", drill_path)))
            for r in refs
        )
        for dev, refs in _field(drill, "commits", drill_path).items()
    }

    report = None
    report_path = directory / REPORT_FILENAME
    if report_path.is_file():
        doc = read_json(report_path)
        report = MonthlyReport(
            project_id, int(_field(doc, "month", report_path)),
            _field(doc, "text", report_path),
        )

    return MonthBundle(
        project_id=project_id,
        month=month,
        social=social,
        technical=technical,
        social_metrics=social_rec,
        technical_metrics=tech_rec,
        labels={**tech_labels, **social_labels},
        report=report,
        emails_index=emails_index,
        commits_index=commits_index,
    )


def build_artifact_tree(corpus: Corpus, root: str | Path) -> list[str]:
    """Write info.json and every month bundle for every project.

    Returns the project ids built, sorted.  Every month in the incubation
    window gets a bundle, including months with no activity at all.
    """
    root = Path(root)
    project_ids = sorted(corpus.projects)
    for pid in project_ids:
        project = corpus.projects[pid]
        for month in range(1, project.months_in_incubation + 1):
            bundle = assemble_month_bundle(corpus, pid, month)
            write_month_bundle(bundle, root, info=project if month == 1 else None)
    return project_ids


def forecast_doc(probabilities, threshold: float = DEFAULT_TURN_THRESHOLD) -> dict:
    """Forecast JSON: quantized probabilities plus the turning points
    computed from those same quantized values, so stored deltas are
    consistent with stored probabilities."""
    quantized = [round9(p) for p in probabilities]
    return {
        "schema": SCHEMA_VERSION,
        "probabilities": quantized,
        "turns": [
            {"month": t.month, "kind": t.kind, "delta": round9(t.delta)}
            for t in detect_turns(quantized, threshold)
        ],
    }


def write_forecast(
    root: str | Path,
    project_id: str,
    probabilities,
    threshold: float = DEFAULT_TURN_THRESHOLD,
) -> Path:
    path = Path(root) / project_id / FORECAST_FILENAME
    write_json(path, forecast_doc(probabilities, threshold))
    return path


def list_tree_projects(root: str | Path) -> list[str]:
    """Project ids present in a built tree (directories with info.json)."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"artifact root {root} is not a directory")
    return sorted(
        p.name for p in root.iterdir()
        if p.is_dir() and (p / INFO_FILENAME).is_file()
    )


def load_feature_matrix(root: str | Path, project_id: str, months: int) -> np.ndarray:
    """(months, features) matrix for a project from its stored metrics."""
    records = []
    for month in range(1, months + 1):
        path = month_dir(root, project_id, month) / METRICS_FILENAME
        social_rec, tech_rec = _metrics_from_doc(
            read_json(path), path, project_id, month
        )
        records.extend((social_rec, tech_rec))
    return feature_sequence(records, months)
