"""Deterministic synthetic corpus generator.

Produces the four input CSVs (emails, commits, projects, reports) for a
configurable number of incubating projects.  Under the default
``growing-graduates`` label rule, even-indexed projects graduate and
odd-indexed ones retire, and per-developer activity follows opposite
linear ramps so the two outcomes are learnable from monthly network
features:

    graduated: rate(m) = base_rate + slope * (m - 1)         (growing)
    retired:   rate(m) = base_rate + slope * (months - m)    (fading)

Under the ``random`` rule, labels are coin flips and activity holds flat
at the ramp midpoint, which makes the outcome unlearnable by design (a
null corpus for sanity experiments).

Per-month email and commit counts are Poisson draws around
rate(m) * developer count.  Every project gets its own counter-based
random stream keyed by (seed, project index), so adding projects never
perturbs existing ones and identical specs reproduce the corpus byte for
byte.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .ingest import (
    COMMIT_COLUMNS,
    COMMITS_FILENAME,
    CORPUS_FILENAMES,
    EMAIL_COLUMNS,
    EMAILS_FILENAME,
    LIST_SEPARATOR,
    PROJECT_COLUMNS,
    PROJECTS_FILENAME,
    REPORT_COLUMNS,
    REPORTS_FILENAME,
    STATUS_GRADUATED,
    STATUS_RETIRED,
    format_timestamp,
)

GROWING_GRADUATES = "growing-graduates"
RANDOM_LABELS = "random"

_ADJECTIVES = (
    "amber", "basalt", "cedar", "delta", "ember", "fjord", "granite", "harbor",
    "indigo", "juniper", "krypton", "lumen", "mesa", "nimbus", "onyx", "prairie",
)

_NOUNS = (
    "falcon", "beacon", "quarry", "drift", "lattice", "summit", "anvil", "compass",
    "garnet", "meridian", "pylon", "quill", "rudder", "sextant", "tundra", "vertex",
)

_FIRST_NAMES = (
    "alex", "bao", "carmen", "dmitri", "elena", "farid", "grace", "hiro",
    "ines", "jonas", "kavya", "liam", "mara", "nadia", "omar", "priya",
    "quentin", "rosa", "sven", "tala",
)

_LAST_NAMES = (
    "abara", "bishop", "castillo", "duran", "eriksen", "fontaine", "gupta",
    "hansen", "ito", "jansen", "kaur", "lindqvist", "moreau", "novak",
    "okafor", "petrov", "quast", "reyes", "sato", "tanaka",
)

_TOPICS = (
    "release planning", "build failures", "api design", "license review",
    "website refresh", "windows support", "performance regression",
    "new committer vote", "documentation gaps", "dependency upgrade",
    "security audit", "roadmap discussion",
)

_SOURCE_FILES = (
    "src/core/engine.py", "src/core/scheduler.py", "src/io/reader.py",
    "src/io/writer.py", "src/util/config.py", "src/util/log.py",
    "tests/test_engine.py", "tests/test_reader.py", "docs/index.md",
    "docs/setup.md", "build.gradle", "pom.xml", "README.md", "NOTICE",
    "scripts/release.sh", "src/main/java/Server.java",
)

_EPOCH = datetime(2018, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class GenSpec:
    """Knobs for the synthetic corpus.

    Rates are per developer-month; a project's monthly event count is a
    Poisson draw around rate(month) times its developer count.
    """

    num_projects: int = 40
    months_min: int = 12
    months_max: int = 24
    devs_min: int = 4
    devs_max: int = 8
    base_rate: float = 1.0
    slope: float = 0.5
    commit_factor: float = 0.8
    broadcast_probability: float = 0.7
    reply_probability: float = 0.5
    label_rule: str = GROWING_GRADUATES
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_projects < 1:
            raise ValueError("num_projects must be at least 1")
        if not 1 <= self.months_min <= self.months_max:
            raise ValueError("months range must satisfy 1 <= min <= max")
        if not 1 <= self.devs_min <= self.devs_max:
            raise ValueError("developer range must satisfy 1 <= min <= max")
        if self.base_rate <= 0 or self.slope < 0 or self.commit_factor < 0:
            raise ValueError("rates must be positive (slope may be zero)")
        for name in ("broadcast_probability", "reply_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.label_rule not in (GROWING_GRADUATES, RANDOM_LABELS):
            raise ValueError(f"unknown label_rule {self.label_rule!r}")


def genspec_from_dict(doc: dict) -> GenSpec:
    """Build a GenSpec from a JSON-style dict, rejecting unknown keys."""
    known = {f.name for f in fields(GenSpec)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown generator settings: {', '.join(unknown)}")
    return GenSpec(**doc)


def _project_slug(index: int) -> str:
    adj = _ADJECTIVES[index % len(_ADJECTIVES)]
    noun = _NOUNS[(index // len(_ADJECTIVES)) % len(_NOUNS)]
    cycle = index // (len(_ADJECTIVES) * len(_NOUNS))
    return f"{adj}-{noun}" if cycle == 0 else f"{adj}-{noun}-{cycle + 1}"


def _month_start(start: datetime, month: int) -> datetime:
    total = start.year * 12 + (start.month - 1) + (month - 1)
    return start.replace(year=total // 12, month=total % 12 + 1, day=1)


def _rate(spec: GenSpec, label: int, month: int, months: int) -> float:
    if spec.label_rule == RANDOM_LABELS:
        return spec.base_rate + spec.slope * (months - 1) / 2.0
    if label == 1:
        return spec.base_rate + spec.slope * (month - 1)
    return spec.base_rate + spec.slope * (months - month)


def generate_corpus(spec: GenSpec) -> dict[str, list[dict[str, str]]]:
    """Generate all four tables as lists of row dicts keyed by filename."""
    emails: list[dict[str, str]] = []
    commits: list[dict[str, str]] = []
    projects: list[dict[str, str]] = []
    reports: list[dict[str, str]] = []

    for index in range(spec.num_projects):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([spec.seed, index]))
        )
        if spec.label_rule == RANDOM_LABELS:
            label = int(rng.integers(2))
        else:
            label = 1 if index % 2 == 0 else 0
        pid = _project_slug(index)
        months = int(rng.integers(spec.months_min, spec.months_max + 1))
        start = _month_start(_EPOCH, int(rng.integers(1, 37)))
        dev_list = f"dev@{pid}.apache.org"

        n_devs = int(rng.integers(spec.devs_min, spec.devs_max + 1))
        devs = []
        for k in range(n_devs):
            first = _FIRST_NAMES[int(rng.integers(len(_FIRST_NAMES)))]
            last = _LAST_NAMES[int(rng.integers(len(_LAST_NAMES)))]
            devs.append((f"{first.capitalize()} {last.capitalize()}",
                         f"{first}.{last}.{k}@{pid}.apache.org"))

        projects.append({
            "project_id": pid,
            "name": pid.replace("-", " ").title(),
            "homepage_url": f"https://{pid}.example.org",
            "status": STATUS_GRADUATED if label == 1 else STATUS_RETIRED,
            "sponsor": "Incubator",
            "description": f"Synthetic incubating project {pid}.",
            "incubation_start": start.date().isoformat(),
            "months": str(months),
        })

        counter = 0
        broadcast_log: list[tuple[str, str]] = []

        def sender_field(dev: tuple[str, str]) -> str:
            name, addr = dev
            return f"{name} <{addr}>" if rng.random() < 0.5 else addr

        for month in range(1, months + 1):
            rate = _rate(spec, label, month, months) * n_devs
            month_begin = _month_start(start, month)
            n_emails = int(rng.poisson(rate))
            n_commits = int(rng.poisson(rate * spec.commit_factor))

            for _ in range(n_emails):
                counter += 1
                mid = f"m-{pid}-{counter:05d}"
                sender = devs[int(rng.integers(n_devs))]
                ts = month_begin + timedelta(
                    seconds=int(rng.integers(0, 28 * 24 * 3600))
                )
                topic = _TOPICS[int(rng.integers(len(_TOPICS)))]
                reply_to = ""
                others = [d for d in devs if d[1] != sender[1]]
                if rng.random() < spec.broadcast_probability or not others:
                    recipients = dev_list
                    if broadcast_log and rng.random() < spec.reply_probability:
                        reply_to, topic = broadcast_log[
                            int(rng.integers(len(broadcast_log)))
                        ]
                        subject = f"Re: [{pid}] {topic}"
                    else:
                        subject = f"[{pid}] {topic}"
                    broadcast_log.append((mid, topic))
                else:
                    count = min(len(others), 1 + int(rng.integers(0, 2)))
                    picks = rng.choice(len(others), size=count, replace=False)
                    recipients = LIST_SEPARATOR.join(
                        others[int(p)][1] for p in sorted(picks)
                    )
                    subject = f"[{pid}] {topic}"
                emails.append({
                    "message_id": mid,
                    "project_id": pid,
                    "sender": sender_field(sender),
                    "recipients": recipients,
                    "reply_to_id": reply_to,
                    "timestamp": format_timestamp(ts),
                    "subject": subject,
                    "body": f"Notes on {topic} for {pid}.",
                })

            for _ in range(n_commits):
                counter += 1
                author = devs[int(rng.integers(n_devs))]
                ts = month_begin + timedelta(
                    seconds=int(rng.integers(0, 28 * 24 * 3600))
                )
                count = 1 + int(rng.integers(0, 4))
                picks = rng.choice(len(_SOURCE_FILES), size=count, replace=False)
                commits.append({
                    "commit_id": f"c-{pid}-{counter:05d}",
                    "project_id": pid,
                    "author": sender_field(author),
                    "timestamp": format_timestamp(ts),
                    "files": LIST_SEPARATOR.join(
                        _SOURCE_FILES[int(p)] for p in sorted(picks)
                    ),
                })

            reports.append({
                "project_id": pid,
                "month": str(month),
                "text": (
                    f"{pid} month {month}: "
                    f"{n_emails} list messages, {n_commits} commits."
                ),
            })

    emails.sort(key=lambda r: (r["project_id"], r["timestamp"], r["message_id"]))
    commits.sort(key=lambda r: (r["project_id"], r["timestamp"], r["commit_id"]))
    return {
        EMAILS_FILENAME: emails,
        COMMITS_FILENAME: commits,
        PROJECTS_FILENAME: projects,
        REPORTS_FILENAME: reports,
    }


_TABLE_COLUMNS = {
    EMAILS_FILENAME: EMAIL_COLUMNS,
    COMMITS_FILENAME: COMMIT_COLUMNS,
    PROJECTS_FILENAME: PROJECT_COLUMNS,
    REPORTS_FILENAME: REPORT_COLUMNS,
}


def render_csv(filename: str, rows: list[dict[str, str]]) -> str:
    columns = _TABLE_COLUMNS[filename]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_corpus(spec: GenSpec, out_dir: str | Path) -> list[Path]:
    """Write the four CSVs into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = generate_corpus(spec)
    written = []
    for filename in CORPUS_FILENAMES:
        path = out / filename
        path.write_text(render_csv(filename, tables[filename]))
        written.append(path)
    return written
