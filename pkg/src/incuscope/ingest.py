"""Parse raw email and commit records and resolve developer identities.

The corpus arrives as CSV files (one row per email / commit / project /
report).  Parsing is lossless modulo an error report: every input row ends
up either as a parsed record or as a :class:`RowError` entry, never silently
dropped.  Identity resolution merges address variants (case differences,
alias groups, backfilled partial addresses) into one canonical developer id
per person via union-find.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from email.utils import parseaddr

logger = logging.getLogger(__name__)

# Columns required in the interchange CSVs.
EMAIL_COLUMNS = (
    "message_id", "project_id", "sender", "recipients",
    "reply_to_id", "timestamp", "subject", "body",
)
COMMIT_COLUMNS = ("commit_id", "project_id", "author", "timestamp", "files")
PROJECT_COLUMNS = (
    "project_id", "name", "homepage_url", "status", "sponsor",
    "description", "incubation_start", "months",
)
REPORT_COLUMNS = ("project_id", "month", "text")

# Canonical file names inside a corpus directory.
EMAILS_FILENAME = "emails.csv"
COMMITS_FILENAME = "commits.csv"
PROJECTS_FILENAME = "projects.csv"
REPORTS_FILENAME = "reports.csv"
ALIASES_FILENAME = "aliases.txt"
ERROR_REPORT_FILENAME = "ingest_errors.txt"
CORPUS_FILENAMES = (
    EMAILS_FILENAME,
    COMMITS_FILENAME,
    PROJECTS_FILENAME,
    REPORTS_FILENAME,
)

# Multi-value CSV cells (recipients, file paths, alias groups).
LIST_SEPARATOR = "|"

STATUS_GRADUATED = "graduated"
STATUS_RETIRED = "retired"
STATUS_INCUBATING = "incubating"
STATUSES = (STATUS_GRADUATED, STATUS_RETIRED, STATUS_INCUBATING)

# Address-shaped tokens inside free text, used when backfilling truncated
# addresses from email bodies.
_ADDRESS_IN_TEXT_RE = re.compile(
    r"[A-Za-z0-9._%+-]+@(?:[A-Za-z0-9-]+\.)+[A-Za-z]{2,}"
)


class CorpusFormatError(ValueError):
    """The corpus is structurally unusable (missing file/column, no data)."""


@dataclass(frozen=True)
class Email:
    """One mailing-list message."""

    message_id: str
    project_id: str
    sender: str
    recipients: list[str]
    reply_to_id: str | None
    timestamp: datetime
    subject: str
    body: str


@dataclass(frozen=True)
class Commit:
    """One code commit with the repository paths it touched."""

    commit_id: str
    project_id: str
    author: str
    timestamp: datetime
    files: list[str]


@dataclass(frozen=True)
class ProjectInfo:
    project_id: str
    name: str
    homepage_url: str
    status: str
    sponsor: str
    description: str
    incubation_start: date
    months_in_incubation: int


@dataclass(frozen=True)
class MonthlyReport:
    project_id: str
    month: int
    text: str


@dataclass(frozen=True)
class RowError:
    """One malformed input row: 1-based data-row number plus the reason."""

    row: int
    reason: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.reason}"


@dataclass
class Developer:
    display_name: str
    addresses: list[str]


@dataclass
class IdentityMap:
    """Mapping from every observed raw address form to a canonical developer.

    ``canonical_of`` is total over observed addresses and idempotent: the
    canonical id is itself a key mapping to itself.
    """

    canonical_of: dict[str, str] = field(default_factory=dict)
    developers: dict[str, Developer] = field(default_factory=dict)

    def canon(self, raw: str) -> str:
        """Canonical developer id for a raw address form."""
        raw = raw.strip()
        if raw in self.canonical_of:
            return self.canonical_of[raw]
        _, norm = split_address(raw)
        return self.canonical_of.get(norm, norm)

    def display_name(self, dev_id: str) -> str:
        dev = self.developers.get(dev_id)
        return dev.display_name if dev else dev_id


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime.

    A trailing ``Z`` is accepted; a naive timestamp is taken as UTC.
    Raises ValueError when unparseable.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """Inverse of :func:`parse_timestamp` (UTC, trailing ``Z``)."""
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def split_address(raw: str) -> tuple[str, str]:
    """Split a raw address into (display name, normalized address).

    Handles ``Name <addr>``, bare ``addr``, and display-name-only senders.
    A token without ``@`` is a display name only; those get a synthetic
    address ``<name-slug>@unknown.invalid`` so they still resolve to a
    stable developer id.
    """
    raw = raw.strip()
    name, addr = parseaddr(raw)
    addr = addr.strip()
    if "@" not in addr:
        # parseaddr drops words from bare display names; keep the raw text
        name = name or raw
        slug = re.sub(r"[^a-z0-9]+", ".", name.lower()).strip(".") or "unknown"
        return name, f"{slug}@unknown.invalid"
    return name, addr.lower()


def is_partial_address(raw: str) -> bool:
    """True when the address is truncated: local part present but the
    domain has fewer than 3 characters or contains a literal ellipsis."""
    raw = raw.strip()
    if "@" not in raw:
        return False
    _, addr = parseaddr(raw)
    if "@" not in addr:
        addr = raw
    local, _, domain = addr.partition("@")
    if not local:
        return False
    return len(domain) < 3 or "..." in domain or "…" in domain


def _require_columns(fieldnames, required, filename: str) -> None:
    have = set(fieldnames or ())
    missing = [c for c in required if c not in have]
    if missing:
        raise CorpusFormatError(
            f"{filename}: missing required column(s) {', '.join(missing)}"
        )


def parse_email_records(rows) -> tuple[list[Email], list[RowError]]:
    """Parse tabular email rows into Email records plus an error report.

    ``rows`` is an iterable of dicts (e.g. ``csv.DictReader``).  Recipients
    are ``|``-separated; an empty reply_to_id cell becomes None.
    """
    rows = list(rows)
    if rows:
        _require_columns(rows[0].keys(), EMAIL_COLUMNS, "emails")
    emails: list[Email] = []
    errors: list[RowError] = []
    for i, row in enumerate(rows, start=1):
        message_id = (row.get("message_id") or "").strip()
        sender = (row.get("sender") or "").strip()
        if not message_id:
            errors.append(RowError(i, "empty message_id"))
            continue
        if not sender:
            errors.append(RowError(i, "empty sender"))
            continue
        try:
            ts = parse_timestamp(row.get("timestamp") or "")
        except ValueError as exc:
            errors.append(RowError(i, f"unparseable timestamp: {exc}"))
            continue
        recipients = [
            r.strip()
            for r in (row.get("recipients") or "").split(LIST_SEPARATOR)
            if r.strip()
        ]
        reply_to = (row.get("reply_to_id") or "").strip() or None
        emails.append(
            Email(
                message_id=message_id,
                project_id=(row.get("project_id") or "").strip(),
                sender=sender,
                recipients=recipients,
                reply_to_id=reply_to,
                timestamp=ts,
                subject=row.get("subject") or "",
                body=row.get("body") or "",
            )
        )
    return emails, errors


def parse_commit_records(rows) -> tuple[list[Commit], list[RowError]]:
    """Parse tabular commit rows; the files cell is a ``|``-separated path
    list (split, trimmed, empties removed)."""
    rows = list(rows)
    if rows:
        _require_columns(rows[0].keys(), COMMIT_COLUMNS, "commits")
    commits: list[Commit] = []
    errors: list[RowError] = []
    for i, row in enumerate(rows, start=1):
        commit_id = (row.get("commit_id") or "").strip()
        author = (row.get("author") or "").strip()
        if not commit_id:
            errors.append(RowError(i, "empty commit_id"))
            continue
        if not author:
            errors.append(RowError(i, "empty author"))
            continue
        try:
            ts = parse_timestamp(row.get("timestamp") or "")
        except ValueError as exc:
            errors.append(RowError(i, f"unparseable timestamp: {exc}"))
            continue
        files = [
            f.strip()
            for f in (row.get("files") or "").split(LIST_SEPARATOR)
            if f.strip()
        ]
        commits.append(
            Commit(
                commit_id=commit_id,
                project_id=(row.get("project_id") or "").strip(),
                author=author,
                timestamp=ts,
                files=files,
            )
        )
    return commits, errors


def parse_project_records(rows) -> list[ProjectInfo]:
    """Parse project rows.  Projects are structural, so any bad row is a
    corpus-format error rather than a skippable row."""
    rows = list(rows)
    if rows:
        _require_columns(rows[0].keys(), PROJECT_COLUMNS, "projects")
    projects: list[ProjectInfo] = []
    seen: set[str] = set()
    for i, row in enumerate(rows, start=1):
        pid = (row.get("project_id") or "").strip()
        if not pid:
            raise CorpusFormatError(f"projects row {i}: empty project_id")
        if pid in seen:
            raise CorpusFormatError(f"projects row {i}: duplicate project_id {pid!r}")
        seen.add(pid)
        status = (row.get("status") or "").strip().lower()
        if status not in STATUSES:
            raise CorpusFormatError(
                f"projects row {i}: unknown status {row.get('status')!r}"
            )
        try:
            start = date.fromisoformat((row.get("incubation_start") or "").strip())
        except ValueError as exc:
            raise CorpusFormatError(
                f"projects row {i}: bad incubation_start: {exc}"
            ) from exc
        try:
            months = int((row.get("months") or "").strip())
        except ValueError as exc:
            raise CorpusFormatError(f"projects row {i}: bad months: {exc}") from exc
        if months < 1:
            raise CorpusFormatError(f"projects row {i}: months must be >= 1")
        projects.append(
            ProjectInfo(
                project_id=pid,
                name=(row.get("name") or "").strip() or pid,
                homepage_url=(row.get("homepage_url") or "").strip(),
                status=status,
                sponsor=(row.get("sponsor") or "").strip(),
                description=row.get("description") or "",
                incubation_start=start,
                months_in_incubation=months,
            )
        )
    return projects


def parse_report_records(rows) -> tuple[list[MonthlyReport], list[RowError]]:
    rows = list(rows)
    if rows:
        _require_columns(rows[0].keys(), REPORT_COLUMNS, "reports")
    reports: list[MonthlyReport] = []
    errors: list[RowError] = []
    for i, row in enumerate(rows, start=1):
        pid = (row.get("project_id") or "").strip()
        if not pid:
            errors.append(RowError(i, "empty project_id"))
            continue
        try:
            month = int((row.get("month") or "").strip())
        except ValueError:
            errors.append(RowError(i, f"bad month {row.get('month')!r}"))
            continue
        if month < 1:
            errors.append(RowError(i, f"month {month} out of range"))
            continue
        reports.append(MonthlyReport(pid, month, row.get("text") or ""))
    return reports, errors


def backfill_partial_address(partial: str, corpus_bodies) -> str | None:
    """Find the unique full address matching a truncated one.

    Scans the corpus text for address-shaped tokens whose local part equals
    the partial's local part (case-insensitive).  Returns the normalized
    full address only when exactly one distinct candidate exists; zero or
    several candidates mean the partial stays unresolved.
    """
    local = partial.strip().split("@", 1)[0].lower()
    if not local:
        return None
    candidates: set[str] = set()
    for body in corpus_bodies:
        for match in _ADDRESS_IN_TEXT_RE.findall(body):
            addr = match.lower()
            if addr.split("@", 1)[0] == local:
                candidates.add(addr)
    if len(candidates) == 1:
        return next(iter(candidates))
    return None


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic direction keeps the result order-independent
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo

    def groups(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


def resolve_identities(
    emails: list[Email],
    commits: list[Commit],
    alias_groups: list[list[str]] | None = None,
) -> IdentityMap:
    """Union-find closure over address equality, alias groups and backfills.

    Merging uses (a) case-insensitive equality of the full address, (b)
    explicit alias groups, (c) partial addresses backfilled from email
    bodies.  Display names never merge on their own.  The result is
    deterministic and independent of input record order: the developer id
    is the lexicographically smallest normalized address in the group.
    """
    uf = _UnionFind()
    raw_to_norm: dict[str, str] = {}
    names_by_norm: dict[str, set[str]] = {}

    def observe(raw: str) -> str:
        raw = raw.strip()
        name, norm = split_address(raw)
        raw_to_norm.setdefault(raw, norm)
        uf.add(norm)
        if name:
            names_by_norm.setdefault(norm, set()).add(name)
        return norm

    for e in emails:
        observe(e.sender)
        for r in e.recipients:
            observe(r)
    for c in commits:
        observe(c.author)

    # (b) alias groups force-merge, even for addresses absent from the corpus
    observed = set(uf.parent)
    for group in alias_groups or []:
        norms = []
        for raw in group:
            _, norm = split_address(raw)
            if norm not in observed:
                logger.warning("alias group references unknown address %r", raw)
            raw_to_norm.setdefault(raw.strip(), norm)
            uf.add(norm)
            norms.append(norm)
        for other in norms[1:]:
            uf.union(norms[0], other)

    # (c) backfill truncated addresses from message bodies
    bodies = [e.body for e in emails]
    for norm in sorted(set(raw_to_norm.values())):
        if is_partial_address(norm):
            full = backfill_partial_address(norm, bodies)
            if full is not None:
                uf.add(full)
                uf.union(norm, full)

    def id_rank(addr: str) -> tuple[bool, str]:
        # full real addresses beat truncated or synthetic ones as the dev id
        degraded = is_partial_address(addr) or addr.endswith("@unknown.invalid")
        return (degraded, addr)

    canonical_of: dict[str, str] = {}
    developers: dict[str, Developer] = {}
    for root, members in uf.groups().items():
        dev_id = min(members, key=id_rank)
        names = sorted(
            {n for m in members for n in names_by_norm.get(m, ())},
            key=lambda n: (n.lower(), n),
        )
        display = names[0] if names else dev_id.split("@", 1)[0]
        raws = sorted(r for r, n in raw_to_norm.items() if n in set(members))
        developers[dev_id] = Developer(display_name=display, addresses=raws)
        for m in members:
            canonical_of[m] = dev_id
    for raw, norm in raw_to_norm.items():
        canonical_of[raw] = canonical_of[norm]
    return IdentityMap(canonical_of=canonical_of, developers=developers)


def month_index(ts: datetime, incubation_start: date) -> int:
    """1-based incubation-month index of a timestamp.

    Month 1 is the calendar month containing the incubation start date.
    Timestamps in an earlier month are out of range.
    """
    elapsed = (ts.year - incubation_start.year) * 12 + (ts.month - incubation_start.month)
    if elapsed < 0:
        raise ValueError(
            f"timestamp {ts.isoformat()} precedes incubation start month "
            f"{incubation_start.isoformat()}"
        )
    return elapsed + 1


def parse_alias_file(text: str) -> list[list[str]]:
    """One alias group per line, ``|``-separated addresses."""
    groups = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        group = [a.strip() for a in line.split(LIST_SEPARATOR) if a.strip()]
        if len(group) >= 2:
            groups.append(group)
    return groups
