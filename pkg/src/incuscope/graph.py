"""Monthly socio-technical network snapshots.

Two bipartite flavors per project-month:

* social: developers who sent email on the left, developers who received a
  direct message or replied to a broadcast on the right.  Direct messages
  contribute sender -> recipient edges; a reply to a broadcast contributes
  broadcast-sender -> replier, attributed to the month of the reply.
* technical: committing developers on the left, touched file types on the
  right, weighted by (commit, file) touches.

Snapshots are immutable, node lists sorted, edges sorted by (source,
target), so identical event sets always produce identical snapshots
regardless of input order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date

from .ingest import Commit, Email, IdentityMap, month_index, split_address

SOCIAL = "social"
TECHNICAL = "technical"

DIRECT = "direct"
BROADCAST = "broadcast"

# An address is a mailing list when its domain lives under apache.org and
# the local part is a well-known list name, or when it sits directly under
# an incubator.apache.org domain.  Override per corpus as needed.
DEFAULT_LIST_PATTERNS = (
    r"^(?:dev|user|commits|private)@(?:[^@]*\.)?apache\.org$",
    r"@(?:[^@]*\.)?incubator\.apache\.org$",
)

NO_EXTENSION = "(none)"

_REPLY_TOKEN_RE = re.compile(r"^\s*(re|aw)\s*:\s*", re.IGNORECASE)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: int


@dataclass(frozen=True)
class Snapshot:
    """A weighted bipartite directed graph for one project-month (or an
    aggregated month range)."""

    project_id: str
    flavor: str
    month_from: int
    month_to: int
    left_nodes: list[str]
    right_nodes: list[str]
    edges: list[Edge]

    @property
    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges)

    def is_empty(self) -> bool:
        return not self.edges


def _compile_patterns(list_patterns) -> list[re.Pattern[str]]:
    if list_patterns is None:
        list_patterns = DEFAULT_LIST_PATTERNS
    return [re.compile(p, re.IGNORECASE) for p in list_patterns]


def is_list_address(raw: str, patterns) -> bool:
    _, addr = split_address(raw)
    return any(p.search(addr) for p in patterns)


def classify_message(email: Email, list_patterns=None) -> str:
    """DIRECT when at least one recipient is an individual developer,
    BROADCAST when every recipient is a mailing list (or there are none)."""
    patterns = _compile_patterns(list_patterns)
    for r in email.recipients:
        if not is_list_address(r, patterns):
            return DIRECT
    return BROADCAST


def normalize_subject(subject: str) -> str:
    """Strip repeated leading re:/aw: tokens, case-fold, trim."""
    s = subject
    while True:
        stripped = _REPLY_TOKEN_RE.sub("", s, count=1)
        if stripped == s:
            break
        s = stripped
    return s.strip().casefold()


def _had_reply_marker(subject: str) -> bool:
    return _REPLY_TOKEN_RE.search(subject) is not None


def find_reply_target(email: Email, emails: list[Email]) -> Email | None:
    """The message this email replies to, if any.

    The explicit reply_to_id link wins when it resolves.  Otherwise (missing
    or dangling link) a subject fallback applies, but only to subjects that
    carry a reply marker: among earlier emails in the project with the same
    normalized subject, the most recent one is chosen, ties broken by
    message id so the result never depends on input order.
    """
    if email.reply_to_id:
        for other in emails:
            if other.message_id == email.reply_to_id and other is not email:
                return other
    if not _had_reply_marker(email.subject):
        return None
    wanted = normalize_subject(email.subject)
    key = (email.timestamp, email.message_id)
    best: Email | None = None
    for other in emails:
        if other is email or (other.timestamp, other.message_id) >= key:
            continue
        if normalize_subject(other.subject) == wanted:
            if best is None or (other.timestamp, other.message_id) > (
                best.timestamp,
                best.message_id,
            ):
                best = other
    return best


def _finish(
    project_id: str,
    flavor: str,
    month_from: int,
    month_to: int,
    weights: dict[tuple[str, str], int],
) -> Snapshot:
    left = sorted({s for s, _ in weights})
    right = sorted({t for _, t in weights})
    edges = [Edge(s, t, w) for (s, t), w in sorted(weights.items())]
    return Snapshot(project_id, flavor, month_from, month_to, left, right, edges)


def build_social_snapshot(
    emails: list[Email],
    ids: IdentityMap,
    month: int,
    incubation_start: date,
    list_patterns=None,
) -> Snapshot:
    """Social network for one incubation month.

    ``emails`` is the project's full email list; reply targets may live in
    earlier months while the reply edge lands in the reply's month.  Each
    direct email adds weight 1 per distinct individual recipient; each reply
    to a broadcast adds weight 1 from the broadcast's sender to the replier.
    Self-edges are dropped.
    """
    patterns = _compile_patterns(list_patterns)
    project_id = emails[0].project_id if emails else ""
    weights: dict[tuple[str, str], int] = {}

    def bump(source: str, target: str) -> None:
        if source != target:
            key = (source, target)
            weights[key] = weights.get(key, 0) + 1

    in_month = [
        e for e in emails if month_index(e.timestamp, incubation_start) == month
    ]
    for e in in_month:
        sender = ids.canon(e.sender)
        if classify_message(e, list_patterns) == DIRECT:
            individuals = {
                ids.canon(r) for r in e.recipients if not is_list_address(r, patterns)
            }
            for target in sorted(individuals):
                bump(sender, target)
        target_email = find_reply_target(e, emails)
        if target_email is not None and classify_message(target_email, list_patterns) == BROADCAST:
            bump(ids.canon(target_email.sender), sender)
    return _finish(project_id, SOCIAL, month, month, weights)


def file_type(path: str) -> str:
    """Lowercased extension (with dot) of the final path segment; segments
    without an extension map to ``(none)``."""
    segment = path.rsplit("/", 1)[-1]
    dot = segment.rfind(".")
    if dot <= 0 or dot == len(segment) - 1:
        return NO_EXTENSION
    return "." + segment[dot + 1 :].lower()


def build_technical_snapshot(
    commits: list[Commit],
    ids: IdentityMap,
    month: int,
    incubation_start: date,
) -> Snapshot:
    """Technical network for one incubation month: developer -> file type,
    weighted by the number of (commit, file) touches."""
    project_id = commits[0].project_id if commits else ""
    weights: dict[tuple[str, str], int] = {}
    for c in commits:
        if month_index(c.timestamp, incubation_start) != month:
            continue
        dev = ids.canon(c.author)
        for path in c.files:
            key = (dev, file_type(path))
            weights[key] = weights.get(key, 0) + 1
    return _finish(project_id, TECHNICAL, month, month, weights)


def aggregate_snapshots(snaps: list[Snapshot]) -> Snapshot:
    """Merge consecutive monthly snapshots of one project and flavor.

    Node sets are unioned and weights of identical (source, target) pairs
    summed; the result spans the whole month range.  Mixed flavors or a gap
    in the months violate the contract.
    """
    if not snaps:
        raise ValueError("aggregate_snapshots requires at least one snapshot")
    snaps = sorted(snaps, key=lambda s: (s.month_from, s.month_to))
    first = snaps[0]
    for s in snaps[1:]:
        if s.project_id != first.project_id or s.flavor != first.flavor:
            raise ValueError("cannot aggregate snapshots of mixed project or flavor")
    for prev, cur in zip(snaps, snaps[1:]):
        if cur.month_from != prev.month_to + 1:
            raise ValueError(
                f"months not consecutive: {prev.month_to} then {cur.month_from}"
            )
    weights: dict[tuple[str, str], int] = {}
    left: set[str] = set()
    right: set[str] = set()
    for s in snaps:
        left.update(s.left_nodes)
        right.update(s.right_nodes)
        for e in s.edges:
            key = (e.source, e.target)
            weights[key] = weights.get(key, 0) + e.weight
    edges = [Edge(s, t, w) for (s, t), w in sorted(weights.items())]
    return Snapshot(
        project_id=first.project_id,
        flavor=first.flavor,
        month_from=snaps[0].month_from,
        month_to=snaps[-1].month_to,
        left_nodes=sorted(left),
        right_nodes=sorted(right),
        edges=edges,
    )
