"""Read-only HTTP API over a built artifact tree.

The whole tree is loaded into memory at startup and never touched again:
single-month queries return the stored file bytes verbatim, range queries
aggregate the in-memory snapshots and recompute metrics and percentages
on the aggregate (network measures are nonlinear, so averaging per-month
values would be wrong).  No handler mutates shared state, so any number
of requests may run concurrently.

Errors use one shape everywhere: ``{"error": {"code", "message"}}`` with
code "not_found" or "bad_request".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .graph import SOCIAL, TECHNICAL, Snapshot, aggregate_snapshots
from .metrics import compute_metrics
from .store import (
    DRILLDOWN_FILENAME,
    FLAVOR_FROM_TAG,
    FORECAST_FILENAME,
    INFO_FILENAME,
    METRICS_FILENAME,
    REPORT_FILENAME,
    SCHEMA_VERSION,
    SOCIAL_FILENAME,
    TECH_FILENAME,
    list_tree_projects,
    metrics_doc,
    month_dir,
    read_json,
    snapshot_doc,
    snapshot_from_doc,
)

KIND_EMAILS = "emails"
KIND_COMMITS = "commits"


@dataclass(frozen=True)
class ApiConfig:
    """Service settings; the artifact root must hold at least one project."""

    root: Path
    host: str = "127.0.0.1"
    port: int = 8000
    static_dir: Path | None = None
    cors_origins: tuple[str, ...] = ()


@dataclass
class _ProjectData:
    info: dict
    months: int
    info_bytes: bytes
    forecast_bytes: bytes | None
    # (month, filename) -> stored bytes, for verbatim passthrough
    raw: dict[tuple[int, str], bytes] = field(default_factory=dict)
    # (month, flavor) -> parsed snapshot and its node labels
    snapshots: dict[tuple[int, str], tuple[Snapshot, dict]] = field(
        default_factory=dict
    )
    drilldowns: dict[int, dict] = field(default_factory=dict)


def load_tree(root: str | Path) -> dict[str, _ProjectData]:
    """Read every artifact file under ``root`` into memory."""
    root = Path(root)
    project_ids = list_tree_projects(root)
    if not project_ids:
        raise ValueError(f"artifact root {root} contains no built projects")
    projects: dict[str, _ProjectData] = {}
    for pid in project_ids:
        info_path = root / pid / INFO_FILENAME
        info = read_json(info_path)
        months = int(info["months"])
        forecast_path = root / pid / FORECAST_FILENAME
        data = _ProjectData(
            info=info,
            months=months,
            info_bytes=info_path.read_bytes(),
            forecast_bytes=(
                forecast_path.read_bytes() if forecast_path.is_file() else None
            ),
        )
        for month in range(1, months + 1):
            directory = month_dir(root, pid, month)
            for name in (SOCIAL_FILENAME, TECH_FILENAME, METRICS_FILENAME):
                data.raw[(month, name)] = (directory / name).read_bytes()
            report_path = directory / REPORT_FILENAME
            if report_path.is_file():
                data.raw[(month, REPORT_FILENAME)] = report_path.read_bytes()
            for name in (SOCIAL_FILENAME, TECH_FILENAME):
                doc = json.loads(data.raw[(month, name)])
                snapshot, labels = snapshot_from_doc(doc, directory / name)
                data.snapshots[(month, snapshot.flavor)] = (snapshot, labels)
            data.drilldowns[month] = read_json(directory / DRILLDOWN_FILENAME)
        projects[pid] = data
    return projects


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message}},
    )


def _not_found(message: str) -> JSONResponse:
    return _error(404, "not_found", message)


def _bad_request(message: str) -> JSONResponse:
    return _error(400, "bad_request", message)


def _json_bytes(doc) -> bytes:
    # same canonical form as stored files, so equal queries give equal bytes
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def _raw_response(payload: bytes) -> Response:
    return Response(content=payload, media_type="application/json")


class _RangeError(ValueError):
    pass


def _parse_range(from_raw: str | None, to_raw: str | None, months: int) -> tuple[int, int]:
    def parse(name: str, raw: str | None, default: int) -> int:
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError:
            raise _RangeError(f"{name} must be an integer, got {raw!r}") from None

    lo = parse("from", from_raw, 1)
    hi = parse("to", to_raw, lo)
    if not 1 <= lo <= hi <= months:
        raise _RangeError(
            f"range [{lo}, {hi}] invalid for a {months}-month incubation"
        )
    return lo, hi


def create_app(config: ApiConfig) -> FastAPI:
    """Build the application with the artifact tree preloaded."""
    projects = load_tree(config.root)
    app = FastAPI(title="incubation analytics", openapi_url=None)
    app.state.projects = projects

    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["GET"],
            allow_headers=["*"],
        )

    @app.get("/api/projects")
    def api_projects() -> Response:
        listing = [
            {
                "project_id": pid,
                "name": projects[pid].info.get("name", pid),
                "status": projects[pid].info.get("status", ""),
            }
            for pid in sorted(projects)
        ]
        return _raw_response(_json_bytes(listing))

    @app.get("/api/projects/{pid}/info")
    def api_info(pid: str) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        return _raw_response(data.info_bytes)

    @app.get("/api/projects/{pid}/network")
    def api_network(
        pid: str,
        flavor: str = Query("social"),
        from_month: str | None = Query(None, alias="from"),
        to_month: str | None = Query(None, alias="to"),
    ) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        if flavor not in FLAVOR_FROM_TAG:
            return _bad_request(f"flavor must be social or tech, got {flavor!r}")
        try:
            lo, hi = _parse_range(from_month, to_month, data.months)
        except _RangeError as exc:
            return _bad_request(str(exc))
        filename = SOCIAL_FILENAME if flavor == "social" else TECH_FILENAME
        if lo == hi:
            return _raw_response(data.raw[(lo, filename)])
        flavor_key = FLAVOR_FROM_TAG[flavor]
        parts = [data.snapshots[(m, flavor_key)] for m in range(lo, hi + 1)]
        merged = aggregate_snapshots([snap for snap, _ in parts])
        labels: dict[str, str] = {}
        for _, month_labels in parts:
            labels.update(month_labels)
        return _raw_response(_json_bytes(snapshot_doc(merged, labels)))

    @app.get("/api/projects/{pid}/metrics")
    def api_metrics(
        pid: str,
        from_month: str | None = Query(None, alias="from"),
        to_month: str | None = Query(None, alias="to"),
    ) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        try:
            lo, hi = _parse_range(from_month, to_month, data.months)
        except _RangeError as exc:
            return _bad_request(str(exc))
        if lo == hi:
            return _raw_response(data.raw[(lo, METRICS_FILENAME)])
        merged = {}
        for flavor in (SOCIAL, TECHNICAL):
            snaps = [data.snapshots[(m, flavor)][0] for m in range(lo, hi + 1)]
            merged[flavor] = compute_metrics(aggregate_snapshots(snaps))
        return _raw_response(
            _json_bytes(metrics_doc(merged[SOCIAL], merged[TECHNICAL]))
        )

    @app.get("/api/projects/{pid}/forecast")
    def api_forecast(pid: str) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        if data.forecast_bytes is None:
            return _not_found(f"no forecast built for {pid!r}")
        return _raw_response(data.forecast_bytes)

    @app.get("/api/projects/{pid}/report")
    def api_report(pid: str, month: str | None = Query(None)) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        try:
            m, _ = _parse_range(month, month, data.months)
        except _RangeError as exc:
            return _bad_request(str(exc))
        raw = data.raw.get((m, REPORT_FILENAME))
        if raw is None:
            # month exists but no report was filed; an empty report, not a 404
            return _raw_response(
                _json_bytes({"schema": SCHEMA_VERSION, "month": m, "text": ""})
            )
        return _raw_response(raw)

    @app.get("/api/projects/{pid}/drilldown")
    def api_drilldown(
        pid: str,
        dev: str | None = Query(None),
        kind: str = Query(KIND_EMAILS),
        from_month: str | None = Query(None, alias="from"),
        to_month: str | None = Query(None, alias="to"),
    ) -> Response:
        data = projects.get(pid)
        if data is None:
            return _not_found(f"unknown project {pid!r}")
        if not dev:
            return _bad_request("dev query parameter is required")
        if kind not in (KIND_EMAILS, KIND_COMMITS):
            return _bad_request(f"kind must be emails or commits, got {kind!r}")
        try:
            lo, hi = _parse_range(from_month, to_month, data.months)
        except _RangeError as exc:
            return _bad_request(str(exc))
        records: list[dict] = []
        # months descending; records are newest-first inside each month,
        # so the concatenation is globally newest-first
        for m in range(hi, lo - 1, -1):
            records.extend(data.drilldowns[m].get(kind, {}).get(dev, []))
        doc = {
            "schema": SCHEMA_VERSION,
            "developer": dev,
            "kind": kind,
            "records": records,
        }
        return _raw_response(_json_bytes(doc))

    @app.exception_handler(404)
    async def fallback_not_found(request: Request, exc) -> JSONResponse:
        return _not_found(f"no such route: {request.url.path}")

    if config.static_dir is not None:
        app.mount(
            "/", StaticFiles(directory=str(config.static_dir), html=True),
            name="dashboard",
        )

    return app


def serve_forever(config: ApiConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
