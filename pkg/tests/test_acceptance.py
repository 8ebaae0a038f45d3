"""Acceptance gate: one test per core guarantee of the pipeline.

Each test prints a PASS line with the measured numbers so a verbose run
reads as a checklist: network recounts, range aggregation, metric oracles,
gradient checks, the end-to-end synthetic experiment, turn detection,
artifact persistence, and the service contract.
"""

import json
import math
import random
import re
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from incuscope.cli import main
from incuscope.corpusgen import GenSpec, write_corpus
from incuscope.forecast import (
    DOWNTURN,
    ForecastModel,
    LabeledSequence,
    PARAM_NAMES,
    detect_turns,
    forecast_series,
    forward,
    init_model,
    loss_and_gradients,
    softmax,
)
from incuscope.graph import (
    SOCIAL,
    TECHNICAL,
    Edge,
    Snapshot,
    aggregate_snapshots,
    build_social_snapshot,
    build_technical_snapshot,
)
from incuscope.metrics import (
    compute_metrics,
    node_percentages,
    project_to_developers,
)
from incuscope.service import ApiConfig, create_app
from incuscope.store import (
    FORECAST_FILENAME,
    INFO_FILENAME,
    METRICS_FILENAME,
    SOCIAL_FILENAME,
    TECH_FILENAME,
    assemble_month_bundle,
    build_artifact_tree,
    copy_corpus,
    import_csv_corpus,
    import_tree_corpus,
    metrics_doc,
    month_dir,
    read_json,
    read_month_bundle,
    write_month_bundle,
)

from conftest import identities_for
from oracles import (
    fd_gradients,
    make_random_corpus,
    oracle_avg_clustering,
    oracle_social_counts,
    oracle_technical_counts,
    snapshot_counts,
)
from test_store import tree_digest


def test_network_snapshots_match_brute_force_recount():
    started = time.perf_counter()
    corpora = 0
    snapshots = 0
    for seed in range(100):
        rng = random.Random(seed)
        emails, commits, start, months = make_random_corpus(rng)
        ids = identities_for(emails, commits)
        for month in range(1, months + 1):
            social = build_social_snapshot(emails, ids, month, start)
            assert snapshot_counts(social) == oracle_social_counts(
                emails, month, month, start
            )
            technical = build_technical_snapshot(commits, ids, month, start)
            assert snapshot_counts(technical) == oracle_technical_counts(
                commits, month, month, start
            )
            snapshots += 2
        corpora += 1
    elapsed = time.perf_counter() - started
    assert corpora >= 100
    assert elapsed < 10.0
    print(
        f"PASS network recount: {snapshots} snapshots over {corpora} corpora "
        f"exact in {elapsed:.2f}s"
    )


def test_range_aggregation_matches_direct_recount():
    checked = 0
    for seed in range(100):
        rng = random.Random(1000 + seed)
        emails, commits, start, months = make_random_corpus(rng)
        ids = identities_for(emails, commits)
        socials = [
            build_social_snapshot(emails, ids, m, start)
            for m in range(1, months + 1)
        ]
        technicals = [
            build_technical_snapshot(commits, ids, m, start)
            for m in range(1, months + 1)
        ]
        for lo in range(1, months + 1):
            for hi in range(lo, months + 1):
                merged = aggregate_snapshots(socials[lo - 1 : hi])
                assert (merged.month_from, merged.month_to) == (lo, hi)
                assert snapshot_counts(merged) == oracle_social_counts(
                    emails, lo, hi, start
                )
                merged = aggregate_snapshots(technicals[lo - 1 : hi])
                assert snapshot_counts(merged) == oracle_technical_counts(
                    commits, lo, hi, start
                )
                checked += 2
    print(f"PASS range aggregation: {checked} subrange recounts exact")


def random_bipartite(rng: random.Random, flavor: str) -> Snapshot:
    n_left = rng.randint(1, 10)
    n_right = rng.randint(1, 10)
    left_pool = [f"d{i}@proj.test" for i in range(n_left)]
    right_pool = (
        [f"r{i}@proj.test" for i in range(n_right)]
        if flavor == SOCIAL
        else [f".ft{i}" for i in range(n_right)]
    )
    pairs = [(s, t) for s in left_pool for t in right_pool]
    count = rng.randint(0, min(25, len(pairs)))
    chosen = sorted(rng.sample(pairs, count))
    edges = [Edge(s, t, rng.randint(1, 5)) for s, t in chosen]
    left = sorted({e.source for e in edges})
    right = sorted({e.target for e in edges})
    return Snapshot("proj", flavor, 1, 1, left, right, edges)


def test_metrics_match_independent_oracles():
    graphs = 0
    for seed in range(100):
        rng = random.Random(2000 + seed)
        s = random_bipartite(rng, SOCIAL if seed % 2 else TECHNICAL)
        rec = compute_metrics(s)
        assert rec.num_left_nodes == len(s.left_nodes)
        assert rec.num_right_nodes == len(s.right_nodes)
        assert rec.num_nodes == len(s.left_nodes) + len(s.right_nodes)
        assert rec.num_edges == len(s.edges)
        if rec.num_nodes:
            assert rec.mean_degree == 2 * rec.num_edges / rec.num_nodes
        else:
            assert rec.mean_degree == 0.0
        g = project_to_developers(s)
        assert g.number_of_nodes() <= 20
        expected = oracle_avg_clustering(
            list(g.nodes), {frozenset(e) for e in g.edges}
        )
        assert abs(rec.clustering_coefficient - expected) <= 1e-12
        pcts = node_percentages(s)
        for side in pcts.values():
            if side:
                assert abs(sum(side.values()) - 100.0) <= 1e-9
        graphs += 1
    print(f"PASS metrics oracle: {graphs} graphs, clustering within 1e-12")


def test_lstm_gradients_and_probabilities_are_sound():
    worst = 0.0
    for seed in range(20):
        model = init_model(3, 4, 0.0, seed)
        rng = np.random.default_rng(3000 + seed)
        for name in ("b_i", "b_f", "b_g", "b_o", "b_out"):
            model.params[name] += rng.normal(scale=0.3, size=model.params[name].shape)
        batch = [
            LabeledSequence(rng.normal(size=(rng.integers(2, 6), 3)), 1),
            LabeledSequence(rng.normal(size=(rng.integers(2, 6), 3)), 0),
        ]
        _, grads = loss_and_gradients(model, batch)
        numeric = fd_gradients(
            lambda: loss_and_gradients(model, batch)[0], model.params
        )
        for name in PARAM_NAMES:
            denom = np.maximum(
                np.maximum(np.abs(grads[name]), np.abs(numeric[name])), 1e-4
            )
            worst = max(worst, (np.abs(grads[name] - numeric[name]) / denom).max())
    assert worst < 1e-4

    rng = np.random.default_rng(42)
    rows = softmax(rng.normal(size=(50, 2)) * 50.0)
    np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-9)
    model = init_model(3, 4, 0.0, 7)
    probs = forward(model, rng.normal(size=(6, 3)))
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    zero = ForecastModel(
        input_dim=3,
        hidden_dim=4,
        dropout_rate=0.0,
        params={name: np.zeros_like(model.params[name]) for name in PARAM_NAMES},
        feature_mean=np.zeros(3),
        feature_std=np.ones(3),
        seed=0,
    )
    loss, _ = loss_and_gradients(zero, [LabeledSequence(np.ones((4, 3)), 1)])
    assert abs(loss - math.log(2.0)) <= 1e-12

    feats = rng.normal(size=(9, 3))
    full = forecast_series(model, feats).probabilities
    for k in (1, 4, 9):
        prefix = forecast_series(model, feats[:k]).probabilities
        assert prefix == full[:k]
    print(
        f"PASS forecaster checks: max gradient rel err {worst:.2e}, "
        f"rows sum to 1, zero-model loss ln2, prefixes bit-exact"
    )


def test_end_to_end_pipeline_learns_the_labels(tmp_path, capsys):
    spec_path = tmp_path / "genspec.json"
    spec_path.write_text("{}\n")
    csv_dir = tmp_path / "csv"
    tree = tmp_path / "tree"
    model = tmp_path / "model.json"
    started = time.perf_counter()
    assert main(["gen", str(spec_path), "-o", str(csv_dir)]) == 0
    assert main(["import", str(csv_dir), "-o", str(tree)]) == 0
    assert main(["build", str(tree)]) == 0
    assert main(["train", str(tree), "-o", str(model)]) == 0
    train_out = capsys.readouterr().out
    assert main(["forecast", str(tree), "--model", str(model)]) == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0

    match = re.search(r"accuracy (\d+\.\d+)", train_out)
    assert match is not None, train_out
    accuracy = float(match.group(1))
    assert accuracy >= 0.90

    corpus = import_tree_corpus(tree)
    finals = {"graduated": [], "retired": []}
    for pid, project in corpus.projects.items():
        doc = read_json(tree / pid / FORECAST_FILENAME)
        finals[project.status].append(doc["probabilities"][-1])
    mean_1 = sum(finals["graduated"]) / len(finals["graduated"])
    mean_0 = sum(finals["retired"]) / len(finals["retired"])
    assert mean_1 > mean_0
    print(
        f"PASS end to end: 40 projects in {elapsed:.1f}s, training accuracy "
        f"{accuracy:.3f}, final forecasts {mean_1:.3f} (graduated) vs "
        f"{mean_0:.3f} (retired)"
    )


def test_turn_detection_flags_the_known_downturn():
    events = detect_turns([0.8, 0.65, 0.70], threshold=0.1)
    assert len(events) == 1
    event = events[0]
    assert event.kind == DOWNTURN
    assert event.month == 2
    assert event.delta == pytest.approx(-0.15, abs=1e-12)
    print(
        f"PASS turn detection: one {event.kind} at month {event.month}, "
        f"delta {event.delta:+.2f}"
    )


def test_artifacts_round_trip_and_rebuild_identically(tmp_path):
    spec = GenSpec(
        num_projects=25, months_min=4, months_max=6,
        devs_min=2, devs_max=5, seed=11,
    )
    csv_dir = tmp_path / "csv"
    write_corpus(spec, csv_dir)
    root = tmp_path / "round-trip"
    copy_corpus(csv_dir, root)
    corpus = import_csv_corpus(root / "corpus", write_report=False)
    bundles = 0
    for pid, project in corpus.projects.items():
        for month in range(1, project.months_in_incubation + 1):
            bundle = assemble_month_bundle(corpus, pid, month)
            write_month_bundle(bundle, root)
            assert read_month_bundle(pid, month, root) == bundle
            bundles += 1
    assert bundles >= 100

    tree_a = tmp_path / "tree-a"
    tree_b = tmp_path / "tree-b"
    for tree in (tree_a, tree_b):
        copy_corpus(csv_dir, tree)
        build_artifact_tree(import_csv_corpus(tree / "corpus"), tree)
    digest_a = tree_digest(tree_a)
    assert digest_a == tree_digest(tree_b)
    print(
        f"PASS persistence: {bundles} bundles round-tripped, rebuilt trees "
        f"byte-identical across {len(digest_a)} files"
    )


def test_service_matches_stored_artifacts_under_load(small_tree):
    app = create_app(ApiConfig(root=small_tree))
    client = TestClient(app)
    pids = json.loads((client.get("/api/projects")).content)
    pids = [p["project_id"] for p in pids]

    passthrough = 0
    for pid in pids:
        months = read_json(small_tree / pid / INFO_FILENAME)["months"]
        for month in range(1, months + 1):
            for flavor, filename in (("social", SOCIAL_FILENAME),
                                     ("tech", TECH_FILENAME)):
                resp = client.get(
                    f"/api/projects/{pid}/network",
                    params={"flavor": flavor, "from": month, "to": month},
                )
                stored = month_dir(small_tree, pid, month) / filename
                assert resp.content == stored.read_bytes()
            resp = client.get(
                f"/api/projects/{pid}/metrics",
                params={"from": month, "to": month},
            )
            stored = month_dir(small_tree, pid, month) / METRICS_FILENAME
            assert resp.content == stored.read_bytes()
            passthrough += 3

        bundles = [read_month_bundle(pid, m, small_tree)
                   for m in range(1, months + 1)]
        expected = metrics_doc(
            compute_metrics(aggregate_snapshots([b.social for b in bundles])),
            compute_metrics(aggregate_snapshots([b.technical for b in bundles])),
        )
        resp = client.get(
            f"/api/projects/{pid}/metrics", params={"from": 1, "to": months}
        )
        assert resp.json() == expected

    before = tree_digest(small_tree)
    month_count = {
        pid: read_json(small_tree / pid / INFO_FILENAME)["months"] for pid in pids
    }
    statuses: list[int] = []
    lock = threading.Lock()

    def storm(worker: int, requests: int) -> None:
        local = TestClient(app)
        mine = []
        for i in range(requests):
            pid = pids[(worker + i) % len(pids)]
            months = month_count[pid]
            month = i % months + 1
            paths = [
                ("/api/projects", {}),
                (f"/api/projects/{pid}/network",
                 {"flavor": "social" if i % 2 else "tech",
                  "from": month, "to": month}),
                (f"/api/projects/{pid}/network", {"from": 1, "to": months}),
                (f"/api/projects/{pid}/metrics", {"from": 1, "to": months}),
                (f"/api/projects/{pid}/forecast", {}),
                (f"/api/projects/{pid}/report", {"month": month}),
            ]
            path, params = paths[i % len(paths)]
            mine.append(local.get(path, params=params).status_code)
        with lock:
            statuses.extend(mine)

    threads = [
        threading.Thread(target=storm, args=(w, 125)) for w in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(statuses) == 1000
    assert set(statuses) == {200}
    assert tree_digest(small_tree) == before
    print(
        f"PASS service contract: {passthrough} passthrough responses "
        f"byte-identical, range metrics recomputed, 1000-request storm "
        f"read-only"
    )
