"""Parsing, identity resolution, and month arithmetic."""

from __future__ import annotations

import random
from datetime import date, datetime, timezone

import pytest
from hypothesis import given, strategies as st

from incuscope.ingest import (
    CorpusFormatError,
    backfill_partial_address,
    format_timestamp,
    is_partial_address,
    month_index,
    parse_alias_file,
    parse_commit_records,
    parse_email_records,
    parse_project_records,
    parse_report_records,
    parse_timestamp,
    resolve_identities,
    split_address,
)

from conftest import make_commit, make_email, ts


def email_row(**overrides) -> dict:
    row = {
        "message_id": "m1",
        "project_id": "proj",
        "sender": "a@x.org",
        "recipients": "dev@list.apache.org",
        "reply_to_id": "",
        "timestamp": "2011-03-02T10:00:00Z",
        "subject": "hello",
        "body": "",
    }
    row.update(overrides)
    return row


def commit_row(**overrides) -> dict:
    row = {
        "commit_id": "c1",
        "project_id": "proj",
        "author": "a@x.org",
        "timestamp": "2011-03-02T10:00:00Z",
        "files": "src/A.java|doc/b.html",
    }
    row.update(overrides)
    return row


class TestTimestamps:
    def test_parse_z_suffix(self):
        parsed = parse_timestamp("2011-03-02T10:00:00Z")
        assert parsed == datetime(2011, 3, 2, 10, tzinfo=timezone.utc)

    def test_parse_offset(self):
        parsed = parse_timestamp("2011-03-02T12:00:00+02:00")
        assert parsed == datetime(2011, 3, 2, 10, tzinfo=timezone.utc)

    def test_naive_treated_as_utc(self):
        parsed = parse_timestamp("2011-03-02T10:00:00")
        assert parsed.tzinfo == timezone.utc

    def test_format_round_trip(self):
        text = "2011-03-02T10:00:00Z"
        assert format_timestamp(parse_timestamp(text)) == text

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            parse_timestamp("not-a-date")


class TestAddresses:
    def test_display_name_form(self):
        name, addr = split_address("Jane Doe <Jane@X.org>")
        assert name == "Jane Doe"
        assert addr == "jane@x.org"

    def test_bare_address(self):
        assert split_address("a@x.org") == ("", "a@x.org")

    def test_name_only_sender_gets_synthetic_address(self):
        name, addr = split_address("Build Bot")
        assert name == "Build Bot"
        assert addr.endswith("@unknown.invalid")

    def test_partial_detection(self):
        assert is_partial_address("jdoe@...")
        assert is_partial_address("jdoe@ex")
        assert not is_partial_address("jdoe@example.org")


class TestEmailParsing:
    def test_direct_field_mapping(self):
        emails, errors = parse_email_records([email_row()])
        assert errors == []
        (e,) = emails
        assert e.message_id == "m1"
        assert e.reply_to_id is None
        assert e.recipients == ["dev@list.apache.org"]
        assert e.timestamp == ts("2011-03-02T10:00:00Z")

    def test_bad_timestamp_is_row_error(self):
        emails, errors = parse_email_records([email_row(timestamp="not-a-date")])
        assert emails == []
        assert len(errors) == 1
        assert errors[0].row == 1
        assert "timestamp" in errors[0].reason

    def test_three_rows_preserve_order(self):
        rows = [email_row(message_id=f"m{i}") for i in range(3)]
        emails, errors = parse_email_records(rows)
        assert [e.message_id for e in emails] == ["m0", "m1", "m2"]
        assert errors == []

    def test_lossless_modulo_errors(self):
        rows = [
            email_row(message_id="m1"),
            email_row(message_id="", sender="b@x.org"),
            email_row(message_id="m3", timestamp="bogus"),
            email_row(message_id="m4"),
        ]
        emails, errors = parse_email_records(rows)
        assert len(emails) + len(errors) == len(rows)

    def test_recipients_split_and_trimmed(self):
        emails, _ = parse_email_records(
            [email_row(recipients=" a@x.org | b@y.org |")]
        )
        assert emails[0].recipients == ["a@x.org", "b@y.org"]

    def test_missing_column_fatal(self):
        row = email_row()
        del row["sender"]
        with pytest.raises(CorpusFormatError, match="sender"):
            parse_email_records([row])


class TestCommitParsing:
    def test_files_split(self):
        commits, _ = parse_commit_records([commit_row()])
        assert commits[0].files == ["src/A.java", "doc/b.html"]

    def test_empty_files(self):
        commits, _ = parse_commit_records([commit_row(files="")])
        assert commits[0].files == []

    def test_one_bad_timestamp_of_five(self):
        rows = [commit_row(commit_id=f"c{i}") for i in range(5)]
        rows[2]["timestamp"] = "bogus"
        commits, errors = parse_commit_records(rows)
        assert len(commits) == 4
        assert len(errors) == 1
        assert errors[0].row == 3


class TestProjectParsing:
    def test_round_trip(self):
        rows = [{
            "project_id": "proj",
            "name": "Proj",
            "homepage_url": "https://proj.example.org",
            "status": "graduated",
            "sponsor": "Incubator",
            "description": "d",
            "incubation_start": "2019-01-01",
            "months": "6",
        }]
        (p,) = parse_project_records(rows)
        assert p.incubation_start == date(2019, 1, 1)
        assert p.months_in_incubation == 6

    def test_duplicate_id_fatal(self):
        row = {
            "project_id": "proj", "name": "", "homepage_url": "",
            "status": "retired", "sponsor": "", "description": "",
            "incubation_start": "2019-01-01", "months": "3",
        }
        with pytest.raises(CorpusFormatError, match="duplicate"):
            parse_project_records([row, dict(row)])

    def test_bad_months_fatal(self):
        row = {
            "project_id": "proj", "name": "", "homepage_url": "",
            "status": "retired", "sponsor": "", "description": "",
            "incubation_start": "2019-01-01", "months": "0",
        }
        with pytest.raises(CorpusFormatError):
            parse_project_records([row])


class TestReportParsing:
    def test_good_and_bad_rows(self):
        rows = [
            {"project_id": "proj", "month": "2", "text": "fine"},
            {"project_id": "proj", "month": "zero", "text": "bad"},
            {"project_id": "", "month": "1", "text": "bad"},
        ]
        reports, errors = parse_report_records(rows)
        assert len(reports) == 1
        assert reports[0].month == 2
        assert len(errors) == 2


class TestBackfill:
    def test_unique_candidate(self):
        bodies = ["contact jdoe@example.org for details", "unrelated"]
        assert backfill_partial_address("jdoe@...", bodies) == "jdoe@example.org"

    def test_ambiguous_is_none(self):
        bodies = ["jdoe@a.org wrote", "try jdoe@b.org"]
        assert backfill_partial_address("jdoe@...", bodies) is None

    def test_absent_is_none(self):
        assert backfill_partial_address("ghost@...", ["nothing here"]) is None


class TestIdentityResolution:
    def test_case_fold_merge(self):
        emails = [
            make_email("m1", "A@x.org", ["b@y.org"], "2019-01-02T00:00:00Z"),
            make_email("m2", "a@x.org", ["b@y.org"], "2019-01-03T00:00:00Z"),
        ]
        ids = resolve_identities(emails, [])
        assert ids.canon("A@x.org") == ids.canon("a@x.org") == "a@x.org"

    def test_alias_group_merge(self):
        emails = [
            make_email("m1", "a@x.org", [], "2019-01-02T00:00:00Z"),
            make_email("m2", "a@y.org", [], "2019-01-03T00:00:00Z"),
        ]
        ids = resolve_identities(emails, [], [["a@x.org", "a@y.org"]])
        assert ids.canon("a@x.org") == ids.canon("a@y.org")
        dev = ids.developers[ids.canon("a@y.org")]
        assert set(dev.addresses) == {"a@x.org", "a@y.org"}

    def test_backfill_merges_partial(self):
        emails = [
            make_email("m1", "jdoe@example.org", [], "2019-01-02T00:00:00Z",
                       body="I am jdoe@example.org"),
            make_email("m2", "jdoe@...", [], "2019-01-03T00:00:00Z"),
        ]
        ids = resolve_identities(emails, [])
        assert ids.canon("jdoe@...") == "jdoe@example.org"

    def test_fixture_closure_count(self):
        # six addresses, two alias groups, one backfill: three developers
        emails = [
            make_email("m1", "a@x.org", [], "2019-01-02T00:00:00Z",
                       body="also b@z.org and carol@big.org"),
            make_email("m2", "b@y.org", [], "2019-01-03T00:00:00Z"),
            make_email("m3", "b@z.org", [], "2019-01-04T00:00:00Z"),
            make_email("m4", "carol@big.org", [], "2019-01-05T00:00:00Z"),
            make_email("m5", "carol@...", [], "2019-01-06T00:00:00Z"),
            make_email("m6", "d@w.org", [], "2019-01-07T00:00:00Z"),
        ]
        groups = [["a@x.org", "d@w.org"], ["b@y.org", "b@z.org"]]
        ids = resolve_identities(emails, [], groups)
        assert len(ids.developers) == 3

    def test_order_independent(self):
        emails = [
            make_email(f"m{i}", s, ["dev@p.apache.org"], f"2019-01-{i + 1:02d}T00:00:00Z")
            for i, s in enumerate(
                ["A@x.org", "b@y.org", "a@x.org", "B@Y.org", "c@z.org"]
            )
        ]
        base = resolve_identities(emails, [])
        rng = random.Random(7)
        for _ in range(10):
            shuffled = emails[:]
            rng.shuffle(shuffled)
            ids = resolve_identities(shuffled, [])
            assert ids.canonical_of == base.canonical_of

    def test_display_name_recorded(self):
        emails = [
            make_email("m1", "Jane Doe <jane@x.org>", [], "2019-01-02T00:00:00Z"),
        ]
        ids = resolve_identities(emails, [])
        assert ids.display_name("jane@x.org") == "Jane Doe"

    @given(st.text(alphabet="abcXYZ@._", min_size=1, max_size=20))
    def test_canon_idempotent(self, raw):
        ids = resolve_identities(
            [make_email("m1", raw, [], "2019-01-02T00:00:00Z")], []
        )
        canonical = ids.canon(raw)
        assert ids.canon(canonical) == canonical


class TestMonthIndex:
    def test_same_month(self):
        assert month_index(ts("2011-01-20T00:00:00Z"), date(2011, 1, 15)) == 1

    def test_two_months_later(self):
        assert month_index(ts("2011-03-02T00:00:00Z"), date(2011, 1, 15)) == 3

    def test_year_boundary(self):
        assert month_index(ts("2011-01-05T00:00:00Z"), date(2010, 12, 1)) == 2

    def test_before_start_rejected(self):
        with pytest.raises(ValueError):
            month_index(ts("2010-12-31T23:59:59Z"), date(2011, 1, 15))

    def test_monotone_in_timestamp(self):
        start = date(2019, 3, 1)
        stamps = [
            ts("2019-03-01T00:00:00Z"), ts("2019-03-31T23:59:59Z"),
            ts("2019-04-01T00:00:00Z"), ts("2020-02-29T12:00:00Z"),
        ]
        indices = [month_index(t, start) for t in stamps]
        assert indices == sorted(indices)
        assert indices == [1, 1, 2, 12]


class TestAliasFile:
    def test_groups_and_comments(self):
        text = "# teams\na@x.org|a@y.org\n\nb@x.org | b@y.org | b@z.org\n"
        groups = parse_alias_file(text)
        assert groups == [
            ["a@x.org", "a@y.org"],
            ["b@x.org", "b@y.org", "b@z.org"],
        ]
