import io
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA, c_row, diary_text, p_row
from contactkit.diary import (EXCLUSION_REASONS, INCOMPLETE, PROVINCE_BELOW_THRESHOLD, parse_diaries,
                              read_diaries, validate_and_filter)
from contactkit.exceptions import DiaryParseError


def test_header_only_file_is_empty_survey():
    survey = parse_diaries(diary_text())
    assert len(survey) == 0 and survey.contacts == ()


def test_bundled_fixture_counts():
    survey = read_diaries(DATA / "synthetic_survey.csv")
    assert len(survey) == 354
    assert len(survey.contacts) == 828


def test_duration_over_one_day_names_the_row():
    text = diary_text(p_row("A"), c_row("A", minutes=30), c_row("A", minutes=2000))
    with pytest.raises(DiaryParseError) as err:
        parse_diaries(text)
    assert err.value.errors[0][0] == 4
    assert "line 4" in str(err.value) and "duration_minutes" in str(err.value)


def test_all_errors_reported_together():
    text = diary_text(p_row("A", age=130), p_row("B"), p_row("B"), c_row("Z"), "Q,Y,,,,,,,,,")
    with pytest.raises(DiaryParseError) as err:
        parse_diaries(text)
    lines = [ln for ln, _ in err.value.errors]
    assert lines == sorted(lines) and set(lines) == {2, 4, 5, 6}


@pytest.mark.parametrize("row", [
    "P,A,30,,male,Sichuan,31,2020-03-10,,,",           # household too large
    "P,A,30,,robot,Sichuan,3,2020-03-10,,,",           # unknown sex token
    "P,A,30,,male,Sichuan,3,10/03/2020,,,",            # not ISO
    "P,A,30,,male,Sichuan,3,2020-03-10,home,,",        # value in a contact column
])
def test_invalid_participant_rows(row):
    with pytest.raises(DiaryParseError):
        parse_diaries(diary_text(row))


@pytest.mark.parametrize("row", [
    "C,A,40,30,,,,,household_member,home,10",           # lo > hi
    "C,A,40,,,,,,neighbour,home,10",                    # unknown relation
    "C,A,40,,,,,,household_member,garden,10",           # unknown location
    "C,A,40,,,,,,household_member,home,-1",
])
def test_invalid_contact_rows(row):
    with pytest.raises(DiaryParseError):
        parse_diaries(diary_text(p_row("A"), row))


def test_missing_values_parse_as_none_and_bytes_input():
    text = diary_text("P,A,,,,Sichuan,3,2020-03-10,,,", "C,A,30,,,,,,household_member,home,")
    survey = parse_diaries(text.encode("utf-8"))
    p, c = survey.participants[0], survey.contacts[0]
    assert p.age is None and p.sex == "undisclosed" and not p.is_complete
    assert c.duration_minutes is None and not c.is_complete
    assert parse_diaries(io.StringIO(text)) == survey


def test_raw_fixture_mirrors_completeness_table():
    raw = read_diaries(DATA / "synthetic_raw_survey.csv")
    clean = validate_and_filter(raw)
    assert (len(raw), len(clean)) == (613, 354)
    assert clean.exclusion_report[INCOMPLETE] == 259
    assert sum(clean.exclusion_report.values()) == len(raw) - len(clean)
    reference = read_diaries(DATA / "synthetic_survey.csv")
    assert sorted(clean.participants, key=lambda p: p.id) == sorted(reference.participants, key=lambda p: p.id)
    assert len(clean.contacts) == 828


def _province_survey(sizes, day="2020-03-10"):
    rows = []
    n = 0
    for prov, k in sizes.items():
        for _ in range(k):
            n += 1
            rows += [p_row(f"P{n}", province=prov, day=day), c_row(f"P{n}")]
    return parse_diaries(diary_text(*rows))


def test_small_province_excluded():
    clean = validate_and_filter(_province_survey({"Sichuan": 12, "Hebei": 9}))
    assert len(clean) == 12
    assert {p.province for p in clean.participants} == {"Sichuan"}
    assert clean.exclusion_report[PROVINCE_BELOW_THRESHOLD] == 9
    assert all(c.participant_id in {p.id for p in clean.participants} for c in clean.contacts)


def test_nothing_to_exclude():
    raw = _province_survey({"Henan": 20})
    clean = validate_and_filter(raw)
    assert len(clean) == 20
    assert set(clean.exclusion_report) == set(EXCLUSION_REASONS)
    assert not any(clean.exclusion_report.values())


def test_residency_window_and_excluded_province():
    rows = [p_row("H", province="Hubei"), p_row("X", province="Taiwan"), p_row("L", day="2020-04-01")]
    rows += [p_row(f"S{i}") for i in range(10)]
    raw = parse_diaries(diary_text(*rows))
    clean = validate_and_filter(raw)
    rep = clean.exclusion_report
    assert len(clean) == 10
    assert (rep["excluded_province"], rep["outside_mainland"], rep["outside_study_window"]) == (1, 1, 1)
    relaxed = validate_and_filter(raw, (date(2020, 3, 1), date(2020, 4, 30)), (), require_mainland=False,
                                  min_province_size=1)
    assert len(relaxed) == 13


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from(["Sichuan", "Hebei", "Henan", "Hubei", "Macau"]),
                       st.integers(0, 14), min_size=1))
def test_filter_idempotent_and_report_sums(sizes):
    raw = _province_survey(sizes)
    once = validate_and_filter(raw)
    twice = validate_and_filter(once)
    assert twice == once
    assert sum(once.exclusion_report.values()) == len(raw) - len(once)
    for c in once.contacts:
        assert 0 <= c.age_group < 6
