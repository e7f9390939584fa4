"""Reading, validating and filtering contact-diary files.

A diary file is a single CSV holding two kinds of rows, told apart by the
``record_type`` column: ``P`` rows describe a participant and ``C`` rows
describe one contact of the participant named in ``id``.
"""
from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable

from .ages import survey_group
from .exceptions import DiaryParseError

logger = logging.getLogger(__name__)

COLUMNS = (
    "record_type", "id", "age", "age_hi", "sex", "province", "household_size",
    "survey_date", "relation", "location", "duration_minutes",
)
PARTICIPANT_COLUMNS = ("age", "sex", "province", "household_size", "survey_date")
CONTACT_COLUMNS = ("age", "age_hi", "relation", "location", "duration_minutes")

SEXES = ("male", "female", "undisclosed")
RELATIONS = (
    "household_member", "other_relative", "classmate", "colleague",
    "other_schoolmate", "other",
)
LOCATIONS = ("home", "work", "school", "leisure", "transport", "other")

MAX_AGE = 120
MAX_HOUSEHOLD = 30
MINUTES_PER_DAY = 1440

DEFAULT_STUDY_WINDOW = (date(2020, 3, 3), date(2020, 3, 23))
DEFAULT_EXCLUDED_PROVINCES = frozenset({"Hubei"})

MAINLAND_PROVINCES = frozenset(p.casefold() for p in (
    "Anhui", "Beijing", "Chongqing", "Fujian", "Gansu", "Guangdong", "Guangxi",
    "Guizhou", "Hainan", "Hebei", "Heilongjiang", "Henan", "Hubei", "Hunan",
    "Inner Mongolia", "Jiangsu", "Jiangxi", "Jilin", "Liaoning", "Ningxia",
    "Qinghai", "Shaanxi", "Shandong", "Shanghai", "Shanxi", "Sichuan",
    "Tianjin", "Tibet", "Xinjiang", "Yunnan", "Zhejiang",
))

# exclusion reasons, in the order the filters are applied
INCOMPLETE = "incomplete_information"
OUTSIDE_MAINLAND = "outside_mainland"
EXCLUDED_PROVINCE = "excluded_province"
OUTSIDE_WINDOW = "outside_study_window"
PROVINCE_BELOW_THRESHOLD = "province_below_threshold"
EXCLUSION_REASONS = (
    INCOMPLETE, OUTSIDE_MAINLAND, EXCLUDED_PROVINCE, OUTSIDE_WINDOW,
    PROVINCE_BELOW_THRESHOLD,
)


@dataclass(frozen=True)
class Participant:
    """One diary respondent. ``None`` fields mark missing answers."""

    id: str
    age: int | None
    sex: str
    province: str | None
    household_size: int | None
    survey_date: date | None

    @property
    def is_complete(self) -> bool:
        return None not in (self.age, self.province, self.household_size, self.survey_date)

    @property
    def age_group(self) -> int:
        """0-based survey age group."""
        if self.age is None:
            raise ValueError(f"participant {self.id} has no age")
        return survey_group(self.age)


@dataclass(frozen=True)
class ContactRecord:
    participant_id: str
    age: int | None
    age_hi: int | None
    relation: str | None
    location: str | None
    duration_minutes: int | None

    @property
    def is_complete(self) -> bool:
        return None not in (self.age, self.relation, self.location, self.duration_minutes)

    @property
    def age_group(self) -> int:
        """0-based survey age group, ranges resolved by their midpoint."""
        if self.age is None:
            raise ValueError(f"contact of {self.participant_id} has no age")
        return survey_group(self.age, self.age_hi)

    @property
    def duration_hours(self) -> float:
        return self.duration_minutes / 60


@dataclass(frozen=True)
class Survey:
    """Participants with their contacts.

    Freshly parsed surveys carry an empty ``exclusion_report``; after
    :func:`validate_and_filter` it holds one count per exclusion reason.
    """

    participants: tuple[Participant, ...]
    contacts: tuple[ContactRecord, ...]
    exclusion_report: dict[str, int] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.participants)

    def contacts_by_participant(self) -> dict[str, list[ContactRecord]]:
        out: dict[str, list[ContactRecord]] = {p.id: [] for p in self.participants}
        for c in self.contacts:
            out[c.participant_id].append(c)
        return out

    def subset(self, ids: Iterable[str], exclusion_report: dict[str, int] | None = None) -> "Survey":
        keep = set(ids)
        return Survey(
            participants=tuple(p for p in self.participants if p.id in keep),
            contacts=tuple(c for c in self.contacts if c.participant_id in keep),
            exclusion_report=dict(exclusion_report or {}),
        )


def _parse_int(raw: str, column: str, lo: int, hi: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{column}={raw!r} is not an integer") from None
    if not lo <= value <= hi:
        raise ValueError(f"{column}={value} outside [{lo}, {hi}]")
    return value


def _opt(raw: str | None) -> str | None:
    if raw is None:
        return None
    raw = raw.strip()
    return raw or None


def _parse_participant(row: dict[str, str]) -> Participant:
    for col in ("age_hi",) + CONTACT_COLUMNS[2:]:
        if _opt(row[col]) is not None:
            raise ValueError(f"participant row has a value in contact column {col!r}")
    age = _opt(row["age"])
    hh = _opt(row["household_size"])
    day = _opt(row["survey_date"])
    sex = (_opt(row["sex"]) or "undisclosed").lower()
    if sex not in SEXES:
        raise ValueError(f"unknown sex token {sex!r}")
    if day is not None:
        try:
            day = date.fromisoformat(day)
        except ValueError:
            raise ValueError(f"survey_date={day!r} is not an ISO-8601 date") from None
    return Participant(
        id=row["id"].strip(),
        age=None if age is None else _parse_int(age, "age", 0, MAX_AGE),
        sex=sex,
        province=_opt(row["province"]),
        household_size=None if hh is None else _parse_int(hh, "household_size", 1, MAX_HOUSEHOLD),
        survey_date=day,
    )


def _parse_contact(row: dict[str, str]) -> ContactRecord:
    for col in PARTICIPANT_COLUMNS[1:]:
        if _opt(row[col]) is not None:
            raise ValueError(f"contact row has a value in participant column {col!r}")
    age = _opt(row["age"])
    age_hi = _opt(row["age_hi"])
    relation = _opt(row["relation"])
    location = _opt(row["location"])
    duration = _opt(row["duration_minutes"])
    if age is not None:
        age = _parse_int(age, "age", 0, MAX_AGE)
    if age_hi is not None:
        if age is None:
            raise ValueError("age_hi given without age")
        age_hi = _parse_int(age_hi, "age_hi", 0, MAX_AGE)
        if age_hi < age:
            raise ValueError(f"age range [{age}, {age_hi}] has lo > hi")
    if relation is not None and relation not in RELATIONS:
        raise ValueError(f"unknown relation token {relation!r}")
    if location is not None and location not in LOCATIONS:
        raise ValueError(f"unknown location token {location!r}")
    if duration is not None:
        duration = _parse_int(duration, "duration_minutes", 0, MINUTES_PER_DAY)
    return ContactRecord(
        participant_id=row["id"].strip(),
        age=age, age_hi=age_hi, relation=relation, location=location,
        duration_minutes=duration,
    )


def parse_diaries(source: IO[bytes] | IO[str] | bytes | str) -> Survey:
    """Parse a diary CSV into a raw :class:`Survey`.

    ``source`` may be a binary or text stream, or the file contents. Every
    malformed row is collected and reported together in a
    :class:`DiaryParseError` carrying ``(line_number, message)`` pairs.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    if text.startswith("﻿"):
        text = text[1:]

    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        raise DiaryParseError([(1, "missing header row")])
    missing = [c for c in COLUMNS if c not in reader.fieldnames]
    if missing:
        raise DiaryParseError([(1, f"missing required column(s): {', '.join(missing)}")])

    errors: list[tuple[int, str]] = []
    participants: dict[str, Participant] = {}
    contacts: list[tuple[int, ContactRecord]] = []
    for row in reader:
        line = reader.line_num
        kind = (row["record_type"] or "").strip().upper()
        if not (row["id"] or "").strip():
            errors.append((line, "empty id"))
            continue
        try:
            if kind == "P":
                p = _parse_participant(row)
                if p.id in participants:
                    raise ValueError(f"duplicate participant id {p.id!r}")
                participants[p.id] = p
            elif kind == "C":
                contacts.append((line, _parse_contact(row)))
            else:
                raise ValueError(f"unknown record_type {row['record_type']!r}")
        except ValueError as exc:
            errors.append((line, str(exc)))

    for line, c in contacts:
        if c.participant_id not in participants:
            errors.append((line, f"contact references unknown participant {c.participant_id!r}"))
    if errors:
        raise DiaryParseError(sorted(errors))
    return Survey(tuple(participants.values()), tuple(c for _, c in contacts))


def read_diaries(path) -> Survey:
    with open(path, "rb") as fh:
        return parse_diaries(fh)


def validate_and_filter(
    survey: Survey,
    study_window: tuple[date, date] = DEFAULT_STUDY_WINDOW,
    excluded_provinces: Iterable[str] = DEFAULT_EXCLUDED_PROVINCES,
    *,
    require_mainland: bool = True,
    min_province_size: int = 10,
) -> Survey:
    """Drop unusable participants and return the clean survey.

    Filters run in the order of :data:`EXCLUSION_REASONS`; each excluded
    participant is counted once, under the first reason that applies. A
    participant is incomplete when any demographic answer is missing or any
    of their contacts lacks age, relation, location or duration.
    """
    start, end = study_window
    excluded = {p.casefold() for p in excluded_provinces}
    by_pid = survey.contacts_by_participant()
    report = Counter({reason: 0 for reason in EXCLUSION_REASONS})

    kept: list[Participant] = []
    for p in survey.participants:
        if not p.is_complete or not all(c.is_complete for c in by_pid[p.id]):
            report[INCOMPLETE] += 1
        elif require_mainland and p.province.casefold() not in MAINLAND_PROVINCES:
            report[OUTSIDE_MAINLAND] += 1
        elif p.province.casefold() in excluded:
            report[EXCLUDED_PROVINCE] += 1
        elif not start <= p.survey_date <= end:
            report[OUTSIDE_WINDOW] += 1
        else:
            kept.append(p)

    sizes = Counter(p.province.casefold() for p in kept)
    small = {prov for prov, n in sizes.items() if n < min_province_size}
    if small:
        logger.info("dropping provinces below %d participants: %s", min_province_size, sorted(small))
    final = [p for p in kept if p.province.casefold() not in small]
    report[PROVINCE_BELOW_THRESHOLD] = len(kept) - len(final)
    return survey.subset((p.id for p in final), dict(report))
