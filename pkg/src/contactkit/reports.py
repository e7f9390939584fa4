"""Tidy CSV/JSON renderings of results, written atomically."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .ages import MODEL_GROUP_LABELS, N_MODEL_GROUPS, SURVEY_GROUP_LABELS
from .analysis import (METRICS, STRATIFIERS, format_real, location_distribution,
                       metric_values, population_adjusted_distribution, population_adjusted_mean,
                       relationship_distribution, same_group_fraction, summary_stats)
from .diary import Survey
from .exceptions import UncoveredStratumError
from .population import PopulationPyramid
from .stats import BootstrapRow, mann_whitney_u, t_test

logger = logging.getLogger(__name__)

SIGNIFICANCE_LEVEL = 0.01


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else format_real(value)
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# -- survey outputs -------------------------------------------------------------

def summary_table(survey: Survey, pyramid: PopulationPyramid | None = None) -> str:
    rows = []
    for stratifier in STRATIFIERS:
        for metric in METRICS:
            for stratum, s in summary_stats(survey, stratifier, metric).items():
                rows.append((stratifier, stratum, metric, s.n, s.mean, s.iqr[0], s.iqr[1]))
    if pyramid is not None:
        for metric in METRICS:
            by_group = summary_stats(survey, "age_group", metric)
            means = [by_group[lab].mean if lab in by_group else None for lab in SURVEY_GROUP_LABELS]
            n = sum(s.n for s in by_group.values())
            try:
                adj = population_adjusted_mean(means, pyramid)
            except UncoveredStratumError as exc:
                logger.warning("no population-adjusted %s: %s", metric, exc)
                continue
            rows.append(("population_adjusted", "all", metric, n, adj, None, None))
    return render_csv(("stratifier", "stratum", "metric", "n", "mean", "q1", "q3"), rows)


def _distribution_table(func, column: str, survey: Survey, pyramid) -> str:
    rows = []
    for weight in ("count", "duration"):
        blocks = list(func(survey, "overall", weight).items())
        by_group = func(survey, "age_group", weight)
        blocks += list(by_group.items())
        if pyramid is not None and by_group:
            try:
                blocks.append(("population_adjusted", population_adjusted_distribution(by_group, pyramid)))
            except UncoveredStratumError as exc:
                logger.warning("no population-adjusted %s distribution: %s", column, exc)
        for stratum, dist in blocks:
            for cat, prob in dist.items():
                rows.append((stratum, weight, cat, prob))
    return render_csv(("stratum", "weight", column, "probability"), rows)


def relations_table(survey: Survey, pyramid=None) -> str:
    return _distribution_table(relationship_distribution, "relation", survey, pyramid)


def locations_table(survey: Survey, pyramid=None) -> str:
    return _distribution_table(location_distribution, "location", survey, pyramid)


def same_group_table(survey: Survey) -> str:
    rows = []
    for metric in ("contacts", "duration"):
        for label, frac in zip(SURVEY_GROUP_LABELS, same_group_fraction(survey, metric)):
            rows.append((label, metric, frac))
    return render_csv(("age_group", "metric", "fraction"), rows)


def bootstrap_table(rows: list[BootstrapRow]) -> str:
    return render_csv(("stratum", "metric", "estimate", "se", "ci_lo", "ci_hi"), rows)


def province_tests_table(survey: Survey) -> str:
    """Each province against the largest one, Mann-Whitney and t-test."""
    rows = []
    for metric in METRICS:
        by_prov = metric_values(survey, metric, "province")
        if not by_prov:
            continue
        provinces = list(by_prov)
        ref = provinces[0]
        for prov in provinces[1:]:
            a, b = by_prov[prov], by_prov[ref]
            if not a or not b:
                continue
            mw = mann_whitney_u(a, b)
            tt = t_test(a, b)
            rows.append((prov, ref, metric, len(a), len(b), mw.statistic, mw.pvalue, mw.method,
                         tt.statistic, tt.pvalue, mw.pvalue <= SIGNIFICANCE_LEVEL))
    header = ("province", "reference", "metric", "n", "n_reference", "u", "p_mann_whitney",
              "method", "t", "p_t_test", "significant")
    return render_csv(header, rows)


# -- model outputs --------------------------------------------------------------

def trajectory_table(trajectory) -> str:
    header = (["t"] + [f"S_{k}" for k in range(1, N_MODEL_GROUPS + 1)]
              + [f"I_{k}" for k in range(1, N_MODEL_GROUPS + 1)]
              + [f"R_{k}" for k in range(1, N_MODEL_GROUPS + 1)])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for i, t in enumerate(trajectory.t):
        vals = [t, *trajectory.S[i], *trajectory.I[i], *trajectory.R[i]]
        buf.write(",".join(format_real(v) for v in vals) + "\n")
    return buf.getvalue()


def burden_rows(report, model: str | None = None):
    for indicator, band, count, share in report.rows():
        yield ((model,) if model is not None else ()) + (indicator, band, count, share)


def burden_table(report) -> str:
    return render_csv(("indicator", "band", "count", "share"), burden_rows(report))


def infections_table(infections) -> str:
    return render_csv(("age_group", "infections"), zip(MODEL_GROUP_LABELS, map(float, infections)))
