import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA, c_row, diary_text, p_row
from contactkit.analysis import (CONTACTS, DURATION, ContactMatrixEstimator, MixingMatrices,
                                 build_mixing_matrices, location_distribution, population_adjusted_mean,
                                 quantile, relationship_distribution, same_group_fraction, summary_stats)
from contactkit.diary import LOCATIONS, RELATIONS, parse_diaries, read_diaries
from contactkit.exceptions import UncoveredStratumError
from contactkit.population import PopulationPyramid


@pytest.fixture(scope="module")
def fixture_survey():
    return read_diaries(DATA / "synthetic_survey.csv")


def test_two_contact_participant_summary():
    survey = parse_diaries(diary_text(p_row("A"), c_row("A", minutes=180), c_row("A", minutes=300)))
    assert summary_stats(survey, "overall", CONTACTS)["overall"].mean == 2
    assert summary_stats(survey, "overall", DURATION)["overall"].mean == 4.0


def test_quantile_linear_interpolation():
    xs = [1, 2, 3, 4]
    assert quantile(xs, 0.25) == 1.75
    assert quantile(xs, 0.75) == 3.25
    assert quantile([5.0], 0.25) == 5.0


def test_fixture_overall_row_is_plausible(fixture_survey):
    s = summary_stats(fixture_survey, "overall", CONTACTS)["overall"]
    assert s.n == 354
    assert s.mean == pytest.approx(828 / 354, rel=1e-15)


def test_population_adjusted_mean_examples():
    assert population_adjusted_mean([1.0, 3.0], [0.25, 0.75]) == 2.5
    pyr = PopulationPyramid(np.linspace(1, 2, 18))
    assert population_adjusted_mean([2.3] * 6, pyr) == pytest.approx(2.3, rel=1e-15)


def test_population_adjusted_mean_hand_oracle():
    means = [2.9, 2.2, 2.0, 2.4, 2.7, 2.1]
    w = [0.21, 0.07, 0.08, 0.09, 0.10, 0.45]
    hand = (2.9 * 0.21 + 2.2 * 0.07 + 2.0 * 0.08 + 2.4 * 0.09 + 2.7 * 0.10 + 2.1 * 0.45) / 1.0
    assert population_adjusted_mean(means, w) == pytest.approx(hand, rel=1e-14)


def test_population_adjusted_mean_uncovered_stratum():
    with pytest.raises(UncoveredStratumError):
        population_adjusted_mean([1.0, None], [0.5, 0.5])
    assert population_adjusted_mean([1.0, None], [1.0, 0.0]) == 1.0


@given(st.floats(0, 50, allow_nan=False),
       st.lists(st.floats(0.001, 1.0), min_size=18, max_size=18))
def test_population_adjusted_mean_constant_invariance(value, props):
    pyr = PopulationPyramid(props)
    assert population_adjusted_mean([value] * 6, pyr) == pytest.approx(value, rel=1e-12, abs=1e-300)


def test_single_participant_matrix():
    survey = parse_diaries(diary_text(p_row("A", age=22), c_row("A", age=23, minutes=120),
                                      c_row("A", age=50, minutes=60)))
    mm = build_mixing_matrices(survey)
    expected_M = np.zeros(6)
    expected_M[[1, 5]] = 1.0
    expected_T = np.zeros(6)
    expected_T[1], expected_T[5] = 2.0, 1.0
    assert mm.M[1].tolist() == expected_M.tolist()
    assert mm.T[1].tolist() == expected_T.tolist()
    assert np.count_nonzero(mm.M) == 2
    assert mm.empty_rows.tolist() == [True, False, True, True, True, True]


def test_no_contacts_gives_zero_matrices():
    mm = build_mixing_matrices(parse_diaries(diary_text(p_row("A"), p_row("B", age=50))))
    assert not mm.M.any() and not mm.T.any()


def test_mean_over_participants_not_reporters():
    survey = parse_diaries(diary_text(p_row("A", age=27), c_row("A", age=26), c_row("A", age=28),
                                      p_row("B", age=29)))
    assert build_mixing_matrices(survey).M[2, 2] == 1.0


def test_zero_duration_contacts_rejected():
    survey = parse_diaries(diary_text(p_row("A"), c_row("A", minutes=0)))
    with pytest.raises(ValueError, match="zero total duration"):
        build_mixing_matrices(survey)


def test_matrices_validation():
    M = np.eye(6)
    with pytest.raises(ValueError):
        MixingMatrices(M, np.zeros((6, 6)), np.ones(6))
    with pytest.raises(ValueError):
        MixingMatrices(-M, -M, np.ones(6))
    with pytest.raises(ValueError):
        MixingMatrices(np.eye(5), np.eye(5), np.ones(6))


def test_matrices_json_round_trip(fixture_survey):
    mm = build_mixing_matrices(fixture_survey)
    back = MixingMatrices.from_json(mm.to_json())
    assert np.array_equal(back.M, mm.M) and np.array_equal(back.T, mm.T)
    assert back.participant_counts.tolist() == [54, 158, 78, 33, 17, 14]


def test_row_sums_match_stratified_contact_means(fixture_survey):
    mm = build_mixing_matrices(fixture_survey)
    means = summary_stats(fixture_survey, "age_group", CONTACTS)
    for a, s in enumerate(means.values()):
        assert math.fsum(mm.M[a]) == pytest.approx(s.mean, rel=1e-14)


def test_estimator_api(fixture_survey):
    est = ContactMatrixEstimator()
    mm = est.fit_transform(fixture_survey)
    assert est.get_params() == {"duration_unit_minutes": 60.0}
    assert np.array_equal(est.M_, mm.M)
    minutes = ContactMatrixEstimator(duration_unit_minutes=1).fit(fixture_survey)
    np.testing.assert_allclose(minutes.T_, mm.T * 60, rtol=1e-15)
    with pytest.raises(TypeError):
        ContactMatrixEstimator().fit([1, 2, 3])


def test_all_home_location_point_mass():
    survey = parse_diaries(diary_text(p_row("A"), c_row("A"), c_row("A", age=60)))
    assert list(location_distribution(survey)["overall"].values()) == [1.0, 0, 0, 0, 0, 0]


@pytest.mark.parametrize("func, cats", [(relationship_distribution, RELATIONS),
                                        (location_distribution, LOCATIONS)])
@pytest.mark.parametrize("weight", ["count", "duration"])
def test_distributions_sum_to_one(fixture_survey, func, cats, weight):
    for stratifier in ("overall", "age_group", "sex"):
        for dist in func(fixture_survey, stratifier, weight).values():
            assert list(dist) == list(cats)
            assert abs(math.fsum(dist.values()) - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(RELATIONS), st.sampled_from(LOCATIONS)), min_size=1, max_size=20),
       st.integers(1, 1440))
def test_equal_durations_make_weightings_coincide(contacts, minutes):
    rows = [p_row("A")] + [c_row("A", minutes=minutes, relation=r, location=loc) for r, loc in contacts]
    survey = parse_diaries(diary_text(*rows))
    for func in (relationship_distribution, location_distribution):
        assert func(survey, "overall", "count") == func(survey, "overall", "duration")


def test_same_group_fraction():
    survey = parse_diaries(diary_text(p_row("A", age=22), c_row("A", age=21), c_row("A", age=24)))
    assert same_group_fraction(survey)[1] == 1.0
    rows = [p_row("B", age=31)] + [c_row("B", age=32)] * 3 + [c_row("B", age=60)] * 6
    frac = same_group_fraction(parse_diaries(diary_text(*rows)))
    assert frac[3] == 1 / 3
    assert frac[0] is None
