import math
from collections import Counter
from fractions import Fraction

import pytest

from classcount.ingest import (
    DataFormatError,
    FrequencyData,
    from_raw_counts,
    parse_frequencies,
    parse_raw_counts,
    power_moment,
)

CHOLERA_TEXT = "1 32\n2 16\n3 6\n4 1"


def test_parse_cholera_counts():
    d = parse_frequencies(CHOLERA_TEXT)
    assert d.counts == {1: 32, 2: 16, 3: 6, 4: 1}
    assert d.n == 55
    assert d.S == 86
    assert d.x_max == 4


def test_parse_single_class():
    d = parse_frequencies("5 1")
    assert (d.n, d.S, d.x_max) == (1, 5, 5)


def test_parse_drops_zero_counts_and_comments():
    d = parse_frequencies("1 3\n2 0\n# note\n3 2")
    assert d.counts == {1: 3, 3: 2}
    assert (d.n, d.S) == (5, 9)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(DataFormatError) as exc:
        parse_frequencies("1 2\nzap\n3 4")
    assert exc.value.line == 2
    with pytest.raises(DataFormatError, match="duplicate"):
        parse_frequencies("1 2\n1 3")
    with pytest.raises(DataFormatError, match="empty"):
        parse_frequencies("# nothing\n")
    with pytest.raises(DataFormatError, match="empty"):
        parse_frequencies("1 0\n2 0")
    with pytest.raises(DataFormatError):
        parse_frequencies("0 5")
    with pytest.raises(DataFormatError):
        parse_frequencies("2 -1")


def test_from_raw_counts_tabulates():
    d = from_raw_counts([1, 1, 2])
    assert d.counts == {1: 2, 2: 1}
    assert (d.n, d.S) == (3, 4)
    d = from_raw_counts([4, 4, 4, 4])
    assert d.counts == {4: 4}
    assert (d.n, d.S) == (4, 16)


def test_from_raw_counts_matches_parsed_cholera():
    values = [1] * 32 + [2] * 16 + [3] * 6 + [4]
    # oracle: plain Counter tabulation
    assert dict(Counter(values)) == parse_frequencies(CHOLERA_TEXT).counts
    assert from_raw_counts(values).counts == parse_frequencies(CHOLERA_TEXT).counts


def test_from_raw_counts_rejects_bad_values():
    with pytest.raises(ValueError):
        from_raw_counts([])
    with pytest.raises(ValueError):
        from_raw_counts([1, 0, 2])


def test_parse_raw_counts_text():
    d = parse_raw_counts("2\n# comment\n2\n5\n")
    assert d.counts == {2: 2, 5: 1}
    with pytest.raises(DataFormatError):
        parse_raw_counts("")


def test_round_trip_multiset():
    values = [3, 1, 1, 7, 3, 3]
    assert from_raw_counts(values).to_values() == sorted(values)


def test_pmf_values(cholera, est):
    assert cholera.pmf(1) == pytest.approx(32 / 55)
    assert cholera.pmf(7) == 0.0
    assert est.pmf(2) == pytest.approx(253 / 1825)
    with pytest.raises(ValueError):
        cholera.pmf(0)


def test_pmf_sums_to_one_exactly(cholera, est):
    for d in (cholera, est):
        assert abs(sum(d.pmf(x) for x in range(1, d.x_max + 1)) - 1.0) < 1e-12
        exact = sum(Fraction(nx, d.n) for nx in d.counts.values())
        assert exact == 1


def test_empirical_moments(cholera):
    assert cholera.moment(2) == pytest.approx(2 * 16 / 55)
    assert cholera.moment(4) == pytest.approx(24 * 1 / 55)
    assert cholera.moment(9) == 0.0
    with pytest.raises(OverflowError):
        cholera.moment(171)


def test_power_moment(cholera):
    pmf = cholera.pmf_map()
    assert power_moment(pmf, 0) == 1.0
    # oracle: direct summation
    s1 = sum(x * nx / 55 for x, nx in cholera.counts.items())
    assert power_moment(pmf, 1) == pytest.approx(s1)
    assert power_moment(pmf, 1) == pytest.approx(86 / 55)
    assert power_moment(pmf, 2) == pytest.approx(166 / 55)
    # in rational arithmetic the first power sum is S/n exactly
    exact = sum(Fraction(x) * Fraction(nx, cholera.n) for x, nx in cholera.counts.items())
    assert exact == Fraction(cholera.S, cholera.n)
    assert power_moment(pmf, 1) == pytest.approx(cholera.S / cholera.n, rel=1e-14)
    with pytest.raises(ValueError):
        power_moment({1: 0.5, 2: 0.4}, 1)


def test_immutability():
    d = FrequencyData({1: 2})
    with pytest.raises(AttributeError):
        d.n = 10


def test_cdf_values(cholera):
    cdf = cholera.cdf_values()
    assert cdf == pytest.approx([32 / 55, 48 / 55, 54 / 55, 1.0])
    assert cholera.cdf_values(6)[-1] == pytest.approx(1.0)
