import pytest

from spdc_stats import build_table, build_table_two, load_bundled_sweep

REP_RATE = 76.0e6


@pytest.fixture(scope="session")
def bundled_records():
    return load_bundled_sweep()


@pytest.fixture(scope="session")
def inverted_rows(bundled_records):
    return build_table(bundled_records, REP_RATE)


@pytest.fixture(scope="session")
def correlation_reports(inverted_rows):
    return build_table_two(inverted_rows)
