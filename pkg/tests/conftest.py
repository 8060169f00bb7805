import pytest

from preference_chain.ingest import SyntheticSpec
from preference_chain.schema import AgentProfile, TripRecord

# One verdict line per release criterion, filled in by tests/test_acceptance.py
# and printed as a terminal section after the run (survives output capture).


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    from tests._acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


def make_profile(**overrides) -> AgentProfile:
    base = dict(
        age_group="25-34",
        income_group="$50k-$100k",
        employment_status="employed",
        household_size="2",
        available_vehicles="one",
        education="bachelors_degree",
    )
    base.update(overrides)
    return AgentProfile(**base)


def make_record(
    profile: AgentProfile = None,
    trip_purpose: str = "work",
    start_time: int = 8,
    primary_mode: str = "private_auto",
    duration_minutes: str = "10-20",
    household_id=None,
    **profile_overrides,
) -> TripRecord:
    return TripRecord(
        profile=profile or make_profile(**profile_overrides),
        trip_purpose=trip_purpose,
        start_time=start_time,
        primary_mode=primary_mode,
        duration_minutes=duration_minutes,
        household_id=household_id,
    )


@pytest.fixture
def profile():
    return make_profile()


def recovery_spec() -> SyntheticSpec:
    """The hour-conditioned synthetic population used by the release gate."""
    from preference_chain.ingest import hour_conditioned_spec

    return hour_conditioned_spec()
