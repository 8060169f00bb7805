"""Categorical data schema for trip records.

All traveler and trip attributes are categorical. The category lists below
are the single source of truth for validation, CSV column order, synthetic
generation, and the two output choice sets (transportation mode and trip
duration bin).
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields
from typing import Iterator, Mapping, Optional

from .errors import SchemaViolation

AGE_GROUPS = ("Under 18", "18-24", "25-34", "35-44", "45-54", "55-64", "65+")
INCOME_GROUPS = (
    "Under $10k",
    "$10k-$50k",
    "$50k-$100k",
    "$100k-$150k",
    "$150k-$200k",
    "$200k-$300k",
    "$300k+",
)
EMPLOYMENT_STATUSES = ("under_16", "not_in_labor_force", "unemployed", "employed")
HOUSEHOLD_SIZES = ("1", "2", "3", "4", "5", "6", "7", "8")
AVAILABLE_VEHICLES = ("zero", "one", "two", "three_plus", "unknown_num_vehicles")
EDUCATION_LEVELS = (
    "no_school",
    "k_12",
    "high_school",
    "bachelors_degree",
    "advanced_degree",
    "some_college",
)
TRIP_PURPOSES = (
    "eat",
    "work",
    "home",
    "school",
    "shop",
    "maintenance",
    "social",
    "recreation",
    "other_activity_type",
)
START_TIMES = tuple(str(h) for h in range(24))
PRIMARY_MODES = (
    "walking",
    "biking",
    "auto_passenger",
    "public_transit",
    "private_auto",
    "on_demand_auto",
    "other_travel_mode",
)
DURATION_BINS = ("0-10", "10-20", "20-30", "30-40", "40-50", "50-60")

# Column name -> allowed categories, in canonical CSV order.
INPUT_CATEGORIES: dict[str, tuple[str, ...]] = {
    "age_group": AGE_GROUPS,
    "income_group": INCOME_GROUPS,
    "employment_status": EMPLOYMENT_STATUSES,
    "household_size": HOUSEHOLD_SIZES,
    "available_vehicles": AVAILABLE_VEHICLES,
    "education": EDUCATION_LEVELS,
    "trip_purpose": TRIP_PURPOSES,
    "start_time": START_TIMES,
}
OUTPUT_CATEGORIES: dict[str, tuple[str, ...]] = {
    "primary_mode": PRIMARY_MODES,
    "duration_minutes": DURATION_BINS,
}

PROFILE_FIELDS = (
    "age_group",
    "income_group",
    "employment_status",
    "household_size",
    "available_vehicles",
    "education",
)
CSV_COLUMNS = tuple(INPUT_CATEGORIES) + tuple(OUTPUT_CATEGORIES)
HOUSEHOLD_COLUMN = "household_id"  # optional link column for relative_of edges


@dataclass(frozen=True)
class ChoiceCategorySet:
    """Named, ordered set of candidate option keys for one choice dimension."""

    name: str
    options: tuple[str, ...]

    def __post_init__(self):
        if not self.options:
            raise ValueError(f"choice set {self.name!r} has no options")
        if len(set(self.options)) != len(self.options):
            raise ValueError(f"choice set {self.name!r} has duplicate options")

    def __contains__(self, option: str) -> bool:
        return option in self.options

    def __len__(self) -> int:
        return len(self.options)

    def __iter__(self) -> Iterator[str]:
        return iter(self.options)


PRIMARY_MODE_SET = ChoiceCategorySet("primary_mode", PRIMARY_MODES)
DURATION_SET = ChoiceCategorySet("duration_minutes", DURATION_BINS)
BUNDLED_CHOICE_SETS = {s.name: s for s in (PRIMARY_MODE_SET, DURATION_SET)}


@dataclass(frozen=True)
class AgentProfile:
    """Demographic attributes of one traveler, all categorical."""

    age_group: str
    income_group: str
    employment_status: str
    household_size: str
    available_vehicles: str
    education: str

    def validate(self, row: int = -1) -> "AgentProfile":
        for f in dc_fields(self):
            value = getattr(self, f.name)
            if value not in INPUT_CATEGORIES[f.name]:
                raise SchemaViolation(row, f.name, value)
        return self

    def as_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}

    def key(self) -> tuple[str, ...]:
        """Exact attribute tuple, used as the person-dedup key."""
        return tuple(getattr(self, f.name) for f in dc_fields(self))


@dataclass(frozen=True)
class TripRecord:
    """One observed trip: traveler profile, trip context, and the two choices."""

    profile: AgentProfile
    trip_purpose: str
    start_time: int
    primary_mode: str
    duration_minutes: str
    household_id: Optional[str] = None

    def validate(self, row: int = -1) -> "TripRecord":
        self.profile.validate(row)
        if self.trip_purpose not in TRIP_PURPOSES:
            raise SchemaViolation(row, "trip_purpose", self.trip_purpose)
        if not (isinstance(self.start_time, int) and 0 <= self.start_time <= 23):
            raise SchemaViolation(row, "start_time", self.start_time)
        if self.primary_mode not in PRIMARY_MODES:
            raise SchemaViolation(row, "primary_mode", self.primary_mode)
        if self.duration_minutes not in DURATION_BINS:
            raise SchemaViolation(row, "duration_minutes", self.duration_minutes)
        return self

    def as_row(self) -> dict[str, str]:
        row = self.profile.as_dict()
        row["trip_purpose"] = self.trip_purpose
        row["start_time"] = str(self.start_time)
        row["primary_mode"] = self.primary_mode
        row["duration_minutes"] = self.duration_minutes
        if self.household_id is not None:
            row[HOUSEHOLD_COLUMN] = self.household_id
        return row


def record_from_row(row: Mapping[str, str], index: int) -> TripRecord:
    """Build and validate a TripRecord from one CSV row dict."""
    values = {}
    for column in CSV_COLUMNS:
        if column not in row or row[column] is None:
            raise SchemaViolation(index, column, None, "missing value")
        values[column] = row[column].strip()
    start_raw = values["start_time"]
    if start_raw not in START_TIMES:
        raise SchemaViolation(index, "start_time", start_raw)
    profile = AgentProfile(*(values[f] for f in PROFILE_FIELDS))
    household = row.get(HOUSEHOLD_COLUMN)
    if household is not None:
        household = household.strip() or None
    record = TripRecord(
        profile=profile,
        trip_purpose=values["trip_purpose"],
        start_time=int(start_raw),
        primary_mode=values["primary_mode"],
        duration_minutes=values["duration_minutes"],
        household_id=household,
    )
    return record.validate(index)
