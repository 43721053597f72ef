import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from stlkit.lifting import ApEntry, ApMap, FullPair
from stlkit.lifting import parse_grounded
from stlkit.syntax import FormatSpec

settings.register_profile(
    "stlkit", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("stlkit")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def annotation_examples():
    return json.loads((DATA / "annotation_examples.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def domain_rows():
    rows = []
    for line in (DATA / "domain_examples.jsonl").read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def ap_map_for(row) -> ApMap:
    """Char ranges from sequential first-occurrence search, entries in sentence order."""
    entries = []
    cursor = 0
    for i, apd in enumerate(row["aps"], start=1):
        at = row["nl"].index(apd["span"], cursor)
        entries.append(ApEntry(i, apd["span"], apd["name"], at, at + len(apd["span"])))
        cursor = at + len(apd["span"])
    return ApMap(tuple(entries))


def full_pair_for(row) -> FullPair:
    fmt = FormatSpec.from_id(row["format"])
    ap_map = ap_map_for(row)
    return FullPair(nl=row["nl"], stl=parse_grounded(row["stl"], fmt, ap_map), ap_map=ap_map)


@pytest.fixture(scope="session")
def domain_pairs(domain_rows):
    return [(row, full_pair_for(row)) for row in domain_rows]
