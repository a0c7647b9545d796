from __future__ import annotations

from pathlib import Path

import pytest

from tvrsql.eventlog import Catalog, parse_schema_ddl
from tvrsql.times import Timestamp

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"


def T(text: str) -> Timestamp:
    return Timestamp.parse(text)


def load_bid_catalog(bounded: bool = False) -> Catalog:
    kind = "TABLE" if bounded else "STREAM"
    ddl = f"CREATE {kind} Bid (bidtime TIMESTAMP EVENTTIME, price INT FORMAT '$', item STRING);"
    catalog = parse_schema_ddl(ddl)
    catalog.attach_log("Bid", (DATA / "bids.log").read_text())
    return catalog


@pytest.fixture
def bid_catalog() -> Catalog:
    return load_bid_catalog()


# The running example: NEXMark-style query 7 (top bid per ten-minute window),
# adapted to the demo schema's `item` column name.
Q7_BODY = """\
SELECT MaxBid.wstart, MaxBid.wend, Bid.bidtime, Bid.price, Bid.item
FROM Bid,
  (SELECT MAX(TumbleBid.price) maxPrice,
          TumbleBid.wstart wstart,
          TumbleBid.wend wend
   FROM Tumble(data => TABLE(Bid),
               timecol => DESCRIPTOR(bidtime),
               dur => INTERVAL '10' MINUTE) TumbleBid
   GROUP BY TumbleBid.wend) MaxBid
WHERE Bid.price = MaxBid.maxPrice
  AND Bid.bidtime >= MaxBid.wend - INTERVAL '10' MINUTE
  AND Bid.bidtime < MaxBid.wend"""


def q7(emit: str = "") -> str:
    return Q7_BODY + (f" {emit};" if emit else ";")


# Expected output rows, as value tuples (wstart, wend, bidtime, price, item).
ROW_A = (T("8:00"), T("8:10"), T("8:07"), 2, "A")
ROW_B = (T("8:10"), T("8:20"), T("8:11"), 3, "B")
ROW_C = (T("8:00"), T("8:10"), T("8:05"), 4, "C")
ROW_D = (T("8:00"), T("8:10"), T("8:09"), 5, "D")
ROW_F = (T("8:10"), T("8:20"), T("8:17"), 6, "F")

FULL_RESULT = {ROW_D, ROW_F}
PARTIAL_RESULT_813 = {ROW_C, ROW_B}


def pytest_runtest_logreport(report):
    # One pass/fail line per acceptance criterion on the terminal.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {outcome}", flush=True)
