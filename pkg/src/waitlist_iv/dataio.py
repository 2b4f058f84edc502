"""CSV ingestion and export of student records."""
from __future__ import annotations

import csv
from collections import defaultdict

from .errors import IngestionError
from .estimation import StudentRecord

REQUIRED = ("student_id", "stratum_id", "rank", "offered", "enrolled", "outcome")
OPTIONAL = ("accepter",)


def _flag(value: str, column: str, row: int) -> bool:
    value = value.strip()
    if value not in ("0", "1"):
        raise IngestionError(f"column {column!r} must be 0 or 1, got {value!r}", [row])
    return value == "1"


def read_records(path) -> list[StudentRecord]:
    """Parse a UTF-8 CSV with a header row. Row numbers in errors count the header as 1."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED if c not in header]
        if missing:
            raise IngestionError(f"missing required columns: {', '.join(missing)}")
        has_types = "accepter" in header
        records: list[StudentRecord] = []
        seen: dict = defaultdict(list)
        for row_no, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in REQUIRED):
                raise IngestionError("wrong number of fields", [row_no])
            try:
                rank = int(row["rank"])
            except ValueError:
                raise IngestionError(f"rank must be an integer, got {row['rank']!r}", [row_no]) from None
            if rank < 1:
                raise IngestionError(f"rank must be positive, got {rank}", [row_no])
            try:
                outcome = float(row["outcome"])
            except ValueError:
                raise IngestionError(f"outcome must be a number, got {row['outcome']!r}", [row_no]) from None
            accepter = None
            if has_types and row["accepter"].strip() != "":
                accepter = _flag(row["accepter"], "accepter", row_no)
            rec = StudentRecord(
                student_id=row["student_id"],
                stratum_id=row["stratum_id"],
                rank=rank,
                offered=_flag(row["offered"], "offered", row_no),
                enrolled=_flag(row["enrolled"], "enrolled", row_no),
                outcome=outcome,
                accepter=accepter,
            )
            seen[(rec.stratum_id, rank)].append(row_no)
            records.append(rec)
    for (stratum, rank), rows in seen.items():
        if len(rows) > 1:
            raise IngestionError(f"stratum {stratum!r}: duplicate rank {rank}", rows)
    return records


def write_records(records, path) -> None:
    with_types = any(r.accepter is not None for r in records)
    cols = REQUIRED + (OPTIONAL if with_types else ())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in records:
            row = [r.student_id, r.stratum_id, r.rank, int(r.offered), int(r.enrolled), repr(float(r.outcome))]
            if with_types:
                row.append("" if r.accepter is None else int(r.accepter))
            writer.writerow(row)
