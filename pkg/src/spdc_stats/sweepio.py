"""File formats: sweep CSVs, derived tables, and bundled reference data.

Sweep files are RFC-4180 CSVs with a mandatory header.  Units everywhere:
powers in mW, rates in counts/s, repetition rate in Hz.  The sweep columns
are exactly ``power_mw, sc1, sc2, cc`` optionally followed by
``cc12, cc13, cc123``; within a row the optional trio is either fully
present or fully empty.  Powers must be strictly increasing and counts
non-negative.  Derived tables are emitted as CSV (for diffing) and JSON
(for chaining subcommands); missing or divergent values render as "-".
"""

from __future__ import annotations

import csv
import json
from importlib import resources

from .correlation import CorrelationReport
from .errors import SweepFormatError
from .inversion import CountRecord, FailedRow, TableOneRow

SWEEP_COLUMNS = ("power_mw", "sc1", "sc2", "cc")
SWEEP_OPTIONAL = ("cc12", "cc13", "cc123")

TABLE1_COLUMNS = (
    "power_mw", "sc1", "sc2", "cc", "tau", "eta1", "eta2",
    "pair_rate", "one_pair_rate", "mean_pairs", "status",
)

TABLE2_COLUMNS = (
    "power_mw", "g2_measured", "g2_predicted", "g2_heralded",
    "g2_unheralded", "g2_signal_idler", "g3_signal_idler",
    "g3_unheralded", "status",
)

CURVE_COLUMNS = ("source_kind", "eta", "variant", "mean", "detected")

MISSING = "-"


def _fmt(value) -> str:
    if value is None:
        return MISSING
    return repr(float(value))


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SweepFormatError(
            f"column {column!r}: {text!r} is not a number", line
        ) from None


def read_sweep(path) -> list[CountRecord]:
    """Parse and validate a sweep CSV; raises SweepFormatError with the
    offending 1-based line number on any malformation."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SweepFormatError("missing header row", 1) from None
        header = tuple(h.strip() for h in header)
        if header == SWEEP_COLUMNS:
            has_optional = False
        elif header == SWEEP_COLUMNS + SWEEP_OPTIONAL:
            has_optional = True
        else:
            raise SweepFormatError(
                f"header must be {','.join(SWEEP_COLUMNS)} optionally "
                f"followed by {','.join(SWEEP_OPTIONAL)}; got "
                f"{','.join(header)}",
                1,
            )
        records: list[CountRecord] = []
        prev_power = None
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            row = [cell.strip() for cell in row]
            expected_len = len(SWEEP_COLUMNS) + (
                len(SWEEP_OPTIONAL) if has_optional else 0
            )
            if len(row) != expected_len:
                raise SweepFormatError(
                    f"expected {expected_len} columns, got {len(row)}", line
                )
            base = [
                _parse_float(row[i], line, SWEEP_COLUMNS[i])
                for i in range(4)
            ]
            split: list[float | None] = [None, None, None]
            if has_optional:
                tail = row[4:]
                filled = [cell != MISSING and cell != "" for cell in tail]
                if any(filled) and not all(filled):
                    raise SweepFormatError(
                        "cc12, cc13, cc123 must be all present or all absent",
                        line,
                    )
                if all(filled):
                    split = [
                        _parse_float(tail[i], line, SWEEP_OPTIONAL[i])
                        for i in range(3)
                    ]
            if any(v < 0 for v in base[1:]) or any(
                v is not None and v < 0 for v in split
            ):
                raise SweepFormatError("counts must be non-negative", line)
            if prev_power is not None and base[0] <= prev_power:
                raise SweepFormatError(
                    f"powers must be strictly increasing "
                    f"({base[0]} after {prev_power})",
                    line,
                )
            prev_power = base[0]
            try:
                records.append(
                    CountRecord(
                        power_mw=base[0], sc1=base[1], sc2=base[2], cc=base[3],
                        cc12=split[0], cc13=split[1], cc123=split[2],
                    )
                )
            except ValueError as exc:
                raise SweepFormatError(str(exc), line) from None
    return records


def write_sweep(records: list[CountRecord], path) -> None:
    has_optional = any(r.has_split_counts for r in records)
    cols = SWEEP_COLUMNS + (SWEEP_OPTIONAL if has_optional else ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in records:
            row = [_fmt(r.power_mw), _fmt(r.sc1), _fmt(r.sc2), _fmt(r.cc)]
            if has_optional:
                row += [_fmt(r.cc12), _fmt(r.cc13), _fmt(r.cc123)]
            writer.writerow(row)


def _table1_row_cells(item: TableOneRow | FailedRow) -> list[str]:
    if isinstance(item, FailedRow):
        r = item.record
        return [
            _fmt(r.power_mw), _fmt(r.sc1), _fmt(r.sc2), _fmt(r.cc),
            MISSING, MISSING, MISSING, MISSING, MISSING, MISSING,
            f"failed: {item.error}",
        ]
    return [
        _fmt(item.power_mw), _fmt(item.sc1), _fmt(item.sc2), _fmt(item.cc),
        _fmt(item.tau), _fmt(item.eta1), _fmt(item.eta2),
        _fmt(item.pair_rate), _fmt(item.one_pair_rate), _fmt(item.mean_pairs),
        "ok",
    ]


def write_table1_csv(rows: list[TableOneRow | FailedRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE1_COLUMNS)
        for item in rows:
            writer.writerow(_table1_row_cells(item))


def write_table1_json(
    rows: list[TableOneRow | FailedRow], f: float, path
) -> None:
    payload = {"repetition_rate_hz": f, "rows": []}
    for item in rows:
        if isinstance(item, FailedRow):
            r = item.record
            payload["rows"].append(
                {
                    "status": f"failed: {item.error}",
                    "power_mw": r.power_mw,
                    "sc1": r.sc1,
                    "sc2": r.sc2,
                    "cc": r.cc,
                    "cc12": r.cc12,
                    "cc13": r.cc13,
                    "cc123": r.cc123,
                }
            )
            continue
        payload["rows"].append(
            {
                "status": "ok",
                "power_mw": item.power_mw,
                "sc1": item.sc1,
                "sc2": item.sc2,
                "cc": item.cc,
                "cc12": item.cc12,
                "cc13": item.cc13,
                "cc123": item.cc123,
                "tau": item.tau,
                "eta1": item.eta1,
                "eta2": item.eta2,
                "x": item.x,
                "pair_rate": item.pair_rate,
                "one_pair_rate": item.one_pair_rate,
                "mean_pairs": item.mean_pairs,
                "residual": item.residual,
                "iterations": item.iterations,
            }
        )
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_table1_json(path) -> tuple[float, list[TableOneRow | FailedRow]]:
    with open(path) as fh:
        payload = json.load(fh)
    try:
        f = float(payload["repetition_rate_hz"])
        raw_rows = payload["rows"]
    except (KeyError, TypeError) as exc:
        raise SweepFormatError(f"not a valid inversion table: {exc}") from None
    rows: list[TableOneRow | FailedRow] = []
    for raw in raw_rows:
        try:
            record = CountRecord(
                power_mw=raw["power_mw"], sc1=raw["sc1"], sc2=raw["sc2"],
                cc=raw["cc"], cc12=raw.get("cc12"), cc13=raw.get("cc13"),
                cc123=raw.get("cc123"),
            )
            if raw["status"] != "ok":
                rows.append(FailedRow(record=record, error=raw["status"]))
                continue
            rows.append(
                TableOneRow(
                    power_mw=record.power_mw, sc1=record.sc1, sc2=record.sc2,
                    cc=record.cc, tau=raw["tau"], eta1=raw["eta1"],
                    eta2=raw["eta2"], pair_rate=raw["pair_rate"],
                    one_pair_rate=raw["one_pair_rate"],
                    mean_pairs=raw["mean_pairs"], x=raw["x"],
                    residual=raw["residual"], iterations=raw["iterations"],
                    cc12=record.cc12, cc13=record.cc13, cc123=record.cc123,
                )
            )
        except (KeyError, ValueError) as exc:
            raise SweepFormatError(
                f"invalid inversion table row: {exc}"
            ) from None
    return f, rows


def write_table2_csv(
    reports: list[CorrelationReport | FailedRow], path
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE2_COLUMNS)
        for item in reports:
            if isinstance(item, FailedRow):
                writer.writerow(
                    [_fmt(item.record.power_mw)]
                    + [MISSING] * 7
                    + [f"failed: {item.error}"]
                )
                continue
            writer.writerow(
                [
                    _fmt(item.power_mw),
                    _fmt(item.g2_measured),
                    _fmt(item.g2_predicted),
                    _fmt(item.g2_heralded),
                    _fmt(item.g2_unheralded),
                    _fmt(item.g2_signal_idler),
                    _fmt(item.g3_signal_idler),
                    _fmt(item.g3_unheralded),
                    "ok",
                ]
            )


def write_curves_csv(curves, path) -> None:
    """Emit SaturationCurve objects in long format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for cv in curves:
            for mean, detected in cv.points:
                writer.writerow(
                    [cv.source_kind, _fmt(cv.eta), cv.variant,
                     _fmt(mean), _fmt(detected)]
                )


def bundled_path(name: str):
    """Path-like handle to a bundled reference CSV."""
    return resources.files("spdc_stats.data").joinpath(name)


def load_bundled_sweep(name: str = "table1_measured.csv") -> list[CountRecord]:
    with resources.as_file(bundled_path(name)) as path:
        return read_sweep(path)


def load_bundled_csv(name: str) -> list[dict[str, str]]:
    """Bundled CSV as a list of raw string dicts (values as printed)."""
    with bundled_path(name).open(newline="") as fh:
        return list(csv.DictReader(fh))
