"""Study-record CSV ingestion, synthetic databases, and report serialization.

Record CSV columns::

    study_id,condition,pub_year,pub_month,n_bits,kappa,p_obs,pi,z

Exactly one of ``p_obs``, ``pi`` and ``z`` is filled per row. ``pi`` is
mapped back to a hit proportion through the inverse effect-size map; ``z`` is
first converted to ``pi`` assuming a hit proportion of one half in the
standard error. See FORMATS.md for the full contract.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from . import core, funnel, hurst, markov
from .core import Condition, StudyRecord

__all__ = [
    "RecordError",
    "SynthSpec",
    "CensorRule",
    "RECORD_COLUMNS",
    "SCHEMA_VERSION",
    "read_records",
    "write_records",
    "synthesize",
    "records_to_series",
    "write_report",
    "to_jsonable",
    "fmt_number",
]

RECORD_COLUMNS = ["study_id", "condition", "pub_year", "pub_month", "n_bits", "kappa", "p_obs", "pi", "z"]
OUTCOME_COLUMNS = ("p_obs", "pi", "z")
SCHEMA_VERSION = "1.0"


class RecordError(ValueError):
    """Malformed input row; carries the 1-based line number and column."""

    def __init__(self, line: int, column: Optional[str], message: str):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column!r}" if column else "")
        super().__init__(f"{where}: {message}")


def _parse_number(raw: str, kind, line: int, column: str):
    try:
        value = kind(raw.strip())
    except ValueError:
        raise RecordError(line, column, f"cannot parse {raw!r} as {kind.__name__}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise RecordError(line, column, f"non-finite value {raw!r}")
    return value


def _open_text(source):
    if source == "-":
        import sys

        return sys.stdin, False
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def read_records(source: Union[str, Path, IO[str]]) -> list[StudyRecord]:
    """Parse a study-record CSV (path, ``"-"`` for stdin, or open text stream)."""
    stream, owned = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None:
            raise RecordError(1, None, "missing header row")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        required = {"study_id", "n_bits"}
        missing = required - set(header)
        if missing:
            raise RecordError(1, None, f"missing columns {sorted(missing)}")
        if not any(c in header for c in OUTCOME_COLUMNS):
            raise RecordError(1, None, "need one of the columns p_obs, pi, z")
        records = []
        seen: dict[str, int] = {}
        for row in reader:
            line = reader.line_num
            records.append(_parse_row(row, line))
            sid = records[-1].study_id
            if sid in seen:
                raise RecordError(line, "study_id", f"duplicate study_id {sid!r} (first on line {seen[sid]})")
            seen[sid] = line
        return records
    finally:
        if owned:
            stream.close()


def _parse_row(row: dict, line: int) -> StudyRecord:
    def get(col: str) -> str:
        value = row.get(col)
        return "" if value is None else value.strip()

    sid = get("study_id")
    if not sid:
        raise RecordError(line, "study_id", "empty study_id")
    n_bits = _parse_number(get("n_bits"), int, line, "n_bits")
    if n_bits < 1:
        raise RecordError(line, "n_bits", "n_bits must be >= 1")
    kappa = _parse_number(get("kappa"), int, line, "kappa") if get("kappa") else 2
    if kappa < 2:
        raise RecordError(line, "kappa", "kappa must be >= 2")
    filled = [c for c in OUTCOME_COLUMNS if get(c)]
    if len(filled) != 1:
        what = "no outcome column" if not filled else f"conflicting columns {filled}"
        raise RecordError(line, filled[-1] if filled else None, f"{what}; fill exactly one of p_obs, pi, z")
    col = filled[0]
    value = _parse_number(get(col), float, line, col)
    try:
        if col == "p_obs":
            p_obs = value
        elif col == "pi":
            p_obs = core.p_obs_from_effect_size(value, kappa)
        else:
            p_obs = core.p_obs_from_effect_size(core.pi_from_z(value, n_bits), kappa)
        condition = Condition.parse(get("condition") or "Treatment")
        year = _parse_number(get("pub_year"), int, line, "pub_year") if get("pub_year") else 0
        month = _parse_number(get("pub_month"), int, line, "pub_month") if get("pub_month") else None
        return StudyRecord(sid, n_bits, p_obs, kappa, condition, year, month)
    except RecordError:
        raise
    except ValueError as exc:
        raise RecordError(line, col, str(exc)) from None


def write_records(records: Iterable[StudyRecord], sink: Union[str, Path, IO[str], None] = None) -> str:
    """Serialize records as CSV at full precision, outcome in the ``p_obs`` column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for r in records:
        writer.writerow([
            r.study_id,
            r.condition.value,
            r.pub_year,
            "" if r.pub_month is None else r.pub_month,
            r.n_bits,
            r.kappa,
            repr(float(r.p_obs)),
            "",
            "",
        ])
    return _emit(buf.getvalue(), sink)


def _emit(text: str, sink) -> str:
    if sink is None:
        return text
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)
    return text


@dataclass(frozen=True)
class CensorRule:
    """Drop studies with effect size in ``[low, high)`` and size below ``max_n``."""

    low: float
    high: float
    max_n: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.low < self.high <= 1.0:
            raise ValueError(f"censoring band [{self.low}, {self.high}) must lie within [0, 1]")

    @classmethod
    def below(cls, wp: float, max_n: int) -> "CensorRule":
        return cls(0.0, wp, max_n)

    @classmethod
    def above(cls, wp: float, max_n: int) -> "CensorRule":
        # open at wp so a study exactly on the centre survives
        return cls(math.nextafter(wp, 1.0), 1.0, max_n)

    def drops(self, pi: float, n_bits: int) -> bool:
        upper_ok = pi < self.high or (self.high == 1.0 and pi == 1.0)
        return n_bits < self.max_n and self.low <= pi and upper_ok


@dataclass(frozen=True)
class SynthSpec:
    n_studies: int = 380
    size_range: tuple[int, int] = (100, 10**6)
    markov_params: markov.MarkovParams = markov.MarkovParams(0.5, 0.5)
    censoring: Optional[CensorRule] = None
    seed: int = 0
    condition: Condition = Condition.TREATMENT
    year_range: tuple[int, int] = (1969, 2004)
    id_prefix: str = "S"

    def __post_init__(self) -> None:
        lo, hi = self.size_range
        if self.n_studies < 1:
            raise ValueError("n_studies must be >= 1")
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid size range {self.size_range}")


def synthesize(spec: SynthSpec) -> list[StudyRecord]:
    """Simulate a study database.

    Sizes are log-uniform over ``spec.size_range``; publication year and
    month are uniform over ``spec.year_range``. Study ``i`` draws its bits from
    task stream ``1 + i`` of ``spec.seed``. Censoring is applied after simulation,
    so the surviving studies are identical to the uncensored run.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.size_range
    sizes = np.rint(10 ** rng.uniform(math.log10(lo), math.log10(hi), spec.n_studies)).astype(np.int64)
    years = rng.integers(spec.year_range[0], spec.year_range[1] + 1, spec.n_studies)
    months = rng.integers(1, 13, spec.n_studies)
    width = len(str(spec.n_studies))
    records = []
    for i, n in enumerate(sizes):
        ones = markov.count_ones(spec.markov_params, int(n), markov.derive_rng(spec.seed, 1 + i))
        rec = StudyRecord(
            f"{spec.id_prefix}{i + 1:0{width}d}",
            int(n),
            ones / int(n),
            2,
            spec.condition,
            int(years[i]),
            int(months[i]),
        )
        if spec.censoring is not None and spec.censoring.drops(rec.pi, rec.n_bits):
            continue
        records.append(rec)
    if not records:
        raise ValueError("censoring removed every study")
    return records


def records_to_series(records: Iterable[StudyRecord], value: str = "pi") -> hurst.SeriesSample:
    """Order records by publication date and extract a time series of ``pi`` or ``z``."""
    ordered = sorted(records, key=lambda r: r.sort_key)
    values = np.array([getattr(r, value) for r in ordered], dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{value} undefined for some records")
    return hurst.SeriesSample(values, tuple(r.study_id for r in ordered))


# serialization ---------------------------------------------------------------

def fmt_number(x, full_precision: bool = False) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return repr(x) if full_precision else f"{x:.6g}"


def _round(x: float, full_precision: bool):
    if not math.isfinite(x):
        return None
    return x if full_precision else float(f"{x:.6g}")


def to_jsonable(obj, full_precision: bool = False):
    """Convert report dataclasses, arrays and enums into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name), full_precision)
        for extra in _DERIVED.get(type(obj), ()):
            out[extra] = to_jsonable(getattr(obj, extra), full_precision)
        return out
    if isinstance(obj, Condition):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, full_precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, full_precision) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v, full_precision) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj), full_precision)
    return obj


_DERIVED = {
    StudyRecord: ("pi", "se", "z"),
    hurst.Baseline: ("mean", "sd", "se", "c_h", "c_h_se"),
    funnel.AsymmetryReport: ("n_total",),
    markov.FunnelSimulation: ("mean_proportions",),
}


def _table(report) -> tuple[list[str], list[list]]:
    """Header and rows for the table-shaped report types."""
    if isinstance(report, funnel.CoverageReport):
        raise TypeError("a CoverageReport has no table form without its records; use a FunnelTable")
    if isinstance(report, FunnelTable):
        return ["N", "pi", "condition", "inside_flag"], [
            [r.n_bits, r.pi, r.condition.value, bool(f)] for r, f in zip(report.records, report.inside)
        ]
    if isinstance(report, hurst.HurstReport):
        return ["window_n", "rs_mean"], [[p.window_n, p.rs_mean] for p in report.points]
    if isinstance(report, markov.FunnelSimulation):
        return ["N", "replication", "proportion"], [list(r) for r in report.rows()]
    if isinstance(report, EnvelopeTable):
        header = ["N"]
        for name in report.names:
            header += [f"{name}_lower", f"{name}_upper"]
        return header, report.rows()
    if isinstance(report, (list, tuple)) and report and isinstance(report[0], hurst.Baseline):
        return ["length", "mean_h", "se_h", "sd_h"], [[b.length, b.mean, b.se, b.sd] for b in report]
    raise TypeError(f"no CSV form for {type(report).__name__}")


@dataclass(frozen=True)
class FunnelTable:
    """Records paired with their inside-envelope flags."""

    records: Sequence[StudyRecord]
    inside: np.ndarray


@dataclass(frozen=True)
class EnvelopeTable:
    names: Sequence[str]
    specs: Sequence[funnel.EnvelopeSpec]
    points: int = 200

    def rows(self) -> list[list]:
        curves = [funnel.envelope_curve(s, self.points) for s in self.specs]
        out = []
        for j in range(self.points):
            row = [curves[0][j, 0]]
            for c in curves:
                row += [c[j, 1], c[j, 2]]
            out.append(row)
        return out


def write_report(report, fmt: str = "json", sink=None, full_precision: bool = False) -> str:
    """Serialize a report as JSON or CSV and optionally write it to ``sink``.

    Numbers carry six significant digits unless ``full_precision`` is set.
    JSON documents are objects with a leading ``schema_version`` and ``kind``.
    Record collections always go through :func:`write_records`.
    """
    if isinstance(report, (list, tuple)) and report and isinstance(report[0], StudyRecord):
        if fmt == "csv":
            return write_records(report, sink)
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "kind": _kind(report)}
        body = to_jsonable(report, full_precision)
        if isinstance(body, dict):
            doc.update(body)
        else:
            doc["items"] = body
        text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    elif fmt == "csv":
        header, rows = _table(report)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt_number(v, full_precision) for v in row])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return _emit(text, sink)


def _kind(report) -> str:
    if isinstance(report, (list, tuple)):
        return f"list[{type(report[0]).__name__}]" if report else "list"
    return type(report).__name__
