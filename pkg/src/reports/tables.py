# tables.py
"""
pandas frames behind the reports, and their text / CSV / JSON renderings.

Human-readable tables use 6 significant digits, CSV data 12.
"""

from __future__ import annotations

import json
from collections import Counter
from typing import Any, List, Sequence

import pandas as pd

from dynamics.poincare import FixedPointAtInfinity, Table1Row
from geometry.catalog import FlagSpace
from geometry.ricci import EinsteinMetric

TEXT = "text"
CSV = "csv"
JSON = "json"
FORMATS = (JSON, CSV, TEXT)

TEXT_FLOAT = "{:.6g}"
CSV_FLOAT = "%.12g"


def render(df: pd.DataFrame, fmt: str) -> str:
    if fmt == CSV:
        return df.to_csv(index=False, float_format=CSV_FLOAT)
    if fmt == TEXT:
        return df.to_string(index=False, float_format=TEXT_FLOAT.format) + "\n"
    if fmt == JSON:
        return dumps(json.loads(df.to_json(orient="records", double_precision=15)))
    raise ValueError(f"unknown format {fmt!r}; use one of {FORMATS}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------- Catalog ----------

def catalog_lines(spaces: Sequence[FlagSpace]) -> str:
    lines = []
    for s in spaces:
        n = "?" if s.expected_n is None else s.expected_n
        dims = ",".join(str(d) for d in s.dims)
        lines.append(f"{s.name}  r={s.r}  N={n}  dims=({dims})")
    return "\n".join(lines) + "\n"


def catalog_frame(spaces: Sequence[FlagSpace]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "name": [s.name for s in spaces],
            "r": [s.r for s in spaces],
            "dims": [" ".join(str(d) for d in s.dims) for s in spaces],
            "N": [s.expected_n for s in spaces],
        }
    )


# ---------- Einstein metrics and fixed points ----------

def einstein_frame(metrics: Sequence[EinsteinMetric]) -> pd.DataFrame:
    rows = []
    for j, m in enumerate(metrics, start=1):
        row = {"j": j}
        row.update({f"x{i + 1}": v for i, v in enumerate(m.x)})
        row["lambda"] = m.lam
        row["exact_lambda"] = "" if m.exact_lam is None else str(m.exact_lam)
        row["kahler_einstein"] = m.is_kahler_einstein
        rows.append(row)
    return pd.DataFrame(rows)


def fixed_points_frame(points: Sequence[FixedPointAtInfinity]) -> pd.DataFrame:
    rows = []
    for fp in points:
        row = {"j": fp.index}
        row.update({f"a{i + 1}": v for i, v in enumerate(fp.chart_coords)})
        row["lambda"] = fp.lam
        row["d_stb"] = fp.d_stb
        row["d_unstb"] = fp.d_unstb
        row["transverse"] = fp.transverse_eigenvalue
        for i, z in enumerate(fp.eigenvalues):
            row[f"eig{i + 1}_re"] = z.real
            row[f"eig{i + 1}_im"] = z.imag
        rows.append(row)
    return pd.DataFrame(rows)


# ---------- Classification table ----------

def _pair(found: Sequence[tuple], j: int) -> tuple:
    return found[j - 1] if len(found) >= j else (None, None)


def table1_frame(rows: Sequence[Table1Row]) -> pd.DataFrame:
    """
    One line per space: N, the pair for the Kahler-Einstein point, the common pair of the
    other points and any point that departs from it.
    """
    records: List[dict] = []
    for row in rows:
        d1_stb, d1_unstb = _pair(row.found, 1)
        others = list(row.found[1:])
        common = Counter(others).most_common(1)[0][0] if others else (None, None)
        exceptions = [
            f"j={j}: d_unstb={u} d_stb={s}" for j, (s, u) in enumerate(row.found, start=1)
            if j > 1 and (s, u) != common
        ]
        records.append(
            {
                "r": row.space.r,
                "space": row.space.name,
                "N": len(row.found),
                "d1_unstb": d1_unstb,
                "d1_stb": d1_stb,
                "dj_unstb": common[1],
                "dj_stb": common[0],
                "exceptions": ", ".join(exceptions),
                "match": "ok" if row.matches else "MISMATCH",
            }
        )
    counts = ["N", "d1_unstb", "d1_stb", "dj_unstb", "dj_stb"]
    if not records:
        return pd.DataFrame(columns=["r", "space", *counts, "exceptions", "match"])
    return pd.DataFrame.from_records(records).astype({c: "Int64" for c in counts})


def render_table1(rows: Sequence[Table1Row]) -> str:
    """The table alone; per-point mismatch lines come from `Table1Row.diff`."""
    return table1_frame(rows).to_string(index=False, na_rep="-") + "\n"
