# catalog.py
"""
Catalog of generalized flag manifolds G/K with second Betti number 1.

A space enters every formula only through its summand count r, the dimensions d_i of the
isotropy summands and the non-zero structure constants c_ij^k. The embedded data lives in
`catalogs/flag_spaces.yaml`; the environment variable HRF_CATALOG_PATH points to a
replacement file (the YAML record list, or the JSON document written by `dump_catalog`).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml

logger = logging.getLogger(__name__)

CATALOG_VERSION = 1
DEFAULT_CATALOG_PATH = Path(__file__).resolve().parents[1] / "catalogs" / "flag_spaces.yaml"

Triple = Tuple[int, int, int]


class UnknownSpaceError(KeyError):
    """Raised when a space name is not in the catalog."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown space"


class InvalidSpaceError(ValueError):
    """Raised when dimensions or structure constants do not describe a valid space."""


def allowed_triples(r: int) -> Tuple[Triple, ...]:
    """Index triples (i, j, i+j), i <= j, that may carry a non-zero constant for r summands."""
    return tuple(
        (i, j, i + j) for i in range(1, r + 1) for j in range(i, r + 1) if i + j <= r
    )


# -----------------------------
# Data structures
# -----------------------------
@dataclass(frozen=True)
class FlagSpace:
    name: str
    r: int
    dims: Tuple[int, ...]
    constants: Tuple[Tuple[Triple, Fraction], ...]   # sorted triples, non-zero values only
    aliases: Tuple[str, ...] = ()
    expected_n: Optional[int] = None                  # number of fixed points at infinity
    exceptional_index: Optional[int] = None           # j with a 3-dim unstable manifold
    multiplier: Optional[Fraction] = None             # constant of the clearing factor
    reference_points: Tuple[Tuple[float, ...], ...] = ()
    reference_lambdas: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not 2 <= self.r <= 6:
            raise InvalidSpaceError(f"{self.name}: r must lie in 2..6, got {self.r}")
        if len(self.dims) != self.r:
            raise InvalidSpaceError(f"{self.name}: expected {self.r} dims, got {len(self.dims)}")
        if any(d < 1 for d in self.dims):
            raise InvalidSpaceError(f"{self.name}: dimensions must be positive, got {self.dims}")
        allowed = set(allowed_triples(self.r))
        for triple, value in self.constants:
            if triple not in allowed:
                raise InvalidSpaceError(f"{self.name}: c{triple} is not a structure constant for r={self.r}")
            if value < 0:
                raise InvalidSpaceError(f"{self.name}: c{triple} = {value} is negative")
        if any(len(p) != self.r - 1 for p in self.reference_points):
            raise InvalidSpaceError(f"{self.name}: reference points need {self.r - 1} chart coordinates")
        if self.exceptional_index is not None and not (
            self.expected_n and 1 < self.exceptional_index <= self.expected_n
        ):
            raise InvalidSpaceError(f"{self.name}: exceptional_index out of range")

    @property
    def constant_table(self) -> Dict[Triple, Fraction]:
        return dict(self.constants)

    def constant(self, i: int, j: int, k: int) -> Fraction:
        """c_ij^k with 1-based indices; symmetric in all three indices, 0 when not stored."""
        key = tuple(sorted((i, j, k)))
        for triple, value in self.constants:
            if triple == key:
                return value
        return Fraction(0)

    @property
    def n(self) -> int:
        """Real dimension of the manifold."""
        return sum(self.dims)

    @property
    def kahler_einstein(self) -> Tuple[int, ...]:
        return tuple(range(1, self.r + 1))

    def matches(self, name: str) -> bool:
        return name == self.name or name in self.aliases

    def to_record(self) -> Dict[str, Any]:
        rec: Dict[str, Any] = {
            "name": self.name,
            "r": self.r,
            "dims": list(self.dims),
            "N": self.expected_n,
            "constants": [
                {"i": i, "j": j, "k": k, "num": v.numerator, "den": v.denominator}
                for (i, j, k), v in self.constants
            ],
        }
        if self.aliases:
            rec["aliases"] = list(self.aliases)
        if self.exceptional_index is not None:
            rec["exceptional_index"] = self.exceptional_index
        if self.multiplier is not None:
            rec["multiplier"] = str(self.multiplier)
        if self.reference_points:
            rec["reference_points"] = [list(p) for p in self.reference_points]
        if self.reference_lambdas:
            rec["reference_lambdas"] = list(self.reference_lambdas)
        return rec


def _normalize_constants(table: Dict[Triple, Fraction]) -> Tuple[Tuple[Triple, Fraction], ...]:
    out: Dict[Triple, Fraction] = {}
    for triple, value in table.items():
        key = tuple(sorted(int(t) for t in triple))
        if len(key) != 3:
            raise InvalidSpaceError(f"structure constant index {triple} is not a triple")
        value = Fraction(value)
        if value != 0:
            out[key] = value
    return tuple(sorted(out.items()))


# -----------------------------
# Parametric families
# -----------------------------
def _check_dims(*dims: int) -> None:
    for d in dims:
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise InvalidSpaceError(f"dimensions must be positive integers, got {dims}")


def make_r2_space(d1: int, d2: int, name: Optional[str] = None) -> FlagSpace:
    """Two summands: c_11^2 = d1 d2 / (d1 + 4 d2)."""
    _check_dims(d1, d2)
    c112 = Fraction(d1 * d2, d1 + 4 * d2)
    return FlagSpace(
        name=name or f"r2({d1},{d2})",
        r=2,
        dims=(d1, d2),
        constants=_normalize_constants({(1, 1, 2): c112}),
        expected_n=2,
    )


def make_r3_space(d1: int, d2: int, d3: int, name: Optional[str] = None) -> FlagSpace:
    """Three summands: c_11^2 and c_12^3 from the dimensions."""
    _check_dims(d1, d2, d3)
    den = d1 + 4 * d2 + 9 * d3
    num = d1 * d2 + 2 * d1 * d3 - d2 * d3
    if num < 0:
        raise InvalidSpaceError(
            f"dims ({d1},{d2},{d3}) give a negative c_11^2 = {Fraction(num, den)}"
        )
    return FlagSpace(
        name=name or f"r3({d1},{d2},{d3})",
        r=3,
        dims=(d1, d2, d3),
        constants=_normalize_constants(
            {(1, 1, 2): Fraction(num, den), (1, 2, 3): Fraction(d3 * (d1 + d2), den)}
        ),
        expected_n=3,
    )


def space_from_dims(dims: Sequence[int]) -> FlagSpace:
    dims = [int(d) for d in dims]
    if len(dims) == 2:
        return make_r2_space(*dims)
    if len(dims) == 3:
        return make_r3_space(*dims)
    raise InvalidSpaceError(
        f"parametric spaces exist for r=2 and r=3 only; got {len(dims)} dimensions"
    )


# -----------------------------
# Catalog loading
# -----------------------------
def _parse_constants(raw: Any) -> Dict[Triple, Fraction]:
    table: Dict[Triple, Fraction] = {}
    if isinstance(raw, dict):
        for key, value in raw.items():
            triple = tuple(int(t) for t in str(key).split(","))
            table[triple] = Fraction(str(value))
    else:
        for item in raw or []:
            triple = (int(item["i"]), int(item["j"]), int(item["k"]))
            table[triple] = Fraction(int(item["num"]), int(item.get("den", 1)))
    return table


def space_from_record(rec: Dict[str, Any]) -> FlagSpace:
    try:
        multiplier = rec.get("multiplier")
        return FlagSpace(
            name=str(rec["name"]).strip(),
            r=int(rec["r"]),
            dims=tuple(int(d) for d in rec["dims"]),
            constants=_normalize_constants(_parse_constants(rec.get("constants"))),
            aliases=tuple(str(a).strip() for a in (rec.get("aliases") or [])),
            expected_n=rec.get("expected_n", rec.get("N")),
            exceptional_index=rec.get("exceptional_index"),
            multiplier=Fraction(str(multiplier)) if multiplier is not None else None,
            reference_points=tuple(
                tuple(float(v) for v in p) for p in (rec.get("reference_points") or [])
            ),
            reference_lambdas=tuple(float(v) for v in (rec.get("reference_lambdas") or [])),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidSpaceError):
            raise
        raise InvalidSpaceError(f"malformed catalog record {rec.get('name', rec)!r}: {exc}") from exc


def load_catalog(path: Optional[Union[str, Path]] = None) -> List[FlagSpace]:
    """Read a catalog file; JSON by suffix, YAML otherwise."""
    p = Path(path) if path else DEFAULT_CATALOG_PATH
    text = p.read_text(encoding="utf-8")
    data = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    if isinstance(data, dict):
        version = data.get("catalog_version", CATALOG_VERSION)
        if int(version) != CATALOG_VERSION:
            raise InvalidSpaceError(f"{p}: unsupported catalog_version {version}")
        data = data.get("spaces", [])
    spaces = [space_from_record(rec) for rec in data or []]
    seen: Dict[str, str] = {}
    for space in spaces:
        for label in (space.name, *space.aliases):
            if label in seen:
                raise InvalidSpaceError(f"{p}: duplicate catalog name {label!r}")
            seen[label] = space.name
    logger.info("Loaded %d flag spaces from %s", len(spaces), p)
    return spaces


@lru_cache()
def _cached_catalog(path: str) -> Tuple[FlagSpace, ...]:
    return tuple(load_catalog(path))


def catalog_path() -> Path:
    override = os.getenv("HRF_CATALOG_PATH")
    return Path(override) if override else DEFAULT_CATALOG_PATH


def catalog_spaces() -> List[FlagSpace]:
    """All spaces of the active catalog, in file order."""
    return list(_cached_catalog(str(catalog_path())))


def get_space(name: str) -> FlagSpace:
    spaces = catalog_spaces()
    for space in spaces:
        if space.matches(name):
            return space
    available = ", ".join(s.name for s in spaces)
    raise UnknownSpaceError(f"unknown flag space {name!r}; available: {available}")


def dump_catalog(spaces: Optional[Sequence[FlagSpace]] = None) -> Dict[str, Any]:
    """Versioned JSON-ready document; `load_catalog` reads it back unchanged."""
    spaces = catalog_spaces() if spaces is None else spaces
    return {"catalog_version": CATALOG_VERSION, "spaces": [s.to_record() for s in spaces]}


# -----------------------------
# Expected stability data
# -----------------------------
def expected_classification(space: FlagSpace) -> Optional[List[Tuple[int, int]]]:
    """
    (d_stb, d_unstb) per fixed point, j = 1..N.

    The Kahler-Einstein point has a 1-dimensional unstable manifold, the exceptional point
    (if any) a 3-dimensional one, every other point a 2-dimensional one.
    """
    if space.expected_n is None:
        return None
    r = space.r
    out = []
    for j in range(1, space.expected_n + 1):
        if j == 1:
            out.append((r - 1, 1))
        elif j == space.exceptional_index:
            out.append((r - 3, 3))
        else:
            out.append((r - 2, 2))
    return out
