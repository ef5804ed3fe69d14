"""Profile containers and the long-CSV interchange format.

A profile is one functional observation: measurements ``y`` at strictly
increasing locations ``x``.  The canonical file layout is long CSV with the
header ``profile_id,x,y``; lines starting with ``#`` are comments.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError

HEADER = ("profile_id", "x", "y")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Profile:
    id: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = _frozen(self.x), _frozen(self.y)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValidationError(f"profile {self.id!r}: x and y must be aligned 1-d arrays")
        if len(x) == 0:
            raise ValidationError(f"profile {self.id!r} has no points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError(f"profile {self.id!r} has non-finite values")
        if len(x) > 1 and not np.all(np.diff(x) > 0):
            raise ValidationError(f"profile {self.id!r}: locations must be strictly increasing")
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.x)

    def __eq__(self, other):
        if not isinstance(other, Profile):
            return NotImplemented
        return (self.id == other.id and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))

    __hash__ = None

    def shifted(self, c: float) -> "Profile":
        return Profile(self.id, self.x, self.y + c)

    def transformed(self, scale: float, shift: float = 0.0) -> "Profile":
        return Profile(self.id, self.x, scale * self.y + shift)


@dataclass(frozen=True, eq=False)
class CenteredProfile:
    """A profile with its center ``delta`` subtracted from every value."""

    source_id: str
    delta: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))

    def __eq__(self, other):
        if not isinstance(other, CenteredProfile):
            return NotImplemented
        return (self.source_id == other.source_id and self.delta == other.delta
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProfileSet:
    profiles: tuple
    domain: tuple = None

    def __post_init__(self):
        profiles = tuple(self.profiles)
        ids = [p.id for p in profiles]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate profile ids")
        domain = self.domain
        if domain is None:
            if profiles:
                domain = (min(float(p.x[0]) for p in profiles),
                          max(float(p.x[-1]) for p in profiles))
            else:
                domain = (0.0, 0.0)
        a, b = float(domain[0]), float(domain[1])
        if not a <= b:
            raise ValidationError(f"bad domain ({a}, {b})")
        for p in profiles:
            if p.x[0] < a or p.x[-1] > b:
                raise ValidationError(f"profile {p.id!r} has points outside [{a}, {b}]")
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "domain", (a, b))

    def __len__(self):
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    def __getitem__(self, i):
        return self.profiles[i]

    def __eq__(self, other):
        if not isinstance(other, ProfileSet):
            return NotImplemented
        return self.domain == other.domain and self.profiles == other.profiles

    __hash__ = None

    @property
    def ids(self) -> list:
        return [p.id for p in self.profiles]

    @property
    def n_points(self) -> int:
        return sum(len(p) for p in self.profiles)

    def by_id(self, pid: str) -> Profile:
        for p in self.profiles:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def subset(self, indices: Iterable[int]) -> "ProfileSet":
        return ProfileSet(tuple(self.profiles[i] for i in indices), self.domain)

    def map(self, fn) -> "ProfileSet":
        return ProfileSet(tuple(fn(p) for p in self.profiles), self.domain)


def natural_key(s: str):
    """Sort key that orders ``A2`` before ``A10``."""
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def _float(text, row, name):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name} value {text!r} is not a number", row) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} value {text!r} is not finite", row)
    return v


def _lines(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_profiles(source, domain=None) -> ProfileSet:
    """Read long CSV (``profile_id,x,y``) into a :class:`ProfileSet`.

    Rows may arrive in any order.  Profiles are ordered by id (natural
    order), points by location, so the result does not depend on row order.
    """
    groups: dict = {}
    header_seen = False
    for lineno, line in enumerate(_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader([stripped]))
        fields = [f.strip() for f in fields]
        if not header_seen:
            if tuple(fields) != HEADER:
                raise ParseError(f"expected header {','.join(HEADER)}, got {stripped!r}", lineno)
            header_seen = True
            continue
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        pid = fields[0]
        if not pid:
            raise ParseError("empty profile_id", lineno)
        x = _float(fields[1], lineno, "x")
        y = _float(fields[2], lineno, "y")
        pts = groups.setdefault(pid, {})
        if x in pts:
            raise ValidationError(f"row {lineno}: duplicate location x={fields[1]} "
                                  f"in profile {pid!r}")
        pts[x] = y
    if not header_seen:
        raise ParseError("empty input: no header")
    if not groups:
        raise ParseError("no data rows")
    profiles = []
    for pid in sorted(groups, key=natural_key):
        xs = np.array(sorted(groups[pid]))
        ys = np.array([groups[pid][v] for v in xs])
        profiles.append(Profile(pid, xs, ys))
    return ProfileSet(tuple(profiles), domain)


def emit_profiles(pset: ProfileSet, comments: Sequence[str] = ()) -> str:
    """Render long CSV.  Floats use the shortest exact round-trip repr."""
    out = io.StringIO()
    for c in comments:
        out.write(f"# {c}\n")
    out.write(",".join(HEADER) + "\n")
    for p in pset:
        for x, y in zip(p.x.tolist(), p.y.tolist()):
            out.write(f"{p.id},{x!r},{y!r}\n")
    return out.getvalue()


def read_comments(source) -> list:
    """Return ``#``-comment lines (without the marker) from CSV text."""
    return [ln.strip()[1:].strip() for ln in _lines(source) if ln.strip().startswith("#")]


def parse_wide(source, domain=None) -> ProfileSet:
    """Read a wide table: first column ``x``, one column per profile id.

    Empty cells are skipped, so profiles may have different locations.
    """
    rows = [r for r in csv.reader(ln for ln in _lines(source)
                                  if ln.strip() and not ln.strip().startswith("#"))]
    if not rows:
        raise ParseError("empty input: no header")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ParseError("wide header needs an x column and at least one profile", 1)
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", r)
        x = _float(row[0].strip(), r, "x")
        for pid, cell in zip(header[1:], row[1:]):
            cell = cell.strip()
            if cell:
                _float(cell, r, "y")
                buf.write(f"{pid},{x!r},{cell}\n")
    return parse_profiles(buf.getvalue(), domain)


def make_grid(a: float, b: float, step: float) -> np.ndarray:
    """Locations ``a, a+step, ...`` up to and including ``b`` (1e-12 slack).

    Values are rounded to 12 decimals so that e.g. 0.002-spaced grids print
    cleanly.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not a < b:
        raise ValueError("need a < b")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    k = np.arange(count + 1)
    grid = np.round(a + k * step, 12)
    grid = grid[grid <= b + 1e-12]
    return np.minimum(grid, b)
