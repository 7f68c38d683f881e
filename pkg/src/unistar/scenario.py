"""Line-oriented scenario files describing a chart geometry.

Grammar (one statement per line, ``#`` starts a comment line)::

    dim D
    P i j = <poly>          # P^{ij}; P^{ji} = -P^{ij} is implied
    G k i j = <poly>        # Gamma^k_{ij}; Gamma^k_{ji} is implied
    option key = value      # name, order, deg-cap, dup-mode

Indices are 1-based.  Assigning the same entry twice is a duplicate: with
``dup-mode = last`` (default) the later value wins, with ``first`` the earlier
one; either way a warning is recorded.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .geometry import Geometry, GeometryError
from .numeric import PolyParseError, PolyRing, obj_array

DUP_MODES = ("last", "first")
_OPTION_KEYS = {"name", "order", "deg-cap", "dup-mode"}


class ScenarioError(ValueError):
    def __init__(self, message: str, source: str = "<scenario>", line: int | None = None,
                 column: int | None = None):
        where = source
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class DuplicateAssignmentWarning(UserWarning):
    pass


@dataclass
class Scenario:
    name: str
    dim: int
    poisson: dict = field(default_factory=dict)      # (i, j) -> (text, line), 1-based, as written
    christoffel: dict = field(default_factory=dict)  # (k, i, j) -> (text, line)
    options: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    source: str = "<scenario>"

    @property
    def order(self) -> int:
        return int(self.options.get("order", 4))

    @property
    def deg_cap(self) -> int:
        return int(self.options.get("deg-cap", 2))

    @property
    def dup_mode(self) -> str:
        return self.options.get("dup-mode", "last")


_LINE = re.compile(r"^\s*(\S+)")


def parse_scenario(text: str, source: str = "<scenario>", dup_mode: str | None = None) -> Scenario:
    """Parse scenario text; duplicate handling follows ``dup_mode`` if given,
    else the file's own ``dup-mode`` option, else ``last``."""
    entries: list = []  # (kind, key, text, line, column)
    options: dict = {}
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        head = _LINE.match(raw)
        word = head.group(1)
        col = head.start(1) + 1
        rest_start = head.end(1)
        if word == "dim":
            value = raw[rest_start:].strip()
            if not value.isdigit() or int(value) < 1:
                vcol = rest_start + len(raw[rest_start:]) - len(raw[rest_start:].lstrip()) + 1
                raise ScenarioError("dim expects a positive integer", source, lineno, vcol)
            if dim is not None:
                raise ScenarioError("dim given twice", source, lineno, col)
            dim = int(value)
        elif word == "option":
            body = raw[rest_start:]
            if "=" not in body:
                raise ScenarioError("option expects 'key = value'", source, lineno, col)
            key, value = (s.strip() for s in body.split("=", 1))
            if key not in _OPTION_KEYS:
                raise ScenarioError(f"unknown option {key!r}", source, lineno, rest_start + body.index(key) + 1)
            options[key] = value
        elif word in ("P", "G"):
            body = raw[rest_start:]
            if "=" not in body:
                raise ScenarioError(f"{word} entry expects indices '=' polynomial", source, lineno, col)
            lhs, rhs = body.split("=", 1)
            idx_text = lhs.split()
            nidx = 2 if word == "P" else 3
            idx_cols = [m.start() + rest_start + 1 for m in re.finditer(r"\S+", lhs)]
            if len(idx_text) != nidx or not all(t.isdigit() for t in idx_text):
                raise ScenarioError(f"{word} entry needs {nidx} integer indices", source, lineno,
                                    idx_cols[0] if idx_cols else rest_start + 1)
            rhs_col = rest_start + len(lhs) + 2
            entries.append((word, tuple(int(t) for t in idx_text), rhs, lineno, rhs_col, idx_cols))
        else:
            raise ScenarioError(f"unknown statement {word!r}", source, lineno, col)
    if dim is None:
        raise ScenarioError("missing 'dim' statement", source)
    mode = dup_mode or options.get("dup-mode", "last")
    if mode not in DUP_MODES:
        raise ScenarioError(f"dup-mode must be one of {DUP_MODES}, got {mode!r}", source)
    options["dup-mode"] = mode
    for key in ("order", "deg-cap"):
        if key in options and not options[key].isdigit():
            raise ScenarioError(f"option {key} expects a nonnegative integer", source)
    scn = Scenario(options.get("name", Path(source).stem), dim, options=options, source=source)
    for kind, idx, rhs, lineno, col, idx_cols in entries:
        bad = [c for i, c in zip(idx, idx_cols) if not 1 <= i <= dim]
        if bad:
            raise ScenarioError(f"index out of range 1..{dim} in {kind} {' '.join(map(str, idx))}",
                                source, lineno, bad[0])
        table = scn.poisson if kind == "P" else scn.christoffel
        if idx in table:
            prev_line = table[idx][1]
            msg = (f"{source}:{lineno}: {kind} {' '.join(map(str, idx))} already assigned on line "
                   f"{prev_line}; keeping the {'later' if mode == 'last' else 'earlier'} value")
            scn.warnings.append(msg)
            warnings.warn(msg, DuplicateAssignmentWarning, stacklevel=2)
            if mode == "first":
                continue
        table[idx] = (rhs, lineno, col)
    return scn


def build_geometry(scn: Scenario, *, validate: bool = True) -> Geometry:
    """Symmetrise the tables, parse polynomials and validate the geometry."""
    ring = PolyRing(scn.dim)
    d = scn.dim
    P = obj_array((d, d), ring.zero)
    G = obj_array((d, d, d), ring.zero)
    seen_p: dict = {}
    for (i, j), (text, line, col) in scn.poisson.items():
        value = _parse(ring, text, scn.source, line, col)
        if i == j and value != 0:
            raise ScenarioError(f"antisymmetry violated: P {i} {i} must vanish", scn.source, line)
        other = seen_p.get((j, i))
        if other is not None and other != -value:
            raise ScenarioError(f"antisymmetry violated: P {i} {j} and P {j} {i} are not opposite",
                                scn.source, line)
        seen_p[(i, j)] = value
        P[i - 1, j - 1] = value
        P[j - 1, i - 1] = -value
    seen_g: dict = {}
    for (k, i, j), (text, line, col) in scn.christoffel.items():
        value = _parse(ring, text, scn.source, line, col)
        other = seen_g.get((k, j, i))
        if other is not None and other != value:
            raise ScenarioError(f"symmetry violated: G {k} {i} {j} and G {k} {j} {i} differ (torsion)",
                                scn.source, line)
        seen_g[(k, i, j)] = value
        G[k - 1, i - 1, j - 1] = value
        G[k - 1, j - 1, i - 1] = value
    try:
        return Geometry(ring, P, G, name=scn.name, validate=validate)
    except GeometryError as exc:
        raise ScenarioError(f"validation failed: {exc}", scn.source) from exc


def _parse(ring: PolyRing, text: str, source: str, line: int, col: int):
    try:
        return ring.parse(text)
    except PolyParseError as exc:
        # the polynomial text starts at column ``col`` of its line
        raise ScenarioError(f"bad polynomial: {exc.args[0].split(' at column')[0]}", source, line,
                            col + exc.column - 1) from exc


def load_scenario(path, dup_mode: str | None = None) -> tuple[Scenario, Geometry]:
    path = Path(path)
    scn = parse_scenario(path.read_text(), str(path), dup_mode)
    return scn, build_geometry(scn)


def shipped(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    ref = resources.files("unistar") / "scenarios" / f"{name}.scn"
    return Path(str(ref))


def load_shipped(name: str, dup_mode: str | None = None) -> tuple[Scenario, Geometry]:
    return load_scenario(shipped(name), dup_mode)
