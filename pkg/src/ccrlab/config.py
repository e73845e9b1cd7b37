"""Scenario files (TOML) and their strict parsing.

Rationals are written as strings "p/q" (plain integers are accepted too).
Grid extents, i.e. grid.yLo, grid.yHi and grid.ladder, may also be decimals.

    seed = 7
    k = 1
    checks = ["cone", "pspace", "rep", "cocycles", "fock", "index", "classify"]

    [cone]
    generators = [["1", "0"], ["0", "1"]]

    [functional]
    e = ["1", "1"]          # or "auto"

    [lattice]
    basis = [["1", "-1"]]

    [pspace]                # optional, default is the cone image itself
    translates = [["0", "0"]]

    [grid]                  # optional, chosen automatically when absent
    yLo = ["-3/4"]
    yHi = ["5/4"]
    h = "1/4"
    M = 8
    ladder = ["2", "4", "6", "8"]

    [points]                # optional interior points for index checks
    a = ["1/4", "1/4"]
    b = ["3/8", "5/8"]
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import tomli

from . import _exact as ex
from .classify import GridSpec, Scenario
from .cone_lattice import Cone, Functional, Lattice, dual_cone, interior_unit
from .errors import CCRLabError, ParseError

CHECKS = ("cone", "pspace", "rep", "cocycles", "fock", "index", "classify")

_TOP = {"seed", "k", "checks", "cone", "functional", "lattice", "pspace", "grid", "points", "name"}
_SECTIONS = {
    "cone": {"generators"},
    "functional": {"e"},
    "lattice": {"basis"},
    "pspace": {"translates"},
    "grid": {"yLo", "yHi", "h", "M", "ladder"},
    "points": {"a", "b"},
}
_REQUIRED = ("cone", "functional", "lattice")


@dataclass
class ScenarioConfig:
    name: str
    generators: list
    e: object  # tuple of Fractions or "auto"
    basis: list
    translates: list | None = None
    grid: GridSpec | None = None
    point_a: tuple | None = None
    point_b: tuple | None = None
    k: int = 1
    seed: int = 0
    checks: tuple = CHECKS
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.generators[0])

    def canonical(self) -> dict:
        """Normalized content used for hashing; independent of formatting."""
        fv = lambda v: [ex.fmt(c) for c in v]  # noqa: E731
        g = self.grid
        return {
            "generators": [fv(v) for v in self.generators],
            "e": self.e if isinstance(self.e, str) else fv(self.e),
            "basis": [fv(v) for v in self.basis],
            "translates": None if self.translates is None else [fv(v) for v in self.translates],
            "grid": None
            if g is None
            else {"yLo": fv(g.yLo), "yHi": fv(g.yHi), "h": ex.fmt(g.h), "M": g.M, "ladder": fv(g.ladder)},
            "pointA": None if self.point_a is None else fv(self.point_a),
            "pointB": None if self.point_b is None else fv(self.point_b),
            "k": self.k,
            "seed": self.seed,
            "checks": list(self.checks),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def scenario(self, window_scale=None) -> Scenario:
        cone = Cone(self.generators)
        if isinstance(self.e, str):
            e = interior_unit(dual_cone(cone))
        else:
            e = Functional(self.e)
        lattice = Lattice(self.basis, dim=self.dim)
        with warnings.catch_warnings():
            # rank != d - 1 is allowed in scenario files (e.g. the no-lattice orthant)
            warnings.simplefilter("ignore")
            S = Scenario(cone, e, lattice, self.translates, k=self.k, grid=self.grid, seed=self.seed,
                         point_a=self.point_a, point_b=self.point_b)
        if window_scale is not None and Fraction(window_scale) != 1:
            S = rescale(S, window_scale)
        return S


def rescale(S: Scenario, factor) -> Scenario:
    """Same scenario with every ladder extent multiplied by ``factor`` (snapped to h)."""
    f = ex.as_fraction(factor)
    if f <= 0:
        raise ParseError("--window-scale must be positive")
    g = S.grid
    ladder = tuple(max(g.h, (L * f // g.h) * g.h) for L in g.ladder)
    grid = GridSpec(g.yLo, tuple(lo + ladder[0] for lo in g.yLo), g.h, g.M, ladder)
    return Scenario(S.cone, S.e, S.lattice, S.translates,
                    k=S.k, grid=grid, seed=S.seed, point_a=S._pa, point_b=S._pb, check=False)


# parsing --------------------------------------------------------------------------


def _rational(v, where, decimal=False) -> Fraction:
    if isinstance(v, bool):
        raise ParseError(f"{where}: expected a rational, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not decimal:
            raise ParseError(f"{where}: write rationals as strings 'p/q', got float {v!r}")
        return Fraction(str(v))
    if isinstance(v, str):
        s = v.strip()
        if not decimal and any(c in s for c in ".eE"):
            raise ParseError(f"{where}: decimals are only allowed for grid extents, got {v!r}")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: not a rational: {v!r}") from exc
    raise ParseError(f"{where}: expected a rational, got {type(v).__name__}")


def _vector(v, where, decimal=False) -> tuple:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list")
    return tuple(_rational(c, f"{where}[{i}]", decimal) for i, c in enumerate(v))


def _vectors(v, where) -> list:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list of vectors")
    return [_vector(r, f"{where}[{i}]") for i, r in enumerate(v)]


def _int(v, where, lo=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}: expected an integer")
    if lo is not None and v < lo:
        raise ParseError(f"{where}: must be >= {lo}")
    return v


def _reject_unknown(doc: dict):
    extra = set(doc) - _TOP
    if extra:
        raise ParseError(f"unknown top-level keys: {sorted(extra)}")
    for sec, keys in _SECTIONS.items():
        if sec in doc:
            if not isinstance(doc[sec], dict):
                raise ParseError(f"[{sec}] must be a table")
            extra = set(doc[sec]) - keys
            if extra:
                raise ParseError(f"unknown keys in [{sec}]: {sorted(extra)}")
    for sec in _REQUIRED:
        if sec not in doc:
            raise ParseError(f"missing section [{sec}]")


def parse_config(doc: dict, name="scenario") -> ScenarioConfig:
    _reject_unknown(doc)
    gens = _vectors(doc["cone"].get("generators"), "cone.generators")
    if not gens:
        raise ParseError("cone.generators must be nonempty")
    d = len(gens[0])
    if d == 0 or any(len(g) != d for g in gens):
        raise ParseError("cone.generators must all have the same positive length")

    e = doc["functional"].get("e", "auto")
    if isinstance(e, str):
        if e != "auto":
            raise ParseError("functional.e must be a vector or 'auto'")
    else:
        e = _vector(e, "functional.e")
        if len(e) != d:
            raise ParseError("functional.e has the wrong length")

    basis = _vectors(doc["lattice"].get("basis", []), "lattice.basis")
    if any(len(b) != d for b in basis):
        raise ParseError("lattice.basis vectors have the wrong length")

    translates = None
    if "pspace" in doc:
        translates = _vectors(doc["pspace"].get("translates"), "pspace.translates")
        if not translates or any(len(t) != d for t in translates):
            raise ParseError("pspace.translates must be nonempty d-vectors")

    grid = None
    if "grid" in doc:
        g = doc["grid"]
        missing = _SECTIONS["grid"] - set(g)
        if missing:
            raise ParseError(f"[grid] is missing {sorted(missing)}")
        yLo = _vector(g["yLo"], "grid.yLo", decimal=True)
        yHi = _vector(g["yHi"], "grid.yHi", decimal=True)
        h = _rational(g["h"], "grid.h")
        M = _int(g["M"], "grid.M", lo=1)
        ladder = _vector(g["ladder"], "grid.ladder", decimal=True)
        if len(yLo) != len(yHi) or h <= 0:
            raise ParseError("grid bounds are inconsistent")
        grid = GridSpec(yLo, yHi, h, M, ladder)

    pa = pb = None
    if "points" in doc:
        pts = doc["points"]
        pa = _vector(pts["a"], "points.a") if "a" in pts else None
        pb = _vector(pts["b"], "points.b") if "b" in pts else None

    k = _int(doc.get("k", 1), "k", lo=1)
    seed = _int(doc.get("seed", 0), "seed", lo=0)
    checks = doc.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ParseError(f"checks must be a list drawn from {list(CHECKS)}")
    checks = tuple(c for c in CHECKS if c in checks)
    nm = doc.get("name", name)
    if not isinstance(nm, str):
        raise ParseError("name must be a string")
    return ScenarioConfig(nm, gens, e, basis, translates, grid, pa, pb, k, seed, checks, raw=doc)


def resolve_path(path) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("ccrlab") / "scenarios" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ParseError(f"cannot read scenario file {path}")


def load_config(path) -> ScenarioConfig:
    p = resolve_path(path)
    try:
        with open(p, "rb") as fh:
            doc = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{p}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read {p}: {exc}") from exc
    return parse_config(doc, name=p.stem)


def load_scenario(path, window_scale=None) -> tuple:
    cfg = load_config(path)
    try:
        return cfg, cfg.scenario(window_scale)
    except ParseError:
        raise
    except CCRLabError as exc:
        raise ParseError(f"{path}: invalid scenario: {exc}") from exc


def bundled_scenarios() -> list:
    root = resources.files("ccrlab") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".toml"))
