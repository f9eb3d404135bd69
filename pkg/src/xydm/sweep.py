"""Parameter-grid scans, finite-difference derivatives and peak location.

A sweep varies one or two of ``J``, ``gamma``, ``D``, ``temperature`` on a
uniform grid with every other parameter held fixed, and evaluates the
correlators and measures at each point. Rows are ordered row-major over the
axes in the order they were declared, regardless of how many workers ran.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import NamedTuple

import numpy as np

from xydm import chain
from xydm.chain import THERMODYNAMIC_LIMIT, ChainParams, FiniteRing
from xydm.errors import DomainError, ValidationError, XYDMError
from xydm.measures import discord_closed_form
from xydm.xstate import CLAMP_TOL

PARAMETERS = ("J", "gamma", "D", "temperature")
QUANTITIES = ("sz", "xx", "yy", "zz", "MI", "QD", "CC", "C")
#: CSV / table column name for each parameter
PARAM_COLUMNS = {"J": "J", "gamma": "gamma", "D": "D", "temperature": "T"}
_ALIASES = {"T": "temperature"}
WORKERS_ENV = "XYDM_WORKERS"
#: relative spacing tolerance for a grid to count as uniform
UNIFORM_RTOL = 1e-9


def canonical_parameter(name):
    name = _ALIASES.get(name, name)
    if name not in PARAMETERS:
        raise ValidationError(f"unknown sweep parameter {name!r}; expected one of {PARAMETERS}")
    return name


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    n_points: int

    def __post_init__(self):
        object.__setattr__(self, "name", canonical_parameter(self.name))
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValidationError(f"axis {self.name}: n_points must be a positive integer")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValidationError(f"axis {self.name}: bounds must be finite")
        if self.n_points == 1 and self.min != self.max:
            raise ValidationError(f"axis {self.name}: a single point needs min == max")
        if self.n_points > 1 and not self.min < self.max:
            raise ValidationError(f"axis {self.name}: need min < max, got {self.min}, {self.max}")

    @property
    def column(self):
        return f"axis_{PARAM_COLUMNS[self.name]}"

    def values(self):
        return np.linspace(self.min, self.max, int(self.n_points))


@dataclass(frozen=True)
class SweepSpec:
    """A 1- or 2-axis scan; ``fixed`` holds the parameters that do not vary."""

    axes: tuple
    fixed: dict = field(default_factory=dict)
    r: int = 1
    quantities: tuple = QUANTITIES
    derivatives: tuple = ()
    N: int | None = None

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis(**a) for a in self.axes)
        if not 1 <= len(axes) <= 2:
            raise ValidationError(f"a sweep has 1 or 2 axes, got {len(axes)}")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValidationError(f"repeated axis in {names}")
        fixed = {canonical_parameter(k): float(v) for k, v in dict(self.fixed).items()}
        clash = set(fixed) & set(names)
        if clash:
            raise ValidationError(f"parameters both fixed and swept: {sorted(clash)}")
        if int(self.r) != self.r or not 1 <= self.r <= chain.R_CAP:
            raise ValidationError(f"r must be an integer in [1, {chain.R_CAP}], got {self.r!r}")
        unknown = set(self.quantities) - set(QUANTITIES)
        if unknown or not self.quantities:
            raise ValidationError(f"quantities must be a non-empty subset of {QUANTITIES}")
        quantities = tuple(q for q in QUANTITIES if q in self.quantities)
        derivs = []
        for q, ax in self.derivatives:
            ax = canonical_parameter(ax)
            if q not in quantities:
                raise ValidationError(f"derivative of {q!r} requested but not among quantities")
            matching = [a for a in axes if a.name == ax]
            if not matching:
                raise ValidationError(f"derivative axis {ax!r} is not swept")
            if matching[0].n_points < 3:
                raise ValidationError(f"derivative along {ax} needs >= 3 points")
            derivs.append((q, ax))
        if self.N is not None:
            FiniteRing(self.N)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "quantities", quantities)
        object.__setattr__(self, "derivatives", tuple(derivs))

    @property
    def shape(self):
        return tuple(int(a.n_points) for a in self.axes)

    def template(self):
        """Parameters at the first grid point; defaults are gamma = 1, D = 0, T = 0."""
        base = {"J": 1.0, "gamma": 1.0, "D": 0.0, "temperature": 0.0}
        base.update(self.fixed)
        base.update({a.name: float(a.min) for a in self.axes})
        lattice = FiniteRing(self.N) if self.N is not None else THERMODYNAMIC_LIMIT
        return ChainParams(lattice=lattice, **base)

    def points(self):
        """Parameter points in row-major order over the declared axes."""
        template = self.template()
        grids = [a.values() for a in self.axes]
        for combo in itertools.product(*grids):
            yield template.replace(**{a.name: float(v) for a, v in zip(self.axes, combo)})

    def to_dict(self):
        return {
            "axes": [{"name": a.name, "min": a.min, "max": a.max, "n_points": a.n_points}
                     for a in self.axes],
            "fixed": dict(self.fixed),
            "r": self.r,
            "quantities": list(self.quantities),
            "derivatives": [list(d) for d in self.derivatives],
            "N": self.N,
        }

    @classmethod
    def from_dict(cls, data):
        allowed = {"axes", "fixed", "r", "quantities", "derivatives", "N"}
        unknown = set(data) - allowed
        if unknown:
            raise ValidationError(f"unknown sweep spec fields: {sorted(unknown)}")
        if "axes" not in data:
            raise ValidationError("sweep spec needs 'axes'")
        for a in data["axes"]:
            extra = set(a) - {"name", "min", "max", "n_points"}
            if extra:
                raise ValidationError(f"unknown axis fields: {sorted(extra)}")
        kw = dict(data)
        kw["axes"] = tuple(Axis(**a) for a in data["axes"])
        if "quantities" in kw:
            kw["quantities"] = tuple(kw["quantities"])
        if "derivatives" in kw:
            kw["derivatives"] = tuple(tuple(d) for d in kw["derivatives"])
        return cls(**kw)


def evaluate(p, r):
    """All quantities of QUANTITIES at one parameter point, as a dict."""
    corr = chain.correlations(p, r)
    report = discord_closed_form(chain.pair_density_matrix(p, r))
    return {
        "sz": corr.sz, "xx": corr.xx, "yy": corr.yy, "zz": corr.zz,
        "MI": report.mutual_information, "QD": report.quantum_discord,
        "CC": report.classical_correlation, "C": report.concurrence,
    }


def _safe_evaluate(args):
    p, r = args
    try:
        return evaluate(p, r), ""
    except (XYDMError, ArithmeticError, ValueError) as exc:
        return dict.fromkeys(QUANTITIES, math.nan), f"{type(exc).__name__}: {exc}"


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ValidationError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def _code_version():
    from xydm import __version__
    return __version__


@dataclass
class SweepTable:
    """Rows of a sweep; ``columns`` names each tuple entry of ``rows``.

    Equality ignores the ``timestamp`` metadata entry and treats NaN as equal
    to NaN, so two runs of the same spec compare equal.
    """

    columns: tuple
    rows: list
    metadata: dict
    shape: tuple

    def column(self, name):
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float if name != "error" else object)

    @property
    def failures(self):
        i = self.columns.index("error")
        return sum(1 for row in self.rows if row[i])

    def _key(self):
        meta = {k: v for k, v in self.metadata.items() if k != "timestamp"}
        return self.columns, [tuple(_fmt(v) for v in row) for row in self.rows], repr(meta)

    def __eq__(self, other):
        if not isinstance(other, SweepTable):
            return NotImplemented
        return self._key() == other._key()

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, metadata=None):
        reader = csv.reader(io.StringIO(text))
        columns = tuple(next(reader))
        rows = []
        for raw in reader:
            rows.append(tuple(_parse(c, v) for c, v in zip(columns, raw)))
        axis_cols = [c for c in columns if c.startswith("axis_")]
        shape = tuple(len(dict.fromkeys(row[columns.index(c)] for row in rows)) for c in axis_cols)
        return cls(columns, rows, dict(metadata or {}), shape)

    def to_json_dict(self):
        return {
            "columns": list(self.columns),
            "rows": [[_json_value(v) for v in row] for row in self.rows],
            "metadata": self.metadata,
        }


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.12g" % v


def _parse(column, text):
    if column == "error":
        return text
    if column == "r":
        return int(text)
    return float(text)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _uniform_step(x):
    steps = np.diff(x)
    h = steps.mean()
    if h <= 0 or np.abs(steps - h).max() > UNIFORM_RTOL * abs(h):
        raise DomainError("derivative needs a uniform, increasing grid")
    return float(h)


def derivative_values(values, x):
    """d(values)/dx on a uniform grid: central interior, second-order one-sided ends."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise DomainError("derivative needs a 1-D grid with at least 3 points")
    if y.shape != x.shape:
        raise DomainError(f"column length {y.size} does not match grid length {x.size}")
    return np.gradient(y, _uniform_step(x), edge_order=2)


def derivative(table, quantity, axis):
    """Derivative of ``quantity`` along ``axis`` for every row of ``table``."""
    axis = canonical_parameter(axis)
    col = f"axis_{PARAM_COLUMNS[axis]}"
    if col not in table.columns:
        raise DomainError(f"{axis} is not an axis of this table")
    axes = [c for c in table.columns if c.startswith("axis_")]
    k = axes.index(col)
    y = table.column(quantity).reshape(table.shape)
    grid = table.column(col).reshape(table.shape)
    x = np.moveaxis(grid, k, -1).reshape(-1, table.shape[k])[0]
    moved = np.moveaxis(y, k, -1)
    out = np.apply_along_axis(derivative_values, -1, moved, x)
    return np.moveaxis(out, -1, k).ravel()


class Extremum(NamedTuple):
    x: float
    value: float
    sharpness: float
    at_boundary: bool


def locate_extremum(column, x):
    """Maximum of ``column`` over the grid ``x`` with parabolic refinement.

    Sharpness is the negated second difference at the discrete maximum divided
    by h^2, i.e. the curvature of the fitted parabola. A maximum on the first
    or last grid point is flagged and left unrefined; its sharpness is then
    NaN.
    """
    y = np.asarray(column, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.ndim != 1 or y.size == 0:
        raise DomainError("column and grid must be 1-D arrays of equal length")
    if not np.all(np.isfinite(y)):
        raise DomainError("column contains non-finite values")
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1:
        return Extremum(float(x[i]), float(y[i]), math.nan, True)
    h = 0.5 * (x[i + 1] - x[i - 1])
    ym, y0, yp = y[i - 1], y[i], y[i + 1]
    second = ym - 2.0 * y0 + yp
    if second == 0.0:
        return Extremum(float(x[i]), float(y0), 0.0, False)
    shift = 0.5 * (ym - yp) / second
    return Extremum(float(x[i] + shift * h), float(y0 - 0.25 * (ym - yp) * shift),
                    float(-second / h**2), False)


def run_sweep(spec, workers=None):
    """Evaluate ``spec`` on its grid; failed points carry NaN and an error message."""
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    points = list(spec.points())
    jobs = [(p, spec.r) for p in points]
    if workers == 1 or len(jobs) < 2:
        results = [_safe_evaluate(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_safe_evaluate, jobs, chunksize=chunk))

    columns = [a.column for a in spec.axes]
    columns += ["J", "gamma", "D", "T", "r", *spec.quantities]
    deriv_cols = [f"d{q}/d{PARAM_COLUMNS[ax]}" for q, ax in spec.derivatives]
    columns += deriv_cols + ["error"]
    rows = []
    for p, (vals, err) in zip(points, results):
        axis_vals = [float(getattr(p, a.name)) for a in spec.axes]
        rows.append([*axis_vals, p.J, p.gamma, p.D, p.temperature, spec.r,
                     *(vals[q] for q in spec.quantities), *([math.nan] * len(deriv_cols)), err])
    meta = {
        "spec": spec.to_dict(),
        "template": repr(spec.template()),
        "tolerances": {"quad_epsabs": chain.QUAD_EPSABS, "clamp": CLAMP_TOL},
        "code_version": _code_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    table = SweepTable(tuple(columns), [tuple(r) for r in rows], meta, spec.shape)
    for name, (q, ax) in zip(deriv_cols, spec.derivatives):
        i = table.columns.index(name)
        for row, v in zip(rows, derivative(table, q, ax)):
            row[i] = float(v)
    table.rows = [tuple(r) for r in rows]
    return table


def max_curvature(column, x):
    """Largest |second difference| / h^2 over the interior of a uniform grid.

    For a smooth column this converges under grid refinement; a kink makes it
    grow like 1 / h.
    """
    y = np.asarray(column, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.size < 3:
        raise DomainError("need matching 1-D column and grid with at least 3 points")
    h = _uniform_step(x)
    return float(np.abs(np.diff(y, 2)).max() / h**2)
