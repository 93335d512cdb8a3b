"""Synthetic datasets from circuit models, and CSV input/output.

Random datasets draw irradiance and voltage from a PCG64 generator
(``numpy.random.PCG64``) seeded with the caller's seed: first all ``n``
irradiances, then all ``n`` voltages, each via ``Generator.uniform``.
That fixes the stream, so datasets reproduce bit for bit.

Dataset CSV layout::

    g_wm2,v_volt,t_kelvin,target
    200.0,12.5,,3.91...

``t_kelvin`` may be empty.  Curve CSV files hold one or more blocks, each
a run of ``# key=value`` comment lines (``g_wm2``, ``t_kelvin``,
``source_tag``) followed by a ``v_volt,i_ampere,p_watt`` header and rows.
Floats are written with ``repr`` so they read back exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .characteristics import Curve
from .circuit import DEFAULT_TOL, photocurrent_at_irradiance, solve_current_array
from .errors import ConvergenceError, CsvFormatError, ValidationError

DATASET_HEADER = ("g_wm2", "v_volt", "t_kelvin", "target")
CURVE_HEADER = ("v_volt", "i_ampere", "p_watt")


class DatasetKind(str, Enum):
    CURRENT = "current"
    POWER = "power"


@dataclass(frozen=True)
class Sample:
    irradiance: float
    voltage: float
    target: float
    temperature: float | None = None


class Dataset:
    """Homogeneous set of ``(G, V[, T]) -> target`` records held as arrays."""

    def __init__(self, kind, irradiance, voltage, target, temperature=None,
                 provenance=""):
        self.kind = DatasetKind(kind)
        self.irradiance = np.array(irradiance, dtype=float).ravel()
        self.voltage = np.array(voltage, dtype=float).ravel()
        self.target = np.array(target, dtype=float).ravel()
        n = len(self.irradiance)
        if temperature is None:
            self.temperature = np.full(n, np.nan)
        else:
            self.temperature = np.array(temperature, dtype=float).ravel()
        if not (len(self.voltage) == len(self.target) == len(self.temperature) == n):
            raise ValidationError("dataset columns differ in length")
        for name in ("irradiance", "voltage", "target"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"non-finite {name} in dataset")
        if np.any(self.irradiance < 0):
            raise ValidationError("irradiance must be >= 0")
        self.provenance = provenance

    def __len__(self):
        return len(self.target)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.kind == other.kind
                and np.array_equal(self.irradiance, other.irradiance)
                and np.array_equal(self.voltage, other.voltage)
                and np.array_equal(self.target, other.target)
                and np.array_equal(self.temperature, other.temperature,
                                   equal_nan=True))

    def __repr__(self):
        return f"Dataset(kind={self.kind.value!r}, n={len(self)})"

    @property
    def has_temperature(self):
        return len(self) > 0 and bool(np.all(np.isfinite(self.temperature)))

    @property
    def samples(self):
        return [Sample(g, v, y, None if math.isnan(t) else t)
                for g, v, y, t in zip(self.irradiance.tolist(),
                                      self.voltage.tolist(),
                                      self.target.tolist(),
                                      self.temperature.tolist())]

    def subset(self, index):
        return Dataset(self.kind, self.irradiance[index], self.voltage[index],
                       self.target[index], self.temperature[index],
                       self.provenance)


def _targets(model, g, v, kind, g_ref, tol):
    iph = photocurrent_at_irradiance(model.photocurrent, g, g_ref)
    try:
        i = solve_current_array(model, v, tol, photocurrent=iph)
    except ConvergenceError as exc:
        k = int(np.flatnonzero(v == exc.voltage)[0]) if exc.voltage is not None else -1
        raise ConvergenceError(f"sample {k}: {exc}") from exc
    return i if kind is DatasetKind.CURRENT else v * i


def _check_range(name, lo_hi):
    lo, hi = map(float, lo_hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValidationError(f"invalid {name} {lo_hi!r}")
    return lo, hi


def generate_random(model, n, g_range=(200.0, 1000.0), v_range=(0.0, 30.0),
                    kind="current", seed=0, tol=DEFAULT_TOL):
    """Uniform i.i.d. ``(G, V)`` samples labelled by a circuit model.

    The photocurrent is taken to be the model's value at the upper end of
    ``g_range`` and scaled linearly to each sample's irradiance.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    kind = DatasetKind(kind)
    g_lo, g_hi = _check_range("g_range", g_range)
    v_lo, v_hi = _check_range("v_range", v_range)
    if g_lo < 0 or not g_hi > 0:
        raise ValidationError("irradiance range must be non-negative and not all zero")
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.uniform(g_lo, g_hi, n)
    v = rng.uniform(v_lo, v_hi, n)
    y = _targets(model, g, v, kind, g_hi, tol)
    prov = (f"random n={n} g={g_lo}..{g_hi} v={v_lo}..{v_hi} seed={seed} "
            f"T={model.thermal.temperature}")
    return Dataset(kind, g, v, y, provenance=prov)


def generate_grid(model, g_values, v_range=(0.0, 30.0), n_v=101,
                  kind="current", g_ref=None, tol=DEFAULT_TOL):
    """Cartesian grid: every irradiance in ``g_values`` times ``n_v`` voltages.

    ``g_ref`` (irradiance at which the model's photocurrent applies)
    defaults to the largest grid irradiance.
    """
    kind = DatasetKind(kind)
    g_values = [float(g) for g in g_values]
    if not g_values or n_v < 1:
        raise ValidationError("grid needs at least one irradiance and one voltage")
    v_lo, v_hi = _check_range("v_range", v_range)
    g_ref = max(g_values) if g_ref is None else g_ref
    g = np.repeat(g_values, n_v)
    v = np.tile(np.linspace(v_lo, v_hi, n_v), len(g_values))
    y = _targets(model, g, v, kind, g_ref, tol)
    prov = f"grid g={g_values} v={v_lo}..{v_hi} n_v={n_v}"
    return Dataset(kind, g, v, y, provenance=prov)


# -- CSV ----------------------------------------------------------------------

def _fmt(x):
    return "" if math.isnan(x) else repr(float(x))


def dataset_to_csv(dataset: Dataset) -> str:
    out = io.StringIO()
    out.write(",".join(DATASET_HEADER) + "\n")
    for g, v, t, y in zip(dataset.irradiance.tolist(), dataset.voltage.tolist(),
                          dataset.temperature.tolist(), dataset.target.tolist()):
        out.write(f"{_fmt(g)},{_fmt(v)},{_fmt(t)},{_fmt(y)}\n")
    return out.getvalue()


def _parse_float(text, line, column, allow_empty=False):
    text = text.strip()
    if allow_empty and text == "":
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(line, f"{column}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise CsvFormatError(line, f"{column}: non-finite value {text!r}")
    return value


def dataset_from_csv(text: str, kind="current", provenance="") -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != DATASET_HEADER:
        raise CsvFormatError(1, f"expected header {','.join(DATASET_HEADER)}")
    cols = [[], [], [], []]
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise CsvFormatError(line, f"expected 4 columns, got {len(row)}")
        for k, (name, cell) in enumerate(zip(DATASET_HEADER, row)):
            cols[k].append(_parse_float(cell, line, name, allow_empty=(k == 2)))
    g, v, t, y = cols
    if any(x < 0 for x in g):
        raise ValidationError("negative irradiance in dataset file")
    return Dataset(kind, g, v, y, t, provenance)


def write_csv(obj, destination):
    """Write a :class:`Dataset`, a Curve, or a list of Curves to a path."""
    if isinstance(obj, Dataset):
        text = dataset_to_csv(obj)
    elif isinstance(obj, Curve):
        text = curves_to_csv([obj])
    else:
        text = curves_to_csv(list(obj))
    Path(destination).write_text(text, encoding="utf-8", newline="\n")


def curves_to_csv(curves) -> str:
    out = io.StringIO()
    for curve in curves:
        out.write(f"# g_wm2={curve.irradiance!r}\n")
        out.write(f"# t_kelvin={curve.temperature!r}\n")
        tag = curve.source_tag.replace("\n", " ")
        out.write(f"# source_tag={tag}\n")
        out.write(",".join(CURVE_HEADER) + "\n")
        for v, i, p in zip(curve.v.tolist(), curve.i.tolist(), curve.p.tolist()):
            out.write(f"{v!r},{i!r},{p!r}\n")
    return out.getvalue()


def curves_from_csv(text: str) -> list:
    """Parse one or more curve blocks.

    A block without data rows still yields a (header-only) curve so that
    callers can report it as malformed.
    """
    blocks = []
    current = None
    in_data = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if current is None or in_data:
                current = {"meta": {}, "rows": [], "line": line_no, "header": False}
                blocks.append(current)
                in_data = False
            key, sep, value = stripped[1:].partition("=")
            if sep:
                current["meta"][key.strip()] = value.strip()
            continue
        if current is None:
            current = {"meta": {}, "rows": [], "line": line_no, "header": False}
            blocks.append(current)
        if not current["header"]:
            if tuple(c.strip() for c in stripped.split(",")) != CURVE_HEADER:
                raise CsvFormatError(line_no, f"expected header {','.join(CURVE_HEADER)}")
            current["header"] = True
            in_data = True
            continue
        cells = stripped.split(",")
        if len(cells) != 3:
            raise CsvFormatError(line_no, f"expected 3 columns, got {len(cells)}")
        current["rows"].append([_parse_float(c, line_no, name)
                                for c, name in zip(cells, CURVE_HEADER)])
    curves = []
    for block in blocks:
        if not block["header"]:
            raise CsvFormatError(block["line"], "curve block has no header row")
        meta = block["meta"]
        try:
            g = float(meta.get("g_wm2", "nan"))
            t = float(meta.get("t_kelvin", "nan"))
        except ValueError:
            raise CsvFormatError(block["line"], "bad g_wm2/t_kelvin comment") from None
        rows = np.array(block["rows"], dtype=float).reshape(-1, 3)
        try:
            curves.append(Curve(g, t, rows[:, 0], rows[:, 1],
                                meta.get("source_tag", "")))
        except ValidationError as exc:
            raise CsvFormatError(block["line"], str(exc)) from None
    return curves


def read_curves(source) -> list:
    return curves_from_csv(Path(source).read_text(encoding="utf-8"))


def read_csv(source, kind="current") -> Dataset:
    path = Path(source)
    return dataset_from_csv(path.read_text(encoding="utf-8"), kind,
                            provenance=str(path))
