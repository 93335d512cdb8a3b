"""I-V / P-V sweeps and figures of merit.

A *source* is anything with a ``current(v, g, t)`` method returning an
array of currents; :class:`CircuitSource` wraps a circuit model and
:class:`SurrogateSource` a current-output RBF network.  Plain callables
with the same signature are accepted too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import (DEFAULT_TOL, EXP_CAP, _circuit, _sign, at_conditions,
                      solve_current_array)
from .errors import MalformedCurveError, ValidationError
from .rbf import OutputKind, evaluate_many

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MPP_RESOLUTION = 1e-6  # volt


class Curve:
    """Voltage sweep at fixed irradiance and temperature; ``p = v * i``."""

    def __init__(self, irradiance, temperature, v, i, source_tag=""):
        self.irradiance = float(irradiance)
        self.temperature = math.nan if temperature is None else float(temperature)
        self.v = np.array(v, dtype=float).ravel()
        self.i = np.array(i, dtype=float).ravel()
        if len(self.v) != len(self.i):
            raise ValidationError("v and i differ in length")
        if np.any(np.diff(self.v) <= 0):
            raise ValidationError("curve voltages must be strictly increasing")
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.i))):
            raise ValidationError("curve values must be finite")
        self.p = self.v * self.i
        self.source_tag = source_tag

    def __len__(self):
        return len(self.v)

    def __eq__(self, other):
        if not isinstance(other, Curve):
            return NotImplemented
        return (self.irradiance == other.irradiance
                and (self.temperature == other.temperature
                     or math.isnan(self.temperature) and math.isnan(other.temperature))
                and self.source_tag == other.source_tag
                and np.array_equal(self.v, other.v)
                and np.array_equal(self.i, other.i))

    def __repr__(self):
        return (f"Curve(g={self.irradiance!r}, t={self.temperature!r}, "
                f"n={len(self)}, source_tag={self.source_tag!r})")

    @property
    def points(self):
        return list(zip(self.v.tolist(), self.i.tolist(), self.p.tolist()))


class CircuitSource:
    """Circuit model moved to each requested (G, T) before solving.

    ``g_ref`` is the irradiance at which the model's photocurrent applies.
    """

    def __init__(self, model, g_ref=1000.0, extension=None, tol=DEFAULT_TOL,
                 tag=None):
        self.model = model
        self.g_ref = g_ref
        self.extension = extension
        self.tol = tol
        self.tag = tag or type(model).__name__

    def model_at(self, g, t):
        if t is not None and math.isnan(t):
            t = None
        return at_conditions(self.model, g, t, self.g_ref, self.extension)

    def current(self, v, g, t):
        return solve_current_array(self.model_at(g, t), v, self.tol)

    def open_circuit_voltage(self, g, t, lo, hi, tol=1e-12):
        """Bisection for the zero-current voltage inside ``[lo, hi]``."""
        c = _circuit(self.model_at(g, t))
        for _ in range(200):
            if hi - lo <= tol * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if _sign(c, mid, 0.0, EXP_CAP) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


class SurrogateSource:
    def __init__(self, surrogate, tag="rbf"):
        if surrogate.output_kind is not OutputKind.CURRENT:
            raise ValidationError("only current-output surrogates can source a curve")
        self.surrogate = surrogate
        self.tag = tag

    def current(self, v, g, t):
        temp = t if self.surrogate.n_inputs == 3 else None
        return evaluate_many(self.surrogate, v, g, temp)


def _current_fn(source):
    if hasattr(source, "current"):
        return source.current
    if callable(source):
        return source
    raise TypeError("source needs a current(v, g, t) method")


def sweep_curve(source, g, t, v_max, n) -> Curve:
    """``n`` equally spaced points on ``[0, v_max]`` (both ends included)."""
    if n < 2:
        raise ValidationError("a sweep needs n >= 2 points")
    if not v_max > 0:
        raise ValidationError("v_max must be > 0")
    v = np.linspace(0.0, v_max, n)
    i = np.asarray(_current_fn(source)(v, g, t), dtype=float)
    return Curve(g, t, v, i, getattr(source, "tag", ""))


@dataclass(frozen=True)
class CurveMetrics:
    isc: float
    voc: float | None
    vmp: float
    imp: float
    pmp: float
    fill_factor: float | None
    efficiency: float | None = None

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _golden_max(f, a, b, resolution):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > resolution:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def metrics(curve: Curve, module_area=None, source=None) -> CurveMetrics:
    """Isc, Voc, maximum power point, fill factor and efficiency.

    Without ``source`` the maximum power point is refined on a local cubic
    fit of the current around the best sample; with one, the source is
    evaluated directly, and a :class:`CircuitSource` also polishes Voc.
    ``voc`` and ``fill_factor`` are ``None`` when the current never
    crosses zero.
    """
    v, i = curve.v, curve.i
    if len(v) < 3:
        raise MalformedCurveError(f"curve needs at least 3 points, got {len(v)}")
    if v[0] == 0.0:
        isc = float(i[0])
    else:
        isc = float(i[0] - v[0] * (i[1] - i[0]) / (v[1] - v[0]))
    if not i[0] > 0:
        raise MalformedCurveError("current at the first point must be positive")

    crossing = np.flatnonzero(i <= 0)
    if crossing.size:
        k = int(crossing[0])
        voc = float(v[k - 1] + i[k - 1] * (v[k] - v[k - 1]) / (i[k - 1] - i[k]))
        if isinstance(source, CircuitSource):
            voc = source.open_circuit_voltage(curve.irradiance, curve.temperature,
                                              float(v[k - 1]), float(v[k]))
        last = k
    else:
        if i[-1] > i[0]:
            raise MalformedCurveError("current increases and never crosses zero")
        voc = None
        last = len(v) - 1

    p = curve.p
    j = int(np.argmax(p[:last + 1]))
    a = float(v[max(j - 1, 0)])
    b = float(v[min(j + 1, len(v) - 1)])
    if source is not None:
        fn = _current_fn(source)

        def current_at(x):
            return float(np.asarray(fn(np.array([x]), curve.irradiance,
                                       curve.temperature))[0])
    elif len(v) >= 4:
        # least-squares cubic through up to five samples around the argmax;
        # v * (linear interpolant) has kinks that bias Vmp by ~h/10
        lo = max(min(j - 2, len(v) - 4), 0)
        hi = min(lo + 5, len(v))
        v0 = float(v[j])
        coef = np.polyfit(v[lo:hi] - v0, i[lo:hi], 3)

        def current_at(x):
            return float(np.polyval(coef, x - v0))
    else:
        def current_at(x):
            return float(np.interp(x, v, i))

    vmp = _golden_max(lambda x: x * current_at(x), a, b, MPP_RESOLUTION)
    imp = current_at(vmp)
    pmp = vmp * imp
    if pmp < p[j]:
        vmp, imp, pmp = float(v[j]), float(i[j]), float(p[j])
    ff = pmp / (voc * isc) if voc is not None and voc > 0 and isc > 0 else None
    eff = None
    if module_area is not None:
        if not module_area > 0:
            raise ValidationError("module area must be > 0")
        if curve.irradiance > 0:
            eff = pmp / (curve.irradiance * module_area)
    return CurveMetrics(isc, voc, vmp, imp, pmp, ff, eff)


@dataclass(frozen=True)
class CurveComparison:
    rel_mse_current: float
    rel_mse_power: float
    max_abs_current: float
    max_abs_power: float


def _rel(ref, other):
    num = float(np.sum((other - ref) ** 2))
    den = float(np.sum(ref ** 2))
    if num == 0:
        return 0.0
    return num / den if den > 0 else math.inf


def compare_curves(a: Curve, b: Curve) -> CurveComparison:
    """Error statistics of ``b`` relative to reference ``a`` on a shared grid."""
    if not np.array_equal(a.v, b.v):
        raise ValidationError("curves are sampled on different voltage grids")
    return CurveComparison(_rel(a.i, b.i), _rel(a.p, b.p),
                           float(np.max(np.abs(b.i - a.i))),
                           float(np.max(np.abs(b.p - a.p))))
