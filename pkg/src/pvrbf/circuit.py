"""Equivalent-circuit PV module models.

The five-parameter (single diode) model and the two-diode model are both
implicit in the terminal current ``i``::

    0 = Iph - sum_k I0k * (exp((v + i*Rs) / (n_k*Vt)) - 1) - (v + i*Rs)/Rsh - i

The right-hand side is strictly decreasing in ``i`` (its derivative is at
most ``-1``), so the operating current at a fixed voltage is unique.  Two
scalar solvers are provided: a damped Newton iteration with bisection
fallback (:func:`solve_current`) and plain bisection
(:func:`solve_current_bisect`), which serves as an independent check.
:func:`solve_current_array` is a vectorized bracketed Newton used for
sweeps, dataset generation and fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np

from .errors import ConvergenceError, ExponentOverflowError, ValidationError

BOLTZMANN = 1.380649e-23  # J/K
ELECTRON_CHARGE = 1.602177e-19  # C

EXP_CAP = 250.0
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100
V_CAP = 100.0
_NEWTON_STALL_LIMIT = 5
_MAX_HALVINGS = 40
_MAX_EXPANSIONS = 200


@dataclass(frozen=True)
class ThermalContext:
    """Cell count and temperature that set the module thermal voltage."""

    n_series: int = 1
    temperature: float = 298.15
    boltzmann: float = BOLTZMANN
    electron_charge: float = ELECTRON_CHARGE

    def __post_init__(self):
        if not self.n_series >= 1:
            raise ValidationError(f"n_series must be >= 1, got {self.n_series!r}")
        if not self.temperature > 0:
            raise ValidationError(
                f"temperature must be > 0 K, got {self.temperature!r}")
        if not (self.boltzmann > 0 and self.electron_charge > 0):
            raise ValidationError("physical constants must be positive")


def thermal_voltage(ctx: ThermalContext) -> float:
    """Module thermal voltage ``Ns*k*T/q`` in volts."""
    return ctx.n_series * ctx.boltzmann * ctx.temperature / ctx.electron_charge


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class FiveParamModel:
    """Single-diode model with series and shunt resistance.

    Parameters
    ----------
    photocurrent : float
        Light-generated current Iph [A], >= 0.
    saturation_current : float
        Diode reverse saturation current I0 [A], > 0.
    ideality : float
        Diode ideality factor a, > 0.
    series_resistance : float
        Rs [ohm], >= 0.
    shunt_resistance : float
        Rsh [ohm], > 0 and finite.
    thermal : ThermalContext
        Cell count and temperature.
    """

    photocurrent: float
    saturation_current: float
    ideality: float
    series_resistance: float
    shunt_resistance: float
    thermal: ThermalContext = ThermalContext()

    def __post_init__(self):
        for name in ("photocurrent", "saturation_current", "ideality",
                     "series_resistance", "shunt_resistance"):
            _check_finite(name, getattr(self, name))
        if self.photocurrent < 0:
            raise ValidationError("photocurrent must be >= 0")
        if not self.saturation_current > 0:
            raise ValidationError("saturation_current must be > 0")
        if not self.ideality > 0:
            raise ValidationError("ideality must be > 0")
        if self.series_resistance < 0:
            raise ValidationError("series_resistance must be >= 0")
        if not self.shunt_resistance > 0:
            raise ValidationError("shunt_resistance must be > 0")

    @property
    def thermal_voltage(self):
        return thermal_voltage(self.thermal)


@dataclass(frozen=True)
class TwoDiodeModel:
    """Two-diode model; ``eta2`` is restricted to [1, 2]."""

    photocurrent: float
    i01: float
    i02: float
    series_resistance: float
    shunt_resistance: float
    eta1: float = 1.0
    eta2: float = 2.0
    thermal: ThermalContext = ThermalContext()

    def __post_init__(self):
        for name in ("photocurrent", "i01", "i02", "series_resistance",
                     "shunt_resistance", "eta1", "eta2"):
            _check_finite(name, getattr(self, name))
        if self.photocurrent < 0:
            raise ValidationError("photocurrent must be >= 0")
        if self.i01 < 0 or self.i02 < 0:
            raise ValidationError("saturation currents must be >= 0")
        if not self.eta1 > 0:
            raise ValidationError("eta1 must be > 0")
        if not 1.0 <= self.eta2 <= 2.0:
            raise ValidationError(f"eta2 must lie in [1, 2], got {self.eta2!r}")
        if self.series_resistance < 0:
            raise ValidationError("series_resistance must be >= 0")
        if not self.shunt_resistance > 0:
            raise ValidationError("shunt_resistance must be > 0")

    @property
    def thermal_voltage(self):
        return thermal_voltage(self.thermal)


CircuitModel = Union[FiveParamModel, TwoDiodeModel]


@dataclass(frozen=True)
class SevenParamExtension:
    """Temperature and irradiance dependence of Rs and I0.

    ``eg_ref_over_k`` and ``eg_over_k`` are the band gap divided by the
    Boltzmann constant (kelvin) at reference and operating temperature.
    ``eg_over_k=None`` means a temperature-independent band gap.
    """

    rs_ref: float
    delta: float
    t_ref: float
    i0_ref: float
    g_ref: float
    m_exponent: float
    eg_ref_over_k: float = 0.0
    eg_over_k: float | None = None

    def __post_init__(self):
        if not self.g_ref > 0:
            raise ValidationError("g_ref must be > 0")
        if not self.t_ref > 0:
            raise ValidationError("t_ref must be > 0")
        if self.rs_ref < 0:
            raise ValidationError("rs_ref must be >= 0")
        if not self.i0_ref > 0:
            raise ValidationError("i0_ref must be > 0")


def rs_at_temperature(ext: SevenParamExtension, t: float) -> float:
    if not t > 0:
        raise ValidationError(f"temperature must be > 0 K, got {t!r}")
    return ext.rs_ref * math.exp(ext.delta * (t - ext.t_ref))


def i0_at_conditions(ext: SevenParamExtension, g: float, t: float) -> float:
    """Saturation current at irradiance ``g`` [W/m2] and temperature ``t`` [K]."""
    if not g > 0:
        raise ValidationError(f"irradiance must be > 0, got {g!r}")
    if not t > 0:
        raise ValidationError(f"temperature must be > 0 K, got {t!r}")
    eg_op = ext.eg_ref_over_k if ext.eg_over_k is None else ext.eg_over_k
    return (ext.i0_ref
            * (ext.g_ref / g) ** ext.m_exponent
            * (t / ext.t_ref) ** 3
            * math.exp(ext.eg_ref_over_k / ext.t_ref - eg_op / t))


def photocurrent_at_irradiance(iph_ref, g, g_ref):
    """Photocurrent scaled linearly with irradiance; works on arrays."""
    if not g_ref > 0:
        raise ValidationError(f"g_ref must be > 0, got {g_ref!r}")
    if np.any(np.asarray(g) < 0):
        raise ValidationError("irradiance must be >= 0")
    return iph_ref * (g / g_ref)


def at_conditions(model: CircuitModel, g: float, t: float | None = None,
                  g_ref: float = 1000.0,
                  extension: SevenParamExtension | None = None):
    """Return ``model`` moved to irradiance ``g`` and temperature ``t``.

    The photocurrent scales with irradiance.  When ``extension`` is given
    (five-parameter models only) Rs and I0 follow it as well.
    """
    thermal = model.thermal if t is None else replace(model.thermal, temperature=t)
    iph = photocurrent_at_irradiance(model.photocurrent, g, g_ref)
    changes = dict(photocurrent=iph, thermal=thermal)
    if extension is not None:
        if not isinstance(model, FiveParamModel):
            raise ValidationError("seven-parameter extension needs a FiveParamModel")
        changes["series_resistance"] = rs_at_temperature(extension, thermal.temperature)
        changes["saturation_current"] = i0_at_conditions(
            extension, g, thermal.temperature)
    return replace(model, **changes)


# -- shared numerics ----------------------------------------------------------

class _Circuit(NamedTuple):
    iph: float
    diodes: tuple  # ((i0, n*Vt), ...)
    rs: float
    rsh: float


def _circuit(model: CircuitModel) -> _Circuit:
    vt = thermal_voltage(model.thermal)
    if isinstance(model, FiveParamModel):
        diodes = ((model.saturation_current, model.ideality * vt),)
    elif isinstance(model, TwoDiodeModel):
        diodes = ((model.i01, model.eta1 * vt), (model.i02, model.eta2 * vt))
    else:
        raise TypeError(f"not a circuit model: {type(model).__name__}")
    return _Circuit(model.photocurrent, diodes, model.series_resistance,
                    model.shunt_resistance)


def _residual(c: _Circuit, v, i, cap):
    vd = v + i * c.rs
    total = c.iph - vd / c.rsh - i
    for i0, nvt in c.diodes:
        x = vd / nvt
        if x > cap:
            raise ExponentOverflowError(x, cap)
        total -= i0 * math.expm1(x)
    return total


def _slope(c: _Circuit, v, i):
    vd = v + i * c.rs
    s = -1.0 - c.rs / c.rsh
    for i0, nvt in c.diodes:
        s -= i0 * math.exp(vd / nvt) * c.rs / nvt
    return s


def _sign(c, v, i, cap):
    try:
        return _residual(c, v, i, cap)
    except ExponentOverflowError:
        # Overflow only happens for large positive diode voltage, where the
        # residual is hugely negative.
        return -math.inf


def _check_inputs(v, tol, v_cap):
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol!r}")
    if not math.isfinite(v) or abs(v) > v_cap:
        raise ValidationError(f"|v| must be <= {v_cap!r}, got {v!r}")


def residual_five_param(model: FiveParamModel, v: float, i: float,
                        cap: float = EXP_CAP) -> float:
    """Current balance of the single-diode equation; zero at the operating point.

    Raises :class:`ExponentOverflowError` when the diode exponent argument
    exceeds ``cap``.
    """
    return _residual(_circuit(model), v, i, cap)


def residual_two_diode(model: TwoDiodeModel, v: float, i: float,
                       cap: float = EXP_CAP) -> float:
    return _residual(_circuit(model), v, i, cap)


def _bracket(c: _Circuit, v, cap):
    hi = c.iph + sum(i0 for i0, _ in c.diodes) + max(0.0, -v) / c.rsh + 1.0
    lo = -(max(v, 0.0) / c.rsh + c.iph + 1.0)
    for _ in range(_MAX_EXPANSIONS):
        if _sign(c, v, lo, cap) > 0:
            break
        lo = 2.0 * lo - 1.0
    else:
        raise ConvergenceError("could not find a lower bracket", (lo, hi), v)
    if not _sign(c, v, hi, cap) < 0:
        raise ValidationError(
            f"residual has no sign change on [{lo!r}, {hi!r}]; invalid model")
    return lo, hi


def _bisect(c: _Circuit, v, tol, max_iter, cap, lo=None, hi=None):
    if lo is None or hi is None:
        lo, hi = _bracket(c, v, cap)
    best, best_r = None, math.inf
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = _sign(c, v, mid, cap)
        if abs(r) < best_r:
            best, best_r = mid, abs(r)
        if abs(r) < tol:
            return mid
        if mid == lo or mid == hi:
            break
        if r > 0:
            lo = mid
        else:
            hi = mid
    if best_r < tol:
        return best
    raise ConvergenceError("bisection did not reach tolerance", (lo, hi), v)


def solve_current_bisect(model: CircuitModel, v: float, tol: float = DEFAULT_TOL,
                         max_iter: int = 4 * DEFAULT_MAX_ITER,
                         cap: float = EXP_CAP, v_cap: float = V_CAP) -> float:
    """Terminal current at voltage ``v`` by bisection alone."""
    _check_inputs(v, tol, v_cap)
    return _bisect(_circuit(model), v, tol, max_iter, cap)


def solve_current(model: CircuitModel, v: float, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, cap: float = EXP_CAP,
                  v_cap: float = V_CAP) -> float:
    """Terminal current at voltage ``v``.

    Damped Newton from ``i = Iph``: each step is halved until the residual
    magnitude drops.  After five stalled iterations, or ``max_iter`` without
    convergence, the solve falls back to bisection on a sign-change bracket
    narrowed by every Newton evaluation.

    Raises
    ------
    ConvergenceError
        if neither phase reaches ``tol``; carries the last bracket.
    """
    _check_inputs(v, tol, v_cap)
    c = _circuit(model)
    i = c.iph
    r = _sign(c, v, i, cap)
    lo = hi = None
    stalls = 0
    for _ in range(max_iter):
        if abs(r) < tol:
            return i
        if r > 0:
            lo = i if lo is None else max(lo, i)
        else:
            hi = i if hi is None else min(hi, i)
        if not math.isfinite(r):
            break
        step = -r / _slope(c, v, i)
        t = 1.0
        for _ in range(_MAX_HALVINGS):
            trial = i + t * step
            rt = _sign(c, v, trial, cap)
            if abs(rt) < abs(r):
                i, r = trial, rt
                stalls = 0
                break
            t *= 0.5
        else:
            stalls += 1
            if stalls >= _NEWTON_STALL_LIMIT:
                break
    blo, bhi = _bracket(c, v, cap)
    lo = blo if lo is None else max(lo, blo)
    hi = bhi if hi is None else min(hi, bhi)
    return _bisect(c, v, tol, 4 * max_iter, cap, lo, hi)


def solve_current_two_diode(model: TwoDiodeModel, v: float,
                            tol: float = DEFAULT_TOL, **kwargs) -> float:
    return solve_current(model, v, tol, **kwargs)


def power_at(model: CircuitModel, v: float, tol: float = DEFAULT_TOL,
             **kwargs) -> float:
    return v * solve_current(model, v, tol, **kwargs)


def open_circuit_voltage(model: CircuitModel, v_cap: float = V_CAP,
                         tol: float = 1e-12, cap: float = EXP_CAP) -> float:
    """Voltage where the terminal current crosses zero, by bisection on [0, v_cap].

    The residual is decreasing in ``i``, so the sign of the residual at
    ``i = 0`` equals the sign of the solved current; no inner solve is
    needed.
    """
    c = _circuit(model)
    if _sign(c, 0.0, 0.0, cap) <= 0:
        return 0.0
    if _sign(c, v_cap, 0.0, cap) > 0:
        raise ConvergenceError("no open-circuit voltage below v_cap", (0.0, v_cap))
    lo, hi = 0.0, v_cap
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _sign(c, mid, 0.0, cap) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- vectorized solver --------------------------------------------------------

def _residual_array(c: _Circuit, iph, v, i, cap):
    vd = v + i * c.rs
    with np.errstate(over="ignore"):
        r = iph - vd / c.rsh - i
    s = np.full_like(r, -1.0 - c.rs / c.rsh)
    over = np.zeros(r.shape, dtype=bool)
    for i0, nvt in c.diodes:
        x = vd / nvt
        over |= x > cap
        xc = np.minimum(x, cap)
        r = r - i0 * np.expm1(xc)
        s = s - i0 * np.exp(xc) * c.rs / nvt
    r[over] = -np.inf
    return r, s


def solve_current_array(model: CircuitModel, v, tol: float = DEFAULT_TOL,
                        photocurrent=None, max_iter: int = 4 * DEFAULT_MAX_ITER,
                        cap: float = EXP_CAP, v_cap: float = V_CAP) -> np.ndarray:
    """Vectorized terminal current for an array of voltages.

    Bracketed Newton: every evaluation tightens a per-element sign-change
    bracket and Newton steps leaving it are replaced by the midpoint.
    ``photocurrent`` optionally overrides Iph per element (broadcast
    against ``v``).
    """
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol!r}")
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)) or np.any(np.abs(v) > v_cap):
        raise ValidationError(f"all |v| must be finite and <= {v_cap!r}")
    c = _circuit(model)
    iph = np.asarray(c.iph if photocurrent is None else photocurrent, dtype=float)
    if np.any(iph < 0) or not np.all(np.isfinite(iph)):
        raise ValidationError("photocurrent must be finite and >= 0")
    v, iph = np.broadcast_arrays(v, iph)
    v = v.astype(float, copy=True)
    iph = iph.astype(float, copy=True)

    hi = iph + sum(i0 for i0, _ in c.diodes) + np.maximum(0.0, -v) / c.rsh + 1.0
    lo = -(np.maximum(v, 0.0) / c.rsh + iph + 1.0)
    for _ in range(_MAX_EXPANSIONS):
        r_lo, _ = _residual_array(c, iph, v, lo, cap)
        bad = ~(r_lo > 0)
        if not bad.any():
            break
        lo = np.where(bad, 2.0 * lo - 1.0, lo)
    else:
        k = int(np.flatnonzero(bad.ravel())[0])
        raise ConvergenceError("could not find a lower bracket",
                               (lo.ravel()[k], hi.ravel()[k]), v.ravel()[k])

    i = np.clip(iph, lo, hi)
    for _ in range(max_iter):
        r, s = _residual_array(c, iph, v, i, cap)
        done = np.abs(r) < tol
        if done.all():
            return i
        lo = np.where(r > 0, i, lo)
        hi = np.where(r < 0, i, hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            newton = i - r / s
        mid = 0.5 * (lo + hi)
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        i = np.where(done, i, np.where(ok, newton, mid))
    k = int(np.flatnonzero(~done.ravel())[0])
    raise ConvergenceError("array solve did not converge",
                           (lo.ravel()[k], hi.ravel()[k]), v.ravel()[k])
