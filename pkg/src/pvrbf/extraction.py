"""Five-parameter extraction from I-V curves by Levenberg-Marquardt.

Free parameters are ``[Iph_ref, ln I0, a, Rs, ln Rsh]``.  ``Iph_ref`` is
the photocurrent at ``g_ref``; each curve uses it scaled to the curve's
irradiance, so several curves share one photocurrent parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .characteristics import Curve
from .circuit import (DEFAULT_TOL, FiveParamModel, _circuit, at_conditions,
                      solve_current_array)
from .errors import NumericalError, ValidationError

N_PARAMS = 5
PARAM_NAMES = ("photocurrent", "saturation_current", "ideality",
               "series_resistance", "shunt_resistance")
FD_STEP = 1e-6
LAMBDA_INIT = 1e-3
LAMBDA_MAX = 1e16


@dataclass(frozen=True)
class FitReport:
    model: FiveParamModel
    residual_norm: float  # RMS current residual [A]
    iterations: int
    converged: bool
    relative_step: tuple = (0.0,) * N_PARAMS
    cost_history: tuple = field(default=(), repr=False)


def _theta(model):
    return np.array([model.photocurrent, math.log(model.saturation_current),
                     model.ideality, model.series_resistance,
                     math.log(model.shunt_resistance)])


def _model(theta, template):
    return replace(template, photocurrent=float(theta[0]),
                   saturation_current=float(math.exp(theta[1])),
                   ideality=float(theta[2]), series_resistance=float(theta[3]),
                   shunt_resistance=float(math.exp(theta[4])))


def _curve_model(model, curve, g_ref):
    t = None if math.isnan(curve.temperature) else curve.temperature
    return at_conditions(model, curve.irradiance, t, g_ref)


def _predict(theta, template, curves, g_ref, tol):
    model = _model(theta, template)
    return np.concatenate([solve_current_array(_curve_model(model, c, g_ref), c.v, tol)
                           for c in curves])


def _jacobian_fd(theta, base, template, curves, g_ref, tol):
    jac = np.empty((len(base), N_PARAMS))
    for k in range(N_PARAMS):
        step = FD_STEP * max(abs(theta[k]), 1e-3)
        shifted = theta.copy()
        shifted[k] += step
        jac[:, k] = (_predict(shifted, template, curves, g_ref, tol) - base) / step
    return jac


def _jacobian_analytic(theta, base, template, curves, g_ref):
    """Implicit-function derivative ``dI/dtheta = -(dR/dtheta) / (dR/dI)``."""
    model = _model(theta, template)
    blocks = []
    start = 0
    for c in curves:
        m = _curve_model(model, c, g_ref)
        circ = _circuit(m)
        i0, nvt = circ.diodes[0]
        i = base[start:start + len(c.v)]
        start += len(c.v)
        vd = c.v + i * circ.rs
        x = vd / nvt
        ex = np.exp(x)
        dr_di = -(1.0 + circ.rs / circ.rsh + i0 * ex * circ.rs / nvt)
        dr = np.column_stack([
            np.full_like(i, c.irradiance / g_ref),
            -i0 * np.expm1(x),
            i0 * ex * x / m.ideality,
            -i0 * ex * i / nvt - i / circ.rsh,
            vd / circ.rsh,
        ])
        blocks.append(-dr / dr_di[:, None])
    return np.vstack(blocks)


def _valid(theta):
    return (np.all(np.isfinite(theta)) and theta[0] >= 0 and theta[2] > 0
            and theta[3] >= 0)


def fit_five_param(curves, init: FiveParamModel, goal: float = 1e-8,
                   g_ref: float = 1000.0, max_iter: int = 200,
                   jacobian: str = "fd", tol: float = DEFAULT_TOL) -> FitReport:
    """Least-squares fit of the single-diode model to one or more curves.

    Minimizes the summed squared difference between observed currents and
    :func:`~pvrbf.circuit.solve_current_array` predictions.  Damping starts
    at 1e-3, is multiplied by 10 on a rejected step and divided by 10 on an
    accepted one; accepted steps strictly lower the cost.

    Parameters
    ----------
    curves : list of Curve
        Observed curves; each carries its irradiance and temperature
        (a NaN temperature means the model's own).
    init : FiveParamModel
        Starting point.  Its photocurrent applies at ``g_ref``.
    goal : float
        Stop once the RMS residual [A] falls to this value.
    jacobian : {"fd", "analytic"}
        Forward differences (relative step 1e-6) or the implicit-function
        derivative.

    Raises
    ------
    ValidationError
        fewer than five points, or non-finite observations.
    """
    if isinstance(curves, Curve):
        curves = [curves]
    curves = list(curves)
    n_points = sum(len(c) for c in curves)
    if n_points < N_PARAMS:
        raise ValidationError(
            f"{n_points} points cannot determine {N_PARAMS} parameters")
    observed = np.concatenate([c.i for c in curves]) if curves else np.empty(0)
    if not np.all(np.isfinite(observed)):
        raise ValidationError("observations must be finite")
    if jacobian not in ("fd", "analytic"):
        raise ValidationError(f"unknown jacobian {jacobian!r}")

    theta = _theta(init)
    pred = _predict(theta, init, curves, g_ref, tol)
    resid = observed - pred
    cost = float(resid @ resid)
    costs = [cost]
    rel_step = np.zeros(N_PARAMS)
    lam = LAMBDA_INIT
    scale = np.zeros(N_PARAMS)

    def rms(c):
        return math.sqrt(c / n_points)

    iterations = 0
    converged = rms(cost) <= goal
    while not converged and iterations < max_iter:
        iterations += 1
        if jacobian == "fd":
            jac = _jacobian_fd(theta, pred, init, curves, g_ref, tol)
        else:
            jac = _jacobian_analytic(theta, pred, init, curves, g_ref)
        a = jac.T @ jac
        grad = jac.T @ resid
        # running maximum, as in MINPACK: a column that flattens out
        # (e.g. ln Rsh far above its true value) keeps its damping
        scale = np.maximum(scale, np.diag(a))
        diag = np.maximum(scale, 1e-12 * max(np.max(scale), 1e-300))
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                delta = np.linalg.solve(a + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            trial_cost = math.inf
            if _valid(trial):
                try:
                    trial_pred = _predict(trial, init, curves, g_ref, tol)
                    trial_resid = observed - trial_pred
                    trial_cost = float(trial_resid @ trial_resid)
                except (ValidationError, NumericalError, OverflowError):
                    trial_cost = math.inf
            if trial_cost < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # damping exhausted: no descent direction left at this precision
            converged = bool(np.max(np.abs(rel_step)) < 1e-12) or rms(cost) <= goal
            break
        rel_step = delta / np.maximum(np.abs(theta), 1e-300)
        theta, pred, resid, cost = trial, trial_pred, trial_resid, trial_cost
        costs.append(cost)
        lam = max(lam / 10.0, 1e-12)
        converged = rms(cost) <= goal or bool(np.max(np.abs(rel_step)) < 1e-12)

    return FitReport(_model(theta, init), rms(cost), iterations, bool(converged),
                     tuple(float(s) for s in rel_step), tuple(costs))
