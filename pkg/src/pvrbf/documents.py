"""JSON documents for circuit models, fit reports and surrogates.

Every document carries ``type`` and ``version``.  Circuit models::

    {"type": "five_param", "version": 1, "photocurrent": 5.0,
     "saturation_current": 5e-09, "ideality": 1.3, "series_resistance": 0.3,
     "shunt_resistance": 200.0, "n_series": 36, "temperature": 298.15,
     "g_ref": 1000.0}

``two_diode`` documents use ``i01``, ``i02``, ``eta1``, ``eta2`` in place
of ``saturation_current`` and ``ideality``.  ``g_ref`` (the irradiance at
which ``photocurrent`` applies) is optional and defaults to 1000 W/m2.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import rbf
from .circuit import FiveParamModel, ThermalContext, TwoDiodeModel
from .errors import DocumentError, ValidationError
from .extraction import FitReport

VERSION = 1
DEFAULT_G_REF = 1000.0

_FIVE = ("photocurrent", "saturation_current", "ideality", "series_resistance",
         "shunt_resistance")
_TWO = ("photocurrent", "i01", "i02", "series_resistance", "shunt_resistance",
        "eta1", "eta2")


def circuit_to_document(model, g_ref=DEFAULT_G_REF) -> dict:
    if isinstance(model, FiveParamModel):
        doc = {"type": "five_param", "version": VERSION}
        doc.update({k: getattr(model, k) for k in _FIVE})
    elif isinstance(model, TwoDiodeModel):
        doc = {"type": "two_diode", "version": VERSION}
        doc.update({k: getattr(model, k) for k in _TWO})
    else:
        raise TypeError(f"not a circuit model: {type(model).__name__}")
    doc["n_series"] = model.thermal.n_series
    doc["temperature"] = model.thermal.temperature
    doc["g_ref"] = g_ref
    return doc


def _num(doc, key):
    if key not in doc:
        raise DocumentError(key, "missing required field")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(key, f"expected a number, got {value!r}")
    return value


def circuit_from_document(doc: dict):
    """Return ``(model, g_ref)``."""
    kind = doc.get("type")
    if doc.get("version") != VERSION:
        raise DocumentError("version", f"unsupported version {doc.get('version')!r}")
    names = {"five_param": _FIVE, "two_diode": _TWO}.get(kind)
    if names is None:
        raise DocumentError("type", f"not a circuit model type: {kind!r}")
    values = {k: float(_num(doc, k)) for k in names}
    try:
        thermal = ThermalContext(int(_num(doc, "n_series")),
                                 float(_num(doc, "temperature")))
        cls = FiveParamModel if kind == "five_param" else TwoDiodeModel
        model = cls(**values, thermal=thermal)
    except ValidationError as exc:
        raise DocumentError(kind, str(exc)) from None
    g_ref = float(_num(doc, "g_ref")) if "g_ref" in doc else DEFAULT_G_REF
    if not g_ref > 0:
        raise DocumentError("g_ref", "must be > 0")
    return model, g_ref


def fit_report_to_document(report: FitReport, g_ref=DEFAULT_G_REF) -> dict:
    return {
        "type": "fit_report",
        "version": VERSION,
        "model": circuit_to_document(report.model, g_ref),
        "residual_norm": report.residual_norm,
        "iterations": report.iterations,
        "converged": report.converged,
        "relative_step": list(report.relative_step),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def read_document(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError("<document>", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict) or "type" not in doc:
        raise DocumentError("type", f"missing required field in {path}")
    return doc


def load_circuit(path):
    doc = read_document(path)
    if doc["type"] == "fit_report":
        doc = doc.get("model", {})
    return circuit_from_document(doc)


def load_surrogate(path) -> rbf.RbfSurrogate:
    return rbf.from_document(read_document(path))


def write_document(doc: dict, path):
    Path(path).write_text(dumps(doc), encoding="utf-8", newline="\n")
