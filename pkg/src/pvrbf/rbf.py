"""Radial basis function surrogates of the I-V and P-V surfaces.

A surrogate maps an input point ``(v, g[, t])`` to current or power as a
bias plus a weighted sum of Gaussian neurons sharing one spread ``sigma``.
Inputs and centroids are mapped through a per-dimension affine scaling
``(x - offset) / scale`` before the kernel is applied; centroids are stored
in raw units (volt, W/m2, kelvin).

Two kernels are available.  ``sum_of_squares`` is the usual isotropic
Gaussian ``exp(-|z - c|^2 / sigma^2)``.  ``product_of_squares`` evaluates
``exp(-prod_k (z_k - c_k)^2 / sigma^2)``, the form used by the published
16-neuron networks; it equals 1 along every line where one coordinate
matches its centroid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import DocumentError, ValidationError

DOCUMENT_VERSION = 1


class KernelMode(str, Enum):
    SUM_OF_SQUARES = "sum_of_squares"
    PRODUCT_OF_SQUARES = "product_of_squares"


class OutputKind(str, Enum):
    CURRENT = "current"
    POWER = "power"


@dataclass(frozen=True)
class RbfNeuron:
    weight: float
    centroid_v: float
    centroid_g: float
    centroid_t: float | None = None

    def __post_init__(self):
        values = [self.weight, self.centroid_v, self.centroid_g]
        if self.centroid_t is not None:
            values.append(self.centroid_t)
        if not all(math.isfinite(x) for x in values):
            raise ValidationError("neuron fields must be finite")
        if not 0.0 <= self.centroid_g <= 2000.0:
            raise ValidationError(
                f"centroid_g {self.centroid_g!r} outside [0, 2000] W/m2")
        if not -5.0 <= self.centroid_v <= 100.0:
            raise ValidationError(
                f"centroid_v {self.centroid_v!r} outside [-5, 100] V")

    @property
    def centroid(self):
        if self.centroid_t is None:
            return (self.centroid_v, self.centroid_g)
        return (self.centroid_v, self.centroid_g, self.centroid_t)


@dataclass(frozen=True)
class InputScaling:
    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.offset) and math.isfinite(self.scale)):
            raise ValidationError("scaling fields must be finite")
        if not self.scale > 0:
            raise ValidationError(f"scale must be > 0, got {self.scale!r}")


@dataclass(frozen=True)
class InputPoint:
    voltage: float
    irradiance: float
    temperature: float | None = None

    def __post_init__(self):
        if not self.irradiance >= 0:
            raise ValidationError("irradiance must be >= 0")


IDENTITY_2D = (InputScaling(), InputScaling())


@dataclass(frozen=True)
class RbfSurrogate:
    """Gaussian RBF network with shared spread and a linear output."""

    neurons: tuple
    sigma: float
    kernel_mode: KernelMode = KernelMode.SUM_OF_SQUARES
    scaling: tuple = IDENTITY_2D
    output_kind: OutputKind = OutputKind.CURRENT
    output_bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        object.__setattr__(self, "scaling", tuple(self.scaling))
        object.__setattr__(self, "kernel_mode", KernelMode(self.kernel_mode))
        object.__setattr__(self, "output_kind", OutputKind(self.output_kind))
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"sigma must be > 0, got {self.sigma!r}")
        if not math.isfinite(self.output_bias):
            raise ValidationError("output_bias must be finite")
        if len(self.scaling) not in (2, 3):
            raise ValidationError("scaling must have 2 or 3 entries")
        has_t = {n.centroid_t is not None for n in self.neurons}
        if len(has_t) > 1:
            raise ValidationError("neurons mix 2-input and 3-input centroids")
        if has_t and has_t.pop() != (len(self.scaling) == 3):
            raise ValidationError("centroid dimension does not match scaling")

    @property
    def n_inputs(self):
        return len(self.scaling)

    @cached_property
    def weights(self):
        return np.array([n.weight for n in self.neurons], dtype=float)

    @cached_property
    def centroids(self):
        """Raw-unit centroids, shape (L, n_inputs)."""
        return np.array([n.centroid for n in self.neurons],
                        dtype=float).reshape(len(self.neurons), self.n_inputs)

    @cached_property
    def _offset_scale(self):
        off = np.array([s.offset for s in self.scaling])
        sc = np.array([s.scale for s in self.scaling])
        return off, sc

    def scale_inputs(self, x):
        off, sc = self._offset_scale
        return (np.asarray(x, dtype=float) - off) / sc

    def activations(self, v, g, t=None):
        """Design matrix of neuron activations, shape (N, L)."""
        x = _stack_inputs(v, g, t, self.n_inputs)
        return _kernel(self.scale_inputs(x), self.scale_inputs(self.centroids),
                       self.sigma, self.kernel_mode)


def _stack_inputs(v, g, t, n_inputs):
    cols = [np.atleast_1d(np.asarray(v, dtype=float)),
            np.atleast_1d(np.asarray(g, dtype=float))]
    if n_inputs == 3:
        if t is None:
            raise ValidationError("3-input surrogate needs a temperature")
        cols.append(np.atleast_1d(np.asarray(t, dtype=float)))
    cols = np.broadcast_arrays(*cols)
    return np.stack(cols, axis=-1)


def _kernel(z, cz, sigma, mode):
    diff2 = (z[:, None, :] - cz[None, :, :]) ** 2
    if mode is KernelMode.SUM_OF_SQUARES:
        d = diff2.sum(axis=-1)
    else:
        d = diff2.prod(axis=-1)
    return np.exp(-d / sigma**2)


def gaussian_activation(x: InputPoint, neuron: RbfNeuron, sigma: float,
                        mode: KernelMode = KernelMode.SUM_OF_SQUARES,
                        scaling=IDENTITY_2D) -> float:
    """Activation of a single neuron at ``x``; lies in (0, 1]."""
    mode = KernelMode(mode)
    coords = [x.voltage, x.irradiance]
    if len(scaling) == 3:
        coords.append(x.temperature)
    terms = []
    for xi, ci, s in zip(coords, neuron.centroid, scaling):
        terms.append(((xi - s.offset) / s.scale - (ci - s.offset) / s.scale) ** 2)
    d = math.fsum(terms) if mode is KernelMode.SUM_OF_SQUARES else math.prod(terms)
    return math.exp(-d / sigma**2)


def compensated_rowsum(terms: np.ndarray) -> np.ndarray:
    """Neumaier-compensated sum along axis 1, in column order."""
    terms = np.atleast_2d(terms)
    s = np.zeros(terms.shape[0])
    comp = np.zeros(terms.shape[0])
    for j in range(terms.shape[1]):
        x = terms[:, j]
        t = s + x
        comp += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return s + comp


def evaluate_many(surrogate: RbfSurrogate, v, g, t=None) -> np.ndarray:
    """Surrogate output at many points (current in A or power in W)."""
    if not surrogate.neurons:
        raise ValidationError("cannot evaluate an empty network")
    phi = surrogate.activations(v, g, t)
    terms = np.empty((phi.shape[0], phi.shape[1] + 1))
    terms[:, 0] = surrogate.output_bias
    terms[:, 1:] = phi * surrogate.weights
    return compensated_rowsum(terms)


def evaluate(surrogate: RbfSurrogate, x: InputPoint) -> float:
    return float(evaluate_many(surrogate, x.voltage, x.irradiance,
                               x.temperature)[0])


# -- published 16-neuron networks ---------------------------------------------

# (w, c_v, c_g) per row for the current network, then the power network.
_TABLE1_CURRENT = (
    (5.46, 12.56, 200.0),
    (3.40, 7.54, 1000.0),
    (1.60, 22.50, 200.0),
    (5.84, 11.25, 600.0),
    (0.17, 18.75, 600.0),
    (3.53, 27.52, 1000.0),
    (-1.03, 17.56, 200.0),
    (0.71, 18.75, 200.0),
    (2.65, 7.50, 1000.0),
    (2.01, 2.52, 200.0),
    (1.48, 26.25, 600.0),
    (1.20, 26.25, 1000.0),
    (-629.95, 3.75, 200.0),
    (629.51, 3.75, 600.0),
    (-7.39, 11.25, 200.0),
    (8.96, 22.55, 200.0),
)

_TABLE1_POWER = (
    (-508.62, 13.05, 200.0),
    (234.13, 18.74, 1000.0),
    (80.66, 20.58, 200.0),
    (11.30, 18.76, 600.0),
    (-13291.85, 26.25, 600.0),
    (32.03, 11.24, 1000.0),
    (-30.05, 9.31, 200.0),
    (-323980.43, 28.12, 200.0),
    (324721.68, 26.25, 1000.0),
    (-391.01, 16.81, 200.0),
    (-4.21, 11.27, 600.0),
    (-1241.57, 3.75, 1000.0),
    (1397.96, 24.35, 200.0),
    (20.57, 3.76, 600.0),
    (13018.81, 1.86, 200.0),
    (30.81, 5.58, 200.0),
)


def _preset(rows, sigma, kind):
    if not sigma > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma!r}")
    neurons = tuple(RbfNeuron(w, cv, cg) for w, cv, cg in rows)
    return RbfSurrogate(neurons, sigma, KernelMode.PRODUCT_OF_SQUARES,
                        IDENTITY_2D, kind)


def table1_current_network(sigma: float) -> RbfSurrogate:
    """The published 16-neuron current network.

    The spread was never published, so ``sigma`` has no default.
    """
    return _preset(_TABLE1_CURRENT, sigma, OutputKind.CURRENT)


def table1_power_network(sigma: float) -> RbfSurrogate:
    return _preset(_TABLE1_POWER, sigma, OutputKind.POWER)


# -- documents ----------------------------------------------------------------

def to_document(surrogate: RbfSurrogate) -> dict:
    neurons = []
    for n in surrogate.neurons:
        item = {"w": n.weight, "c_v": n.centroid_v, "c_g": n.centroid_g}
        if n.centroid_t is not None:
            item["c_t"] = n.centroid_t
        neurons.append(item)
    return {
        "type": "rbf",
        "version": DOCUMENT_VERSION,
        "output_kind": surrogate.output_kind.value,
        "kernel_mode": surrogate.kernel_mode.value,
        "sigma": surrogate.sigma,
        "output_bias": surrogate.output_bias,
        "scaling": [{"offset": s.offset, "scale": s.scale}
                    for s in surrogate.scaling],
        "neurons": neurons,
    }


def _require(doc, key, where=""):
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError(where + key, "missing required field")
    return doc[key]


def _number(doc, key, where=""):
    value = _require(doc, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(where + key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise DocumentError(where + key, "must be finite")
    return float(value)


def from_document(doc: dict) -> RbfSurrogate:
    kind = _require(doc, "type")
    if kind != "rbf":
        raise DocumentError("type", f"expected 'rbf', got {kind!r}")
    version = _require(doc, "version")
    if version != DOCUMENT_VERSION:
        raise DocumentError("version", f"unsupported version {version!r}")
    try:
        output_kind = OutputKind(_require(doc, "output_kind"))
    except ValueError as exc:
        raise DocumentError("output_kind", str(exc)) from None
    try:
        mode = KernelMode(_require(doc, "kernel_mode"))
    except ValueError as exc:
        raise DocumentError("kernel_mode", str(exc)) from None
    sigma = _number(doc, "sigma")
    if not sigma > 0:
        raise DocumentError("sigma", f"must be > 0, got {sigma!r}")
    bias = _number(doc, "output_bias") if "output_bias" in doc else 0.0

    raw_scaling = _require(doc, "scaling")
    if not isinstance(raw_scaling, list):
        raise DocumentError("scaling", "expected a list")
    scaling = []
    for k, item in enumerate(raw_scaling):
        where = f"scaling[{k}]."
        offset, scale = _number(item, "offset", where), _number(item, "scale", where)
        if not scale > 0:
            raise DocumentError(where + "scale", "must be > 0")
        scaling.append(InputScaling(offset, scale))

    raw_neurons = _require(doc, "neurons")
    if not isinstance(raw_neurons, list):
        raise DocumentError("neurons", "expected a list")
    neurons = []
    for k, item in enumerate(raw_neurons):
        where = f"neurons[{k}]."
        c_t = _number(item, "c_t", where) if "c_t" in item else None
        w, c_v, c_g = (_number(item, k, where) for k in ("w", "c_v", "c_g"))
        try:
            neurons.append(RbfNeuron(w, c_v, c_g, c_t))
        except ValidationError as exc:
            raise DocumentError(where.rstrip("."), str(exc)) from None
    try:
        return RbfSurrogate(tuple(neurons), sigma, mode, tuple(scaling),
                            output_kind, bias)
    except ValidationError as exc:
        raise DocumentError("neurons", str(exc)) from None


def dumps(surrogate: RbfSurrogate) -> str:
    return json.dumps(to_document(surrogate), indent=2) + "\n"


def loads(text: str) -> RbfSurrogate:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError("<document>", f"invalid JSON: {exc}") from None
    return from_document(doc)
