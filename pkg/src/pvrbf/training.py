"""Training of RBF surrogates.

:func:`build_greedy` grows a network one neuron at a time: the training
sample with the largest absolute residual becomes the next centroid and
all output weights (plus the bias) are re-solved by ridge-regularized
least squares.  :func:`fine_tune` then refines centroids and the shared
spread by guarded gradient descent, re-solving the linear output layer at
every trial point, so the loss never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .rbf import (InputScaling, KernelMode, OutputKind, RbfNeuron, RbfSurrogate,
                  evaluate_many)

RIDGE = 1e-10
_LR_GROWTH = 1.2


@dataclass(frozen=True)
class TrainConfig:
    max_neurons: int = 16
    mse_goal: float = 0.02
    sigma_init: float = 0.1
    fine_tune_epochs: int = 1000
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.max_neurons < 1:
            raise ValidationError("max_neurons must be >= 1")
        if not 0 < self.mse_goal < 1:
            raise ValidationError("mse_goal must lie in (0, 1)")
        if not self.sigma_init > 0:
            raise ValidationError("sigma_init must be > 0")
        if self.fine_tune_epochs < 0:
            raise ValidationError("fine_tune_epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")


def relative_mse(surrogate: RbfSurrogate, data: Dataset) -> float:
    """``sum((yhat - y)**2) / sum(y**2)`` over the dataset."""
    if len(data) == 0:
        raise ValidationError("relative MSE of an empty dataset is undefined")
    y = data.target
    denom = float(np.dot(y, y))
    if denom == 0:
        raise ValidationError("all targets are zero; relative MSE undefined")
    t = data.temperature if surrogate.n_inputs == 3 else None
    err = evaluate_many(surrogate, data.voltage, data.irradiance, t) - y
    return float(np.dot(err, err)) / denom


def _inputs(data: Dataset):
    cols = [data.voltage, data.irradiance]
    if data.has_temperature and np.ptp(data.temperature) > 0:
        cols.append(data.temperature)
    return np.column_stack(cols)


def minmax_scaling(x: np.ndarray):
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return tuple(InputScaling(float(a), float(b)) for a, b in zip(lo, span))


def _check_training_data(data):
    if len(data) == 0:
        raise ValidationError("training needs a non-empty dataset")
    if not np.all(np.isfinite(data.target)):
        raise ValidationError("training targets must be finite")


def _solve_output(phi, y):
    """Bias and weights minimizing ``|[1 phi] w - y|^2 + RIDGE |w|^2``."""
    a = np.empty((phi.shape[0], phi.shape[1] + 1))
    a[:, 0] = 1.0
    a[:, 1:] = phi
    try:
        w = np.linalg.solve(a.T @ a + RIDGE * np.eye(a.shape[1]), a.T @ y)
        if not np.all(np.isfinite(w)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(a, y, rcond=None)[0]
    return w[0], w[1:]


def _kernel_parts(z, cz, sigma, mode):
    d = z[:, None, :] - cz[None, :, :]
    sq = d**2
    dist = sq.sum(axis=-1) if mode is KernelMode.SUM_OF_SQUARES else sq.prod(axis=-1)
    return np.exp(-dist / sigma**2), d, sq, dist


def _to_surrogate(bias, weights, cz, sigma, scaling, mode, kind):
    off = np.array([s.offset for s in scaling])
    sc = np.array([s.scale for s in scaling])
    raw = cz * sc + off
    neurons = tuple(RbfNeuron(float(w), *(float(x) for x in c))
                    for w, c in zip(weights, raw))
    return RbfSurrogate(neurons, float(sigma), mode, scaling, kind, float(bias))


def _scaled_centroids(surrogate):
    return surrogate.scale_inputs(surrogate.centroids)


def build_greedy(data: Dataset, cfg: TrainConfig = TrainConfig(),
                 kernel_mode=KernelMode.SUM_OF_SQUARES, history=None) -> RbfSurrogate:
    """Grow a network neuron by neuron until ``cfg.mse_goal`` or ``cfg.max_neurons``.

    If ``history`` is a list, the training relative MSE after each added
    neuron is appended to it.
    """
    _check_training_data(data)
    kernel_mode = KernelMode(kernel_mode)
    x = _inputs(data)
    scaling = minmax_scaling(x)
    z = (x - np.array([s.offset for s in scaling])) / np.array([s.scale for s in scaling])
    y = data.target
    denom = float(np.dot(y, y))
    kind = OutputKind(data.kind.value)

    chosen = []
    columns = np.empty((len(y), 0))
    bias, weights = float(np.mean(y)), np.empty(0)
    resid = y - bias
    err = float(np.dot(resid, resid))
    while len(chosen) < cfg.max_neurons:
        order = np.argsort(-np.abs(resid), kind="stable")
        j = next((int(k) for k in order if int(k) not in chosen), None)
        if j is None:
            break
        chosen.append(j)
        phi_j = _kernel_parts(z, z[j:j + 1], cfg.sigma_init, kernel_mode)[0]
        columns = np.hstack([columns, phi_j])
        new_bias, new_weights = _solve_output(columns, y)
        new_resid = y - new_bias - columns @ new_weights
        new_err = float(np.dot(new_resid, new_resid))
        if new_err <= err:
            bias, weights, resid, err = new_bias, new_weights, new_resid, new_err
        else:
            weights = np.append(weights, 0.0)
        rel = err / denom if denom > 0 else 0.0
        if history is not None:
            history.append(rel)
        if rel <= cfg.mse_goal:
            break
    return _to_surrogate(bias, weights, z[chosen], cfg.sigma_init, scaling,
                         kernel_mode, kind)


# -- gradients ----------------------------------------------------------------

def pack(surrogate: RbfSurrogate) -> np.ndarray:
    """Flat parameters ``[bias, w_1..w_L, scaled centroids (row-major), sigma]``."""
    return np.concatenate([[surrogate.output_bias], surrogate.weights,
                           _scaled_centroids(surrogate).ravel(), [surrogate.sigma]])


def unpack(theta, template: RbfSurrogate) -> RbfSurrogate:
    n, d = len(template.neurons), template.n_inputs
    theta = np.asarray(theta, dtype=float)
    cz = theta[1 + n:1 + n + n * d].reshape(n, d)
    return _to_surrogate(theta[0], theta[1:1 + n], cz, theta[-1], template.scaling,
                         template.kernel_mode, template.output_kind)


def _loss_grad_theta(theta, n, z, y, denom, mode):
    d_in = z.shape[1]
    bias, w = theta[0], theta[1:1 + n]
    cz = theta[1 + n:1 + n + n * d_in].reshape(n, d_in)
    sigma = theta[-1]
    phi, diff, sq, dist = _kernel_parts(z, cz, sigma, mode)
    e = bias + phi @ w - y
    loss = float(np.dot(e, e)) / denom
    a = (2.0 / denom) * e[:, None] * phi * w  # dL/d(activation_j) * phi_j
    if mode is KernelMode.SUM_OF_SQUARES:
        ddist_dc = -2.0 * diff
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            others = np.where(sq > 0, dist[:, :, None] / sq, 0.0)
        # product over the other coordinates, exact when a factor is zero
        for k in range(d_in):
            zero = sq[:, :, k] == 0
            if zero.any():
                rest = np.prod(np.delete(sq, k, axis=-1), axis=-1)
                others[:, :, k] = np.where(zero, rest, others[:, :, k])
        ddist_dc = -2.0 * diff * others
    grad = np.empty_like(theta)
    grad[0] = (2.0 / denom) * e.sum()
    grad[1:1 + n] = (2.0 / denom) * (phi.T @ e)
    grad[1 + n:1 + n + n * d_in] = (
        (a[:, :, None] * (-ddist_dc / sigma**2)).sum(axis=0).ravel())
    grad[-1] = float((a * (2.0 * dist / sigma**3)).sum())
    return loss, grad


def _training_arrays(surrogate, data):
    cols = [data.voltage, data.irradiance]
    if surrogate.n_inputs == 3:
        cols.append(data.temperature)
    z = surrogate.scale_inputs(np.column_stack(cols))
    y = data.target
    denom = float(np.dot(y, y))
    if denom == 0:
        raise ValidationError("all targets are zero; relative MSE undefined")
    return z, y, denom


def loss_and_gradient(surrogate: RbfSurrogate, data: Dataset):
    """Relative MSE and its gradient with respect to :func:`pack` parameters."""
    z, y, denom = _training_arrays(surrogate, data)
    return _loss_grad_theta(pack(surrogate), len(surrogate.neurons), z, y, denom,
                            surrogate.kernel_mode)


def loss_at(theta, surrogate: RbfSurrogate, data: Dataset) -> float:
    """Relative MSE at flat parameters ``theta`` (scaled space, no validation)."""
    z, y, denom = _training_arrays(surrogate, data)
    return _loss_grad_theta(np.asarray(theta, dtype=float), len(surrogate.neurons),
                            z, y, denom, surrogate.kernel_mode)[0]


def fine_tune(surrogate: RbfSurrogate, data: Dataset,
              cfg: TrainConfig = TrainConfig(), history=None) -> RbfSurrogate:
    """Guarded gradient descent on centroids and spread.

    At each trial point the output weights and bias are re-solved by least
    squares, so the step direction is the gradient of the error with the
    linear layer eliminated.  A step is accepted only if the training
    relative MSE does not increase; rejected steps halve the learning
    rate, accepted ones grow it by 20%.  The result never has a larger
    training error than the input.
    """
    _check_training_data(data)
    if cfg.fine_tune_epochs == 0:
        return surrogate
    z, y, denom = _training_arrays(surrogate, data)
    mode = surrogate.kernel_mode
    n, d_in = len(surrogate.neurons), surrogate.n_inputs
    sl = slice(1 + n, 1 + n + n * d_in)
    lo = surrogate.scale_inputs(np.array([[-5.0, 0.0, -np.inf][:d_in]]))[0]
    hi = surrogate.scale_inputs(np.array([[100.0, 2000.0, np.inf][:d_in]]))[0]

    def evaluate_point(cz, sigma):
        phi = _kernel_parts(z, cz, sigma, mode)[0]
        bias, w = _solve_output(phi, y)
        theta = np.concatenate([[bias], w, cz.ravel(), [sigma]])
        loss, grad = _loss_grad_theta(theta, n, z, y, denom, mode)
        return theta, loss, grad

    start = pack(surrogate)
    start_loss, start_grad = _loss_grad_theta(start, n, z, y, denom, mode)
    theta, loss, grad = evaluate_point(start[sl].reshape(n, d_in), start[-1])
    if not loss <= start_loss:
        theta, loss, grad = start, start_loss, start_grad
    lr = cfg.learning_rate
    for _ in range(cfg.fine_tune_epochs):
        cz = theta[sl].reshape(n, d_in) - lr * grad[sl].reshape(n, d_in)
        sigma = theta[-1] - lr * grad[-1]
        ok = sigma > 0 and np.all((cz >= lo) & (cz <= hi))
        if ok:
            cand, cand_loss, cand_grad = evaluate_point(cz, sigma)
            ok = math.isfinite(cand_loss) and cand_loss <= loss
        if ok:
            theta, loss, grad = cand, cand_loss, cand_grad
            lr *= _LR_GROWTH
        else:
            lr *= 0.5
        if history is not None:
            history.append(loss)
    if theta is start:
        return surrogate
    return unpack(theta, surrogate)


def train(data: Dataset, cfg: TrainConfig = TrainConfig(), history=None) -> RbfSurrogate:
    """:func:`build_greedy` followed by :func:`fine_tune`."""
    net = build_greedy(data, cfg, history=history)
    return fine_tune(net, data, cfg)
