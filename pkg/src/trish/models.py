"""Concrete finite-sum objectives: binary logistic regression and small MLPs.

Both expose per-component losses/gradients through the FiniteSumProblem
contract plus vectorized batch paths.  A central finite-difference oracle is
included for gradient verification.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .core import FiniteSumProblem, as_vector


def _rows(features, indices) -> np.ndarray:
    """Dense float64 rows of a (possibly sparse) feature matrix."""
    sub = features[np.asarray(indices, dtype=np.intp)]
    if sp.issparse(sub):
        return np.asarray(sub.todense(), dtype=np.float64)
    return np.array(sub, dtype=np.float64, copy=True)


class LogisticModel(FiniteSumProblem):
    """Binary logistic regression on +-1 labels.

    Component i has loss log(1 + exp(-y_i x.z_i)) and gradient
    -y_i z_i / (1 + exp(y_i x.z_i)), both computed overflow-safe.  Sparse
    feature rows are kept sparse and densified only inside per-component
    gradient evaluation.
    """

    def __init__(self, features, labels):
        labels = np.asarray(labels, dtype=np.float64)
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if features.shape[0] != labels.size:
            raise ValueError("feature rows and labels disagree in count")
        self.features = sp.csr_matrix(features) if sp.issparse(features) \
            else np.asarray(features, dtype=np.float64)
        self.labels = labels
        self.N = int(labels.size)
        self.n = int(features.shape[1])

    def _margins(self, x: np.ndarray, features=None) -> np.ndarray:
        X = self.features if features is None else features
        return np.asarray(X @ x).ravel()

    def component_loss(self, i: int, x: np.ndarray) -> float:
        return float(self.component_losses([i], x)[0])

    def component_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.component_gradients([i], x)[0]

    def component_gradients(self, indices, x: np.ndarray) -> np.ndarray:
        Z = _rows(self.features, indices)
        y = self.labels[np.asarray(indices, dtype=np.intp)]
        margins = y * (Z @ x)
        coef = -y * expit(-margins)
        Z *= coef[:, None]
        return Z

    def component_losses(self, indices, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        margins = self.labels[idx] * np.asarray(self.features[idx] @ x).ravel()
        return np.logaddexp(0.0, -margins)

    def loss(self, x: np.ndarray) -> float:
        margins = self.labels * self._margins(x)
        return float(np.mean(np.logaddexp(0.0, -margins)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        margins = self.labels * self._margins(x)
        coef = -self.labels * expit(-margins)
        return np.asarray(self.features.T @ coef).ravel() / self.N


_ACTIVATIONS = ("sigmoid", "linear")
_LOSSES = ("cross_entropy", "squared")
_CLAMP_EPS = 1e-12  # keeps cross-entropy logs finite at saturated outputs


class MlpModel(FiniteSumProblem):
    """Small feedforward network with a scalar output.

    layer_sizes runs from the input dimension to the output size (last entry
    must be 1); activations name one of {sigmoid, linear} per non-input
    layer.  Parameters pack layer by layer, weights (row-major) then biases.
    Gradients come from reverse-mode accumulation, vectorized over a batch.
    """

    def __init__(self, features, targets, layer_sizes, activations,
                 loss: str = "cross_entropy"):
        targets = np.asarray(targets, dtype=np.float64)
        if features.shape[0] != targets.size:
            raise ValueError("feature rows and targets disagree in count")
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or layer_sizes[-1] != 1:
            raise ValueError("layer_sizes must end with an output layer of size 1")
        if features.shape[1] != layer_sizes[0]:
            raise ValueError("input layer size must match the feature dimension")
        if len(activations) != len(layer_sizes) - 1:
            raise ValueError("need one activation per non-input layer")
        for a in activations:
            if a not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        if loss not in _LOSSES:
            raise ValueError(f"unknown loss {loss!r}")
        if loss == "cross_entropy" and targets.size and \
                (targets.min() < 0.0 or targets.max() > 1.0):
            raise ValueError("cross-entropy targets must lie in [0, 1]")

        self.features = features
        self.targets = targets
        self.layer_sizes = layer_sizes
        self.activations = tuple(activations)
        self.loss_kind = loss
        self.N = int(targets.size)
        self.n = sum(o * (i + 1) for i, o in zip(layer_sizes[:-1], layer_sizes[1:]))
        # Slices into the flat parameter vector, per layer: (W slice, b slice).
        self._slices = []
        pos = 0
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            w = slice(pos, pos + fan_out * fan_in)
            b = slice(w.stop, w.stop + fan_out)
            self._slices.append((w, b, fan_out, fan_in))
            pos = b.stop

    @classmethod
    def classifier(cls, features, labels, hidden: int = 5) -> "MlpModel":
        """One sigmoid hidden layer, sigmoid output, cross-entropy loss."""
        return cls(features, labels, [features.shape[1], hidden, 1],
                   ("sigmoid", "sigmoid"), loss="cross_entropy")

    @classmethod
    def regressor(cls, features, targets, hidden=(7, 5),
                  loss: str = "cross_entropy") -> "MlpModel":
        """Linear hidden layers, sigmoid output; targets expected in [0, 1]."""
        sizes = [features.shape[1], *hidden, 1]
        acts = ("linear",) * len(hidden) + ("sigmoid",)
        return cls(features, targets, sizes, acts, loss=loss)

    def unpack(self, x: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        x = as_vector(x)
        if x.size != self.n:
            raise ValueError(f"parameter vector has length {x.size}, expected {self.n}")
        return [(x[w].reshape(fan_out, fan_in), x[b])
                for w, b, fan_out, fan_in in self._slices]

    def _forward(self, Z: np.ndarray, layers):
        """Activations per layer for a batch; returns list incl. the input."""
        acts = [Z]
        a = Z
        for (W, b), kind in zip(layers, self.activations):
            pre = a @ W.T + b
            a = expit(pre) if kind == "sigmoid" else pre
            acts.append(a)
        return acts

    def predict(self, features, x: np.ndarray) -> np.ndarray:
        """Network outputs h in (0,1] or R for every feature row."""
        Z = _rows(features, np.arange(features.shape[0]))
        return self._forward(Z, self.unpack(x))[-1].ravel()

    def _losses_from_h(self, h: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.loss_kind == "squared":
            return (y - h) ** 2
        hc = np.clip(h, _CLAMP_EPS, 1.0 - _CLAMP_EPS)
        return -(y * np.log(hc) + (1.0 - y) * np.log1p(-hc))

    def component_loss(self, i: int, x: np.ndarray) -> float:
        return float(self.component_losses([i], x)[0])

    def component_losses(self, indices, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        Z = _rows(self.features, idx)
        h = self._forward(Z, self.unpack(x))[-1].ravel()
        return self._losses_from_h(h, self.targets[idx])

    def component_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.component_gradients([i], x)[0]

    def _backward_deltas(self, acts, layers, y):
        """Output-layer delta seeded from dL/dh, chained through activations."""
        h = acts[-1].ravel()
        if self.loss_kind == "squared":
            dh = -2.0 * (y - h)
        else:
            hc = np.clip(h, _CLAMP_EPS, 1.0 - _CLAMP_EPS)
            dh = -y / hc + (1.0 - y) / (1.0 - hc)
        deltas = [None] * len(layers)
        grad_out = dh[:, None]
        for l in range(len(layers) - 1, -1, -1):
            a = acts[l + 1]
            if self.activations[l] == "sigmoid":
                grad_out = grad_out * a * (1.0 - a)
            deltas[l] = grad_out
            if l > 0:
                grad_out = deltas[l] @ layers[l][0]
        return deltas

    def component_gradients(self, indices, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        Z = _rows(self.features, idx)
        y = self.targets[idx]
        layers = self.unpack(x)
        acts = self._forward(Z, layers)
        deltas = self._backward_deltas(acts, layers, y)
        m = Z.shape[0]
        out = np.empty((m, self.n))
        for (w, b, fan_out, fan_in), delta, a_prev in zip(self._slices, deltas, acts):
            out[:, w] = np.einsum("mo,mi->moi", delta, a_prev).reshape(m, -1)
            out[:, b] = delta
        return out

    def loss(self, x: np.ndarray) -> float:
        return float(np.mean(self.component_losses(np.arange(self.N), x)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Full gradient via batch-summed backprop (no per-sample outer products)."""
        Z = _rows(self.features, np.arange(self.N))
        layers = self.unpack(x)
        acts = self._forward(Z, layers)
        deltas = self._backward_deltas(acts, layers, self.targets)
        out = np.empty(self.n)
        for (w, b, _, _), delta, a_prev in zip(self._slices, deltas, acts):
            out[w] = (delta.T @ a_prev).ravel()
            out[b] = delta.sum(axis=0)
        return out / self.N


def finite_difference_gradient(problem: FiniteSumProblem, i: int, x,
                               h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of component i, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = as_vector(x).copy()
    grad = np.empty(x.size)
    for j in range(x.size):
        old = x[j]
        x[j] = old + h
        up = problem.component_loss(i, x)
        x[j] = old - h
        down = problem.component_loss(i, x)
        x[j] = old
        grad[j] = (up - down) / (2.0 * h)
    return grad


def default_x0(problem: FiniteSumProblem, rng: np.random.Generator) -> np.ndarray:
    """Run starting point: zeros for logistic, uniform [-0.5, 0.5] for MLPs."""
    if isinstance(problem, MlpModel):
        return rng.uniform(-0.5, 0.5, size=problem.n)
    return np.zeros(problem.n)


def testing_accuracy(model: FiniteSumProblem, x, features, labels) -> float:
    """Fraction of the held-out set classified correctly.

    Logistic predicts sign(features . x) with ties counted as +1; an MLP
    classifier predicts 1 iff its output is >= 0.5.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size == 0:
        raise ValueError("empty test set")
    if isinstance(model, LogisticModel):
        margins = np.asarray(features @ as_vector(x)).ravel()
        pred = np.where(margins >= 0.0, 1.0, -1.0)
    elif isinstance(model, MlpModel):
        pred = (model.predict(features, x) >= 0.5).astype(np.float64)
    else:
        raise TypeError(f"no accuracy rule for {type(model).__name__}")
    return float(np.mean(pred == labels))


def testing_loss(model: MlpModel, x, features, targets) -> float:
    """Mean squared prediction error over the held-out set."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise ValueError("empty test set")
    if not isinstance(model, MlpModel):
        raise TypeError(f"no testing loss rule for {type(model).__name__}")
    h = model.predict(features, x)
    return float(np.mean((targets - h) ** 2))
