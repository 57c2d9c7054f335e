"""Regularized extreme learning machine and its residual-corrected variant.

A single hidden layer with fixed input weights ``W`` (L x n) and thresholds
``b`` (L,) maps inputs to ``H = e(X W^T + b)``; output weights solve the
ridge problem ``min 1/2 |beta|^2 + C/2 |H beta - T|^2`` in closed form.
The residual model (RELM) fits a second ELM to the training residuals of
the first and sums both outputs.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .exceptions import NumericalError, ValidationError

FORMAT_VERSION = 1


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


ACTIVATIONS = {"sigmoid": _sigmoid, "tanh": np.tanh, "sine": np.sin}


@dataclass(frozen=True)
class ElmParams:
    W: np.ndarray
    b: np.ndarray
    C: float = 100.0
    activation: str = "sigmoid"

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        if W.shape[0] < 1 or W.shape[0] != b.shape[0]:
            raise ValidationError(f"W has {W.shape[0]} rows but b has {b.shape[0]} entries")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValidationError("hidden weights must be finite")
        if not self.C > 0:
            raise ValidationError(f"C must be positive, got {self.C}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")

    @property
    def n_hidden(self):
        return self.W.shape[0]

    @property
    def n_inputs(self):
        return self.W.shape[1]

    @classmethod
    def random(cls, n_hidden, n_inputs, rng, C=100.0, activation="sigmoid", scale=1.0):
        """Weights and thresholds drawn uniformly from [-scale, scale]."""
        W = rng.uniform(-scale, scale, size=(n_hidden, n_inputs))
        b = rng.uniform(-scale, scale, size=n_hidden)
        return cls(W, b, C, activation)


def hidden_matrix(params, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.n_inputs:
        raise ValidationError(f"X has {X.shape[1]} columns, model expects {params.n_inputs}")
    return ACTIVATIONS[params.activation](X @ params.W.T + params.b)


def solve_beta(H, T, C, form="auto"):
    """Ridge output weights.

    ``form="auto"`` solves the L x L primal system when N >= L and the
    N x N dual system otherwise; ``"primal"`` or ``"dual"`` forces one.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    T = np.asarray(T, dtype=float)
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(T))):
        raise ValidationError("H and T must be finite")
    N, L = H.shape
    if T.shape[0] != N:
        raise ValidationError(f"T has {T.shape[0]} rows, H has {N}")
    if form not in ("auto", "primal", "dual"):
        raise ValidationError(f"unknown form {form!r}")
    primal = N >= L if form == "auto" else form == "primal"
    with np.errstate(over="ignore", invalid="ignore"):
        A = H.T @ H if primal else H @ H.T
    rhs = H.T @ T if primal else T
    A[np.diag_indices_from(A)] += 1.0 / C
    if not np.all(np.isfinite(A)):
        raise NumericalError("ridge system overflowed; rescale the hidden layer inputs")
    try:
        factor = linalg.cho_factor(A, check_finite=False)
        sol = linalg.cho_solve(factor, rhs, check_finite=False)
    except linalg.LinAlgError:
        cond = np.linalg.cond(A)
        raise NumericalError(f"ridge system is numerically singular (condition ~ {cond:.3e})") from None
    if not np.all(np.isfinite(sol)):
        raise NumericalError("ridge solve produced non-finite weights")
    return sol if primal else H.T @ sol


@dataclass(frozen=True)
class ElmModel:
    params: ElmParams
    beta: np.ndarray

    def predict(self, X):
        return hidden_matrix(self.params, X) @ self.beta

    def to_dict(self):
        p = self.params
        return {
            "n_hidden": p.n_hidden,
            "n_inputs": p.n_inputs,
            "n_outputs": 1 if self.beta.ndim == 1 else self.beta.shape[1],
            "activation": p.activation,
            "C": p.C,
            "W": p.W.ravel().tolist(),
            "b": p.b.tolist(),
            "beta": np.asarray(self.beta).ravel().tolist(),
            "beta_ndim": int(self.beta.ndim),
        }

    @classmethod
    def from_dict(cls, d):
        W = np.array(d["W"], dtype=float).reshape(d["n_hidden"], d["n_inputs"])
        params = ElmParams(W, np.array(d["b"], dtype=float), d["C"], d["activation"])
        beta = np.array(d["beta"], dtype=float)
        if d.get("beta_ndim", 1) == 2:
            beta = beta.reshape(d["n_hidden"], d["n_outputs"])
        return cls(params, beta)


def train_elm(params, X, T):
    return ElmModel(params, solve_beta(hidden_matrix(params, X), T, params.C))


@dataclass(frozen=True)
class RelmModel:
    original: ElmModel
    corrector: ElmModel = None

    def predict(self, X):
        out = self.original.predict(X)
        if self.corrector is not None:
            out = out + self.corrector.predict(X)
        return out

    def to_json(self, path=None):
        doc = {
            "version": FORMAT_VERSION,
            "kind": "relm",
            "original": self.original.to_dict(),
            "corrector": None if self.corrector is None else self.corrector.to_dict(),
        }
        text = json.dumps(doc) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {doc.get('version')}")
        corr = doc["corrector"]
        return cls(ElmModel.from_dict(doc["original"]), None if corr is None else ElmModel.from_dict(corr))


def train_relm(o_params, r_params, X, T):
    """Fit the original ELM, then a corrector on its training residuals.

    Passing ``r_params=None`` disables the corrector.
    """
    original = train_elm(o_params, X, T)
    if r_params is None:
        return RelmModel(original, None)
    residual = np.asarray(T, dtype=float) - original.predict(X)
    return RelmModel(original, train_elm(r_params, X, residual))


def predict(model, X):
    return model.predict(X)


def ridge_objective(beta, H, T, C):
    r = H @ beta - T
    return 0.5 * float(np.sum(beta * beta)) + 0.5 * C * float(np.sum(r * r))
