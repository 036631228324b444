"""Scalar fuzzy kernels: Gaussian membership functions and the softmax
smooth maximum used to aggregate instance-level values into bag-level ones.

softmax(x; alpha) = sum_i x_i e^(alpha x_i) / sum_j e^(alpha x_j)

alpha = 0 gives the arithmetic mean, alpha -> +inf the maximum and
alpha -> -inf the minimum. The implementation anchors the exponentials at
the arg-max of alpha*x, so it cannot overflow and is exact on constant and
singleton inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Width floor applied after every gradient update; keeps 1/sigma finite.
SIGMA_MIN = 1e-4


@dataclass
class GaussianMf:
    """Gaussian membership function mu(x) = exp(-(x - c)^2 / (2 sigma^2))."""

    c: float
    sigma: float

    def __post_init__(self):
        self.c = float(self.c)
        self.sigma = float(self.sigma)
        if not math.isfinite(self.c):
            raise ValidationError("membership center must be finite")
        if not math.isfinite(self.sigma) or self.sigma <= 0.0:
            raise ValidationError(f"membership width must be > 0, got {self.sigma}")


def mf_eval(mf: GaussianMf, x: float) -> float:
    """Membership degree of x, in (0, 1] with the peak 1 at x = c."""
    if not math.isfinite(x):
        raise ValidationError(f"membership input must be finite, got {x}")
    z = (x - mf.c) / mf.sigma
    return math.exp(-0.5 * z * z)


def mf_grad(mf: GaussianMf, x: float):
    """(d mu/d c, d mu/d sigma) at x.

    d mu/d c     = mu(x) (x - c) / sigma^2
    d mu/d sigma = mu(x) (x - c)^2 / sigma^3
    """
    mu = mf_eval(mf, x)
    d = x - mf.c
    return mu * d / mf.sigma**2, mu * d * d / mf.sigma**3


def _softmax_core(rows: np.ndarray, alpha: float):
    """Row-wise softmax values and normalized exponential weights.

    rows has shape (R, M); returns (values (R,), weights (R, M)). The value is
    computed as x_a + sum((x_i - x_a) e_i) / sum(e_i) with anchor a at the
    arg-max of alpha*x, so e_a = 1 exactly and constant rows return the
    constant unchanged.
    """
    n = rows.shape[1]
    if alpha == 0.0:
        # Arithmetic mean; the general path's weights are exactly 1/n here.
        return rows.mean(axis=1), np.full_like(rows, 1.0 / n)
    z = alpha * rows
    zmax = z.max(axis=1, keepdims=True)
    e = np.exp(z - zmax)
    se = e.sum(axis=1)
    weights = e / se[:, None]
    anchor = np.take_along_axis(rows, z.argmax(axis=1)[:, None], axis=1)
    values = anchor[:, 0] + ((rows - anchor) * e).sum(axis=1) / se
    return values, weights


def softmax_rows(rows: np.ndarray, alpha: float) -> np.ndarray:
    """softmax of each row of a (R, M) matrix; internal vectorized form."""
    return _softmax_core(np.asarray(rows, dtype=float), alpha)[0]


def softmax_grad_rows(rows: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise gradient d softmax/d x_i = s_i (1 + alpha (x_i - softmax))."""
    rows = np.asarray(rows, dtype=float)
    values, weights = _softmax_core(rows, alpha)
    return weights * (1.0 + alpha * (rows - values[:, None]))


def _as_clean_vector(xs) -> np.ndarray:
    arr = np.asarray(xs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("softmax input must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("softmax input must be finite")
    return arr


def softmax_agg(xs, alpha: float) -> float:
    """Smooth maximum of a nonempty sequence (mean at alpha = 0)."""
    arr = _as_clean_vector(xs)
    return float(softmax_rows(arr[None, :], alpha)[0])


def softmax_grad(xs, alpha: float) -> np.ndarray:
    """Gradient of softmax_agg with respect to each entry of xs."""
    arr = _as_clean_vector(xs)
    return softmax_grad_rows(arr[None, :], alpha)[0]
