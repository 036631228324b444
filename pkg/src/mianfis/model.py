"""MI-ANFIS parameter container and the six-layer forward pass over a bag.

Given a bag X with M instances of dimension D and R rules, the layers are:

  1. membership     mu[i, j, d] = exp(-(x[j,d] - c[i,d])^2 / (2 sigma[i,d]^2))
  2. truth          truth[i, j] = prod_d mu[i, j, d]        (product t-norm)
  3. firing         firing[i]   = softmax(truth[i, :]; alpha_premise)
  4. normalization  norm[i]     = firing[i] / sum_k firing[k]
  5. rule output    out[i]      = gate[i] * norm[i] * softmax(resp[i, :]; alpha_consequent)
                    resp[i, j]  = b[i,0] + sum_d b[i,d+1] x[j,d]
  6. output         O           = sum_i out[i]

gate[i] is the per-rule dropout mask during training (all ones otherwise) or
the constant keep-probability when scoring a dropout-trained model. If the
firing strengths sum below 1e-12 the normalization falls back to the uniform
vector and the trace flags it, so training never divides by ~0.
"""

from dataclasses import dataclass, field

import numpy as np

from .bags import Bag
from .errors import InternalError, ValidationError
from .fuzzy import GaussianMf, mf_eval, softmax_rows

# Below this total firing strength layer 4 switches to uniform weights.
FIRING_GUARD = 1e-12

_ORDERS = ("zero", "first")


@dataclass
class MiRule:
    """One multiple-instance Sugeno rule.

    `premise` holds D per-dimension Gaussian membership functions;
    `consequent` is the coefficient vector (b0, b1, ..., bD) applied to an
    instance augmented with a leading 1. Zero-order rules keep b1..bD at 0.
    """

    premise: list
    consequent: np.ndarray

    def __post_init__(self):
        self.consequent = np.asarray(self.consequent, dtype=float)
        if not self.premise or any(not isinstance(m, GaussianMf) for m in self.premise):
            raise ValidationError("rule premise must be a nonempty list of GaussianMf")
        if self.consequent.shape != (len(self.premise) + 1,):
            raise ValidationError(
                "rule consequent must have length D+1 "
                f"(premise D={len(self.premise)}, got {self.consequent.shape})"
            )


@dataclass
class ForwardTrace:
    """All intermediate layer values of one forward pass (see module doc)."""

    truth: np.ndarray        # (R, M) layer-2 truth instances
    firing: np.ndarray       # (R,)   layer-3 firing strengths
    firing_norm: np.ndarray  # (R,)   layer-4 normalized firing strengths
    response: np.ndarray     # (R, M) per-instance consequent responses
    rule_value: np.ndarray   # (R,)   softmax-combined consequent per rule
    rule_out: np.ndarray     # (R,)   layer-5 gated, weighted rule outputs
    output: float            # layer-6 bag score
    mask: np.ndarray         # (R,)   dropout mask in effect (ones if none)
    guard_triggered: bool = False


@dataclass
class MiAnfisModel:
    """Rule base of R MI-Sugeno rules over D-dimensional instances.

    Parameters are stored as arrays: centers/sigmas (R, D) and consequent
    coefficients (R, D+1). `order` is "zero" (constant consequents, only b0
    free) or "first" (affine consequents).
    """

    centers: np.ndarray
    sigmas: np.ndarray
    coeffs: np.ndarray
    alpha_premise: float = 1.0
    alpha_consequent: float = 1.0
    order: str = "zero"

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.sigmas = np.atleast_2d(np.asarray(self.sigmas, dtype=float))
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        r, d = self.centers.shape
        if r < 1 or d < 1:
            raise ValidationError("model needs at least one rule and one dimension")
        if self.sigmas.shape != (r, d) or self.coeffs.shape != (r, d + 1):
            raise ValidationError(
                f"inconsistent parameter shapes: centers {self.centers.shape}, "
                f"sigmas {self.sigmas.shape}, coeffs {self.coeffs.shape}"
            )
        if not (np.all(np.isfinite(self.centers)) and np.all(np.isfinite(self.sigmas))
                and np.all(np.isfinite(self.coeffs))):
            raise ValidationError("model parameters must be finite")
        if np.any(self.sigmas <= 0.0):
            raise ValidationError("all membership widths must be > 0")
        if self.order not in _ORDERS:
            raise ValidationError(f"order must be one of {_ORDERS}, got {self.order!r}")
        if self.order == "zero" and np.any(self.coeffs[:, 1:] != 0.0):
            raise ValidationError("zero-order model requires b1..bD == 0 in every rule")
        self.alpha_premise = float(self.alpha_premise)
        self.alpha_consequent = float(self.alpha_consequent)

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def rule(self, i: int) -> MiRule:
        """The i-th rule as a standalone MiRule (copies the parameters)."""
        premise = [GaussianMf(self.centers[i, d], self.sigmas[i, d])
                   for d in range(self.dim)]
        return MiRule(premise, self.coeffs[i].copy())

    @property
    def rules(self) -> list:
        return [self.rule(i) for i in range(self.n_rules)]

    @classmethod
    def from_rules(cls, rules, alpha_premise=1.0, alpha_consequent=1.0, order="zero"):
        if not rules:
            raise ValidationError("need at least one rule")
        centers = np.array([[m.c for m in r.premise] for r in rules])
        sigmas = np.array([[m.sigma for m in r.premise] for r in rules])
        coeffs = np.array([r.consequent for r in rules])
        return cls(centers, sigmas, coeffs, alpha_premise, alpha_consequent, order)

    def copy(self) -> "MiAnfisModel":
        return MiAnfisModel(self.centers.copy(), self.sigmas.copy(),
                            self.coeffs.copy(), self.alpha_premise,
                            self.alpha_consequent, self.order)


def instance_response(rule: MiRule, x) -> float:
    """Consequent response b0 + sum_d b_(d+1) x_d of one rule to one instance."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(rule.premise),):
        raise ValidationError(f"instance must have dimension {len(rule.premise)}")
    out = rule.consequent[0]
    for d in range(x.size):
        out += rule.consequent[d + 1] * x[d]
    return float(out)


def truth_instance(rule: MiRule, x) -> float:
    """Product of the per-dimension membership degrees of one instance."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(rule.premise),):
        raise ValidationError(f"instance must have dimension {len(rule.premise)}")
    out = 1.0
    for mf, xd in zip(rule.premise, x):
        out *= mf_eval(mf, float(xd))
    return float(out)


def forward(model: MiAnfisModel, bag: Bag, mask=None, test_scale=None) -> ForwardTrace:
    """Run the six layers over one bag and return the full trace.

    `mask` is a per-rule 0/1 dropout mask applied at layer 5 during training;
    `test_scale` multiplies every rule output by a constant keep-probability
    instead (mutually exclusive with `mask`).
    """
    if mask is not None and test_scale is not None:
        raise ValidationError("mask and test_scale are mutually exclusive")
    X = bag.instances
    if X.shape[1] != model.dim:
        raise ValidationError(
            f"bag {bag.bag_id}: dimension {X.shape[1]} != model dimension {model.dim}"
        )
    r = model.n_rules

    z = (X[None, :, :] - model.centers[:, None, :]) / model.sigmas[:, None, :]
    truth = np.exp(-0.5 * z * z).prod(axis=2)                       # (R, M)
    firing = softmax_rows(truth, model.alpha_premise)               # (R,)

    total = firing.sum()
    guard = bool(total < FIRING_GUARD)
    firing_norm = np.full(r, 1.0 / r) if guard else firing / total

    response = model.coeffs[:, :1] + model.coeffs[:, 1:] @ X.T      # (R, M)
    rule_value = softmax_rows(response, model.alpha_consequent)     # (R,)

    if mask is not None:
        mask = np.asarray(mask, dtype=float)
        if mask.shape != (r,):
            raise InternalError(f"dropout mask must have shape ({r},)")
        gate = mask
    else:
        mask = np.ones(r)
        gate = mask if test_scale is None else float(test_scale) * mask

    rule_out = gate * firing_norm * rule_value
    return ForwardTrace(truth, firing, firing_norm, response, rule_value,
                        rule_out, float(rule_out.sum()), mask, guard)


def predict(model: MiAnfisModel, bag: Bag) -> float:
    """Bag score with all rules active and no scaling."""
    return forward(model, bag).output
