"""Gradient-descent training of MI-ANFIS from bag-level labels.

The loss for one bag is E_p = (t_p - O_p)^2 and every parameter gradient
starts from the output error dE/dO = -2 (t_p - O_p). Two gradient modes are
supported for the premise parameters:

  exact  full chain rule through layer 4, including the cross-rule terms
         d norm_j / d firing_k = -firing_j / total^2 for j != k, which
         collapse to dO/d firing_k = (m_k f_k - O) / total;
  paper  diagonal normalization derivative only,
         (total - firing_k) / total^2.

The two agree exactly for single-rule models. Consequent gradients are the
same in both modes. Rules dropped by the dropout mask receive zero gradient
everywhere, and a forward pass that hit the firing guard contributes no
premise gradient (layer 4 was replaced by a constant there).

Rule dropout draws one Bernoulli(keep probability) mask per rule per
presentation: per bag in online mode, per epoch in batch mode. A keep
probability of 1 disables dropout entirely (no RNG is consumed). Scoring a
dropout-trained model uses predict_with_dropout_scaling, which keeps every
rule but multiplies the output by the keep probability.

Training stops when the infinity norm of the epoch's parameter change drops
below epsilon, or after epochs_max epochs. The per-epoch RMSE trace is
always computed dropout-free (all masks 1, no scaling).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bags import Bag, BagDataset, validate_dataset
from .errors import InternalError, ValidationError
from .fuzzy import SIGMA_MIN, softmax_grad_rows
from .model import MiAnfisModel, forward, predict

_GRADIENT_MODES = ("exact", "paper")
_UPDATE_MODES = ("batch", "online")


@dataclass
class TrainConfig:
    """Hyperparameters of one training run.

    eta may be 0 (a no-op run that stops after one epoch); dropout_p is the
    per-rule keep probability in (0, 1], 1 meaning dropout disabled.
    """

    eta: float = 0.1
    epochs_max: int = 150
    epsilon: float = 1e-6
    dropout_p: float = 1.0
    gradient_mode: str = "exact"
    update_mode: str = "batch"
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta >= 0.0):
            raise ValidationError(f"eta must be >= 0, got {self.eta}")
        if self.epochs_max < 1:
            raise ValidationError(f"epochs_max must be >= 1, got {self.epochs_max}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 < self.dropout_p <= 1.0):
            raise ValidationError(f"dropout_p must be in (0, 1], got {self.dropout_p}")
        if self.gradient_mode not in _GRADIENT_MODES:
            raise ValidationError(f"gradient_mode must be one of {_GRADIENT_MODES}")
        if self.update_mode not in _UPDATE_MODES:
            raise ValidationError(f"update_mode must be one of {_UPDATE_MODES}")
        self.seed = int(self.seed)


@dataclass
class Gradients:
    """dE w.r.t. centers (R, D), sigmas (R, D) and coeffs (R, D+1)."""

    centers: np.ndarray
    sigmas: np.ndarray
    coeffs: np.ndarray

    def add_(self, other: "Gradients"):
        self.centers += other.centers
        self.sigmas += other.sigmas
        self.coeffs += other.coeffs
        return self

    def max_abs(self) -> float:
        return max(np.abs(self.centers).max(), np.abs(self.sigmas).max(),
                   np.abs(self.coeffs).max())


@dataclass
class TrainReport:
    """Per-epoch RMSE trace plus how and when the run stopped."""

    rmse: list = field(default_factory=list)
    epochs: int = 0
    stop_reason: str = "max_epochs"
    seed: int = 0


def bag_loss(model: MiAnfisModel, bag: Bag, mask=None) -> float:
    """Squared error (t_p - O_p)^2 of one bag."""
    return (bag.label - forward(model, bag, mask=mask).output) ** 2


def bag_gradient(model: MiAnfisModel, bag: Bag, trace, mode: str = "exact") -> Gradients:
    """Analytic gradient of the bag's squared error at the traced state.

    `trace` must come from forward(model, bag, mask=...) with the mask that
    was in effect; dropped rules get zero rows. For zero-order models the
    b1..bD columns are not free parameters and stay zero.
    """
    if mode not in _GRADIENT_MODES:
        raise ValidationError(f"mode must be one of {_GRADIENT_MODES}")
    X = bag.instances
    r, d = model.n_rules, model.dim
    if trace.truth.shape != (r, X.shape[0]) or trace.mask.shape != (r,):
        raise InternalError("trace does not match model/bag shapes")

    e_out = -2.0 * (bag.label - trace.output)
    m = trace.mask

    # Consequent path: dO/df_i = m_i norm_i, then through the softmax.
    sgc = softmax_grad_rows(trace.response, model.alpha_consequent)  # (R, M)
    coef = e_out * m * trace.firing_norm                             # (R,)
    d_coeffs = np.empty((r, d + 1))
    d_coeffs[:, 0] = coef * sgc.sum(axis=1)
    if model.order == "zero":
        d_coeffs[:, 1:] = 0.0
    else:
        d_coeffs[:, 1:] = coef[:, None] * (sgc @ X)

    if trace.guard_triggered:
        # Layer 4 was the uniform constant: no premise gradient for this bag.
        d_centers = np.zeros((r, d))
        d_sigmas = np.zeros((r, d))
    else:
        total = trace.firing.sum()
        if mode == "exact":
            accum = (m * trace.rule_value - trace.output) / total
        else:
            accum = m * trace.rule_value * (total - trace.firing) / total**2
        accum = np.where(m != 0.0, accum, 0.0)

        sgp = softmax_grad_rows(trace.truth, model.alpha_premise)    # (R, M)
        # d truth[k,j] / d c[k,d] = truth[k,j] (x[j,d] - c[k,d]) / sigma[k,d]^2
        common = (e_out * accum)[:, None] * sgp * trace.truth        # (R, M)
        diff = X[None, :, :] - model.centers[:, None, :]             # (R, M, D)
        d_centers = np.einsum("rm,rmd->rd", common, diff) / model.sigmas**2
        d_sigmas = np.einsum("rm,rmd->rd", common, diff * diff) / model.sigmas**3

    return Gradients(d_centers, d_sigmas, d_coeffs)


def finite_difference_gradient(model: MiAnfisModel, bag: Bag, h: float = 1e-6) -> Gradients:
    """Central finite differences of bag_loss over every free parameter.

    Independent of the analytic path: only forward passes are used. For
    zero-order models the b1..bD columns are skipped (not free) and reported
    as zero.
    """
    def central(array_name, i, j):
        lo, hi = model.copy(), model.copy()
        getattr(lo, array_name)[i, j] -= h
        getattr(hi, array_name)[i, j] += h
        return (bag_loss(hi, bag) - bag_loss(lo, bag)) / (2.0 * h)

    r, d = model.n_rules, model.dim
    g = Gradients(np.zeros((r, d)), np.zeros((r, d)), np.zeros((r, d + 1)))
    for i in range(r):
        for j in range(d):
            g.centers[i, j] = central("centers", i, j)
            g.sigmas[i, j] = central("sigmas", i, j)
        cols = 1 if model.order == "zero" else d + 1
        for j in range(cols):
            g.coeffs[i, j] = central("coeffs", i, j)
    return g


def dataset_rmse(model: MiAnfisModel, bags) -> float:
    """sqrt(sum_p (t_p - O_p)^2 / N) with all rules active, no scaling.

    Overflow-safe: a diverged model reports inf instead of raising.
    """
    bags = list(bags)
    if not bags:
        raise ValidationError("RMSE of an empty bag collection is undefined")
    errors = np.array([b.label - predict(model, b) for b in bags])
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.mean(errors * errors)))


def _sample_mask(rng, n_rules: int, keep_p: float) -> np.ndarray:
    return (rng.random(n_rules) < keep_p).astype(float)


def train(model: MiAnfisModel, dataset: BagDataset, config: TrainConfig,
          on_epoch=None):
    """Gradient-descent training; returns (trained model copy, TrainReport).

    The input model is left untouched. Batch mode accumulates the gradient
    over all bags in stored order and applies one update per epoch; online
    mode updates after every bag, presenting the bags in a fresh seeded
    permutation each epoch (stochastic passes over a class-blocked file would
    otherwise just track the label of the final block). `on_epoch(epoch,
    model)` is called after each epoch's update (the model reference must not
    be mutated).
    """
    if not dataset.bags:
        raise ValidationError("cannot train on an empty dataset")
    problems = validate_dataset(dataset)
    if problems:
        raise ValidationError("invalid dataset: " + "; ".join(problems))
    if dataset.dim != model.dim:
        raise ValidationError(
            f"dataset dimension {dataset.dim} != model dimension {model.dim}")

    model = model.copy()
    rng = np.random.default_rng(config.seed)
    # Separate stream so presentation order is the same with and without
    # dropout, and a dropout_p = 1 run never consumes mask randomness.
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    use_dropout = config.dropout_p < 1.0
    bags = dataset.bags
    report = TrainReport(seed=config.seed)

    for epoch in range(1, config.epochs_max + 1):
        before = (model.centers.copy(), model.sigmas.copy(), model.coeffs.copy())

        if config.update_mode == "batch":
            mask = _sample_mask(rng, model.n_rules, config.dropout_p) if use_dropout else None
            total = None
            for bag in bags:
                trace = forward(model, bag, mask=mask)
                g = bag_gradient(model, bag, trace, config.gradient_mode)
                total = g if total is None else total.add_(g)
            _apply_update(model, total, config.eta)
        else:
            for idx in order_rng.permutation(len(bags)):
                bag = bags[idx]
                mask = _sample_mask(rng, model.n_rules, config.dropout_p) if use_dropout else None
                trace = forward(model, bag, mask=mask)
                g = bag_gradient(model, bag, trace, config.gradient_mode)
                _apply_update(model, g, config.eta)

        delta = max(np.abs(model.centers - before[0]).max(),
                    np.abs(model.sigmas - before[1]).max(),
                    np.abs(model.coeffs - before[2]).max())

        report.rmse.append(dataset_rmse(model, bags))
        report.epochs = epoch
        if on_epoch is not None:
            on_epoch(epoch, model)
        if delta < config.epsilon:
            report.stop_reason = "epsilon"
            break

    return model, report


def _apply_update(model: MiAnfisModel, g: Gradients, eta: float):
    model.centers -= eta * g.centers
    model.sigmas -= eta * g.sigmas
    model.coeffs -= eta * g.coeffs
    np.maximum(model.sigmas, SIGMA_MIN, out=model.sigmas)


def predict_with_dropout_scaling(model: MiAnfisModel, bag: Bag, keep_p: float) -> float:
    """Deterministic score of a dropout-trained model: keep_p * full output."""
    if not (0.0 < keep_p <= 1.0):
        raise ValidationError(f"keep probability must be in (0, 1], got {keep_p}")
    return forward(model, bag, test_scale=keep_p).output


def gradient_check(trials: int = 100, seed: int = 0, mode: str = "exact",
                   h: float = 1e-6, rel_tol: float = 1e-5,
                   abs_floor: float = 1e-8) -> list:
    """Compare analytic and finite-difference gradients on random setups.

    Each trial draws a small first-order model (R in 1..3, D in {1, 2, 5},
    alphas in {0, 1, 3}) and a random bag of 1..4 instances, then checks every
    gradient component: pass iff |a - f| < abs_floor or
    |a - f| / max(|a|, |f|) < rel_tol. Returns one dict per trial.
    """
    rng = np.random.default_rng(seed)
    results = []
    for t in range(trials):
        r = int(rng.integers(1, 4))
        d = int(rng.choice([1, 2, 5]))
        m = int(rng.integers(1, 5))
        a_p = float(rng.choice([0.0, 1.0, 3.0]))
        a_c = float(rng.choice([0.0, 1.0, 3.0]))
        model = MiAnfisModel(
            centers=rng.normal(0.0, 1.0, (r, d)),
            sigmas=rng.uniform(0.5, 1.5, (r, d)),
            coeffs=rng.normal(0.0, 1.0, (r, d + 1)),
            alpha_premise=a_p, alpha_consequent=a_c, order="first",
        )
        bag = Bag(f"trial-{t}", float(rng.uniform(0.0, 1.0)), rng.normal(0.0, 1.0, (m, d)))
        analytic = bag_gradient(model, bag, forward(model, bag), mode)
        numeric = finite_difference_gradient(model, bag, h=h)
        worst = 0.0
        ok = True
        for a, f in ((analytic.centers, numeric.centers),
                     (analytic.sigmas, numeric.sigmas),
                     (analytic.coeffs, numeric.coeffs)):
            diff = np.abs(a - f)
            scale = np.maximum(np.abs(a), np.abs(f))
            rel = np.where(diff < abs_floor, 0.0, diff / np.maximum(scale, 1e-300))
            worst = max(worst, float(rel.max()))
            ok = ok and bool(np.all((diff < abs_floor) | (diff / np.maximum(scale, 1e-300) < rel_tol)))
        results.append({"trial": t, "rules": r, "dim": d, "instances": m,
                        "alpha_premise": a_p, "alpha_consequent": a_c,
                        "max_rel_err": worst, "ok": ok})
    return results
