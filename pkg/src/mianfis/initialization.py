"""Model initialization and preprocessing: fuzzy c-means, parameter seeding,
and PCA dimensionality reduction for bag datasets."""

from dataclasses import dataclass, field

import numpy as np

from .bags import BagDataset, Bag
from .errors import ValidationError
from .model import MiAnfisModel


@dataclass
class FcmResult:
    centers: np.ndarray       # (k, D)
    memberships: np.ndarray   # (n, k), rows sum to 1
    iterations: int
    objective_path: list = field(default_factory=list)


def _fcm_memberships(points, centers, fuzzifier):
    # u_ij = d_ij^(-2/(m-1)) / sum_l d_il^(-2/(m-1)); points on a center get
    # full membership in the coincident cluster(s).
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    zero = d2 <= 0.0
    with np.errstate(divide="ignore"):
        p = d2 ** (-1.0 / (fuzzifier - 1.0))
    u = np.where(np.isfinite(p), p, 0.0)
    denom = u.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    u[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    u[~hit] = u[~hit] / denom[~hit]
    return u


def fcm(points, k: int, fuzzifier: float = 2.0, tol: float = 1e-5,
        max_iter: int = 100, seed: int = 0) -> FcmResult:
    """Fuzzy c-means clustering of an (n, D) point matrix into k clusters.

    Centers start at k distinct data points drawn with the seeded RNG; the
    loop alternates membership and center updates until the largest center
    shift drops below tol or max_iter is reached. The recorded objective
    sum_ij u_ij^m ||x_i - c_j||^2 is non-increasing across iterations.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValidationError("fcm needs a nonempty (n, D) point matrix")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n points, got k={k}, n={n}")
    if fuzzifier <= 1.0:
        raise ValidationError("fuzzifier must be > 1")

    rng = np.random.default_rng(seed)
    centers = points[rng.choice(n, size=k, replace=False)].copy()
    path = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = _fcm_memberships(points, centers, fuzzifier)
        um = u**fuzzifier
        new_centers = (um.T @ points) / um.sum(axis=0)[:, None]
        shift = np.linalg.norm(new_centers - centers, axis=1).max()
        centers = new_centers
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        path.append(float((um * d2).sum()))
        if shift < tol:
            break
    memberships = _fcm_memberships(points, centers, fuzzifier)
    return FcmResult(centers, memberships, iterations, path)


@dataclass
class InitConfig:
    """How to seed a fresh model before training.

    strategy "fcm" clusters the instances of positive bags; "random" draws
    rule centers uniformly within the per-dimension data range. All widths
    start at sigma_init, consequents at (b_init, 0, ..., 0).
    """

    strategy: str = "fcm"
    sigma_init: float = 0.5
    b_init: float = 1.0
    alpha_premise: float = 1.0
    alpha_consequent: float = 1.0
    order: str = "zero"
    seed: int = 0
    fcm_fuzzifier: float = 2.0
    fcm_tol: float = 1e-5
    fcm_max_iter: int = 100

    def __post_init__(self):
        if self.strategy not in ("fcm", "random"):
            raise ValidationError(f"unknown init strategy {self.strategy!r}")
        if self.sigma_init <= 0.0:
            raise ValidationError("sigma_init must be > 0")


def init_model(ds: BagDataset, rules: int, config: InitConfig = None) -> MiAnfisModel:
    """Build an untrained model for a dataset per the init configuration."""
    config = config or InitConfig()
    if rules < 1:
        raise ValidationError("need at least one rule")
    if not ds.bags:
        raise ValidationError("cannot initialize from an empty dataset")

    if config.strategy == "fcm":
        positive = [b.instances for b in ds.bags if b.label >= 0.5]
        if not positive:
            raise ValidationError("fcm initialization needs at least one positive bag")
        points = np.vstack(positive)
        if points.shape[0] < rules:
            raise ValidationError(
                f"fcm initialization needs >= {rules} positive instances, "
                f"got {points.shape[0]}")
        centers = fcm(points, rules, fuzzifier=config.fcm_fuzzifier,
                      tol=config.fcm_tol, max_iter=config.fcm_max_iter,
                      seed=config.seed).centers
    else:
        rng = np.random.default_rng(config.seed)
        points = ds.stacked_instances()
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        centers = rng.uniform(lo, hi, (rules, ds.dim))

    sigmas = np.full((rules, ds.dim), config.sigma_init)
    coeffs = np.zeros((rules, ds.dim + 1))
    coeffs[:, 0] = config.b_init
    return MiAnfisModel(centers, sigmas, coeffs, config.alpha_premise,
                        config.alpha_consequent, config.order)


@dataclass
class PcaMap:
    """Affine projection x -> (x - mean) @ basis onto the top principal axes."""

    mean: np.ndarray       # (D,)
    basis: np.ndarray      # (D, d), orthonormal columns
    explained: np.ndarray  # (d,) eigenvalues, descending


def pca_fit(points, dims: int) -> PcaMap:
    """Fit a PCA projection to an (n, D) point matrix, keeping `dims` axes."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValidationError("pca needs an (n, D) matrix with n >= 2")
    n, d_in = points.shape
    if not 1 <= dims <= d_in:
        raise ValidationError(f"need 1 <= dims <= {d_in}, got {dims}")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    idx = np.argsort(evals)[::-1][:dims]
    return PcaMap(mean, evecs[:, idx], evals[idx])


def pca_transform(pmap: PcaMap, points) -> np.ndarray:
    return (np.asarray(points, dtype=float) - pmap.mean) @ pmap.basis


def pca_apply(pmap: PcaMap, ds: BagDataset) -> BagDataset:
    """Project every instance of every bag; ids, labels and order are kept."""
    if ds.dim != pmap.mean.shape[0]:
        raise ValidationError(
            f"dataset dimension {ds.dim} != pca input dimension {pmap.mean.shape[0]}")
    bags = [Bag(b.bag_id, b.label, pca_transform(pmap, b.instances)) for b in ds.bags]
    return BagDataset(bags, dim=pmap.basis.shape[1])
