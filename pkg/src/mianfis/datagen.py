"""Synthetic two-concept benchmark generator.

Positive bags carry exactly one instance drawn from an isotropic Gaussian
around their concept center, truncated to lie within one standard deviation
of it; every other instance (and all instances of negative bags) is uniform
background over the domain box, rejected while it falls inside any concept's
exclusion disk. The default layout is two concepts at (0.5, 0.5) and
(1.5, 1.5) with sigma 0.15 on the box [-0.5, 2.5]^2, 50 positive bags per
concept plus 50 negative bags of 2..10 instances each.
"""

from dataclasses import dataclass

import numpy as np

from .bags import Bag, BagDataset
from .errors import ValidationError

# Total rejection draws allowed before declaring the box covered.
_MAX_DRAWS = 1_000_000
_CHUNK = 256


@dataclass
class SynthSpec:
    concept_centers: tuple = ((0.5, 0.5), (1.5, 1.5))
    concept_sigma: float = 0.15
    bags_per_concept: int = 50
    negative_bags: int = 50
    instances_min: int = 2
    instances_max: int = 10
    domain_min: float = -0.5
    domain_max: float = 2.5
    exclusion_radius: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not self.concept_centers:
            raise ValidationError("need at least one concept center")
        dims = {len(c) for c in self.concept_centers}
        if len(dims) != 1:
            raise ValidationError("all concept centers must share one dimension")
        if self.concept_sigma <= 0.0:
            raise ValidationError("concept_sigma must be > 0")
        if self.instances_min < 1 or self.instances_max < self.instances_min:
            raise ValidationError(
                f"need 1 <= instances_min <= instances_max, got "
                f"[{self.instances_min}, {self.instances_max}]")
        if self.domain_max <= self.domain_min:
            raise ValidationError("domain_max must exceed domain_min")
        if self.exclusion_radius < 1.0:
            raise ValidationError("exclusion_radius must be >= 1 (in sigma units)")
        if self.bags_per_concept < 0 or self.negative_bags < 0:
            raise ValidationError("bag counts must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.concept_centers[0])


def _sample_concept_instance(rng, center, sigma):
    # Gaussian truncated to the 1-sigma ball around the center.
    for _ in range(_MAX_DRAWS):
        x = rng.normal(center, sigma)
        if np.linalg.norm(x - center) <= sigma:
            return x
    raise ValidationError("could not sample a concept instance")  # pragma: no cover


def _sample_background(rng, n, spec: SynthSpec, centers):
    """n uniform points over the box, outside every exclusion disk."""
    if n == 0:
        return np.empty((0, spec.dim))
    radius = spec.exclusion_radius * spec.concept_sigma
    kept = []
    have = 0
    draws = 0
    while have < n:
        if draws >= _MAX_DRAWS:
            raise ValidationError(
                "exclusion disks cover the domain box: background sampling "
                f"failed after {draws} draws")
        chunk = rng.uniform(spec.domain_min, spec.domain_max, (_CHUNK, spec.dim))
        draws += _CHUNK
        dist = np.linalg.norm(chunk[:, None, :] - centers[None, :, :], axis=2)
        ok = chunk[(dist > radius).all(axis=1)]
        if ok.size:
            kept.append(ok)
            have += ok.shape[0]
    return np.vstack(kept)[:n]


def generate(spec: SynthSpec) -> BagDataset:
    """Deterministically generate the dataset described by the spec."""
    rng = np.random.default_rng(spec.seed)
    centers = np.asarray(spec.concept_centers, dtype=float)
    bags = []
    for ci, center in enumerate(centers):
        for b in range(spec.bags_per_concept):
            m = int(rng.integers(spec.instances_min, spec.instances_max + 1))
            concept_pt = _sample_concept_instance(rng, center, spec.concept_sigma)
            background = _sample_background(rng, m - 1, spec, centers)
            instances = np.vstack([concept_pt[None, :], background])
            bags.append(Bag(f"pos{ci + 1}-{b + 1:03d}", 1.0, instances))
    for b in range(spec.negative_bags):
        m = int(rng.integers(spec.instances_min, spec.instances_max + 1))
        bags.append(Bag(f"neg-{b + 1:03d}", 0.0,
                        _sample_background(rng, m, spec, centers)))
    return BagDataset(bags, dim=spec.dim)
