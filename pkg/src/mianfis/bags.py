"""Bags of instances and bag-level datasets.

A bag is an unordered set of D-dimensional instances carrying one label for
the whole bag. Under the standard multiple-instance assumption a bag is
positive iff at least one of its instances is positive; instance labels are
never observed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class Bag:
    """One labelled bag: `instances` has shape (M, D) with M >= 1."""

    bag_id: str
    label: float
    instances: np.ndarray

    def __post_init__(self):
        self.instances = np.asarray(self.instances, dtype=float)
        if self.instances.ndim != 2 or self.instances.shape[0] < 1:
            raise ValidationError(
                f"bag {self.bag_id}: instances must be a (M, D) array with M >= 1"
            )
        self.label = float(self.label)

    @property
    def size(self) -> int:
        return self.instances.shape[0]

    @property
    def dim(self) -> int:
        return self.instances.shape[1]


@dataclass
class BagDataset:
    """Ordered collection of bags sharing one feature dimensionality."""

    bags: list = field(default_factory=list)
    dim: int = 0

    def __post_init__(self):
        if self.dim == 0 and self.bags:
            self.dim = self.bags[0].dim

    def __len__(self) -> int:
        return len(self.bags)

    def __iter__(self):
        return iter(self.bags)

    @property
    def labels(self) -> np.ndarray:
        return np.array([b.label for b in self.bags], dtype=float)

    def stacked_instances(self) -> np.ndarray:
        """All instances of all bags as one (sum M_p, D) matrix, in bag order."""
        if not self.bags:
            return np.empty((0, self.dim))
        return np.vstack([b.instances for b in self.bags])


def validate_dataset(ds: BagDataset) -> list:
    """Check dataset-level invariants; returns one message per violation.

    An empty list means the dataset is well formed: unique bag ids, every bag
    non-empty, every instance with exactly `dim` finite components.
    """
    violations = []
    seen = {}
    for bag in ds.bags:
        if bag.bag_id in seen:
            violations.append(f"bag {bag.bag_id}: duplicate bag id")
        seen[bag.bag_id] = True
        if bag.size < 1:
            violations.append(f"bag {bag.bag_id}: empty bag")
            continue
        if bag.dim != ds.dim:
            violations.append(
                f"bag {bag.bag_id}: dimension {bag.dim} != dataset dimension {ds.dim}"
            )
        if not np.all(np.isfinite(bag.instances)):
            violations.append(f"bag {bag.bag_id}: non-finite instance component")
        if not np.isfinite(bag.label):
            violations.append(f"bag {bag.bag_id}: non-finite label")
    return violations


def naive_expand(ds: BagDataset) -> BagDataset:
    """Flatten bags into single-instance bags inheriting the parent label.

    Every instance of every bag becomes its own bag; this is the naive
    baseline's training view, in which all instances of positive bags are
    treated as positive.
    """
    out = []
    for bag in ds.bags:
        for j in range(bag.size):
            out.append(
                Bag(f"{bag.bag_id}#{j + 1}", bag.label, bag.instances[j : j + 1].copy())
            )
    return BagDataset(out, dim=ds.dim)
