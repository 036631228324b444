"""Evaluation harness: thresholded classification, stratified k-fold
cross-validation (with an optional naive single-instance baseline), ROC/AUC,
and the paired dropout-vs-no-dropout experiment."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bags import BagDataset, naive_expand
from .errors import ValidationError
from .initialization import InitConfig, init_model, pca_apply, pca_fit
from .model import predict
from .training import TrainConfig, predict_with_dropout_scaling, train


# numpy 2 renamed trapz; support both without a deprecation warning.
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def derive_seed(base: int, *tags: int) -> int:
    """Stable 64-bit child seed for a tagged sub-task of a seeded protocol."""
    ss = np.random.SeedSequence([int(base) & (2**63 - 1), *[int(t) for t in tags]])
    return int(ss.generate_state(1, np.uint64)[0])


def classify(score: float, threshold: float = 0.5) -> str:
    """'positive' iff score >= threshold."""
    return "positive" if score >= threshold else "negative"


@dataclass
class FoldResult:
    index: int
    test_ids: list
    accuracy: float
    rmse_final: float
    epochs: int
    stop_reason: str
    model: object


@dataclass
class CvResult:
    accuracies: list
    mean_accuracy: float
    std_accuracy: float
    folds: list
    scores: list          # (bag_id, score, label) for every held-out bag
    seed: int


def _stratified_folds(ds: BagDataset, folds: int, rng) -> list:
    """Partition bag indices into `folds` label-stratified groups."""
    if folds < 2:
        raise ValidationError(f"need >= 2 folds, got {folds}")
    groups = {}
    for i, bag in enumerate(ds.bags):
        groups.setdefault(bag.label, []).append(i)
    for label, idxs in groups.items():
        if len(idxs) < folds:
            raise ValidationError(
                f"label {label} has {len(idxs)} bags, fewer than {folds} folds")
    assignment = [[] for _ in range(folds)]
    for label in sorted(groups):
        order = rng.permutation(groups[label])
        for pos, idx in enumerate(order):
            assignment[pos % folds].append(int(idx))
    return [sorted(f) for f in assignment]


def _run_fold(ds, fold_index, test_idx, rules, train_config, init, pca_dims,
              threshold, seed, expand_train):
    test_set = set(test_idx)
    train_bags = [b for i, b in enumerate(ds.bags) if i not in test_set]
    test_bags = [ds.bags[i] for i in test_idx]
    train_ds = BagDataset(train_bags, dim=ds.dim)

    pmap = None
    if pca_dims is not None:
        pmap = pca_fit(train_ds.stacked_instances(), pca_dims)
        train_ds = pca_apply(pmap, train_ds)
        test_bags = pca_apply(pmap, BagDataset(test_bags, dim=ds.dim)).bags
    if expand_train:
        train_ds = naive_expand(train_ds)

    # The initialization seed is part of the experiment protocol and is held
    # fixed across folds; only the training stream (presentation order,
    # dropout masks) is re-derived per fold.
    tcfg = replace(train_config, seed=derive_seed(seed, fold_index + 1))
    model = init_model(train_ds, rules, init)
    model, report = train(model, train_ds, tcfg)

    scores = [(b.bag_id, predict(model, b), b.label) for b in test_bags]
    correct = sum(1 for _, s, t in scores
                  if classify(s, threshold) == classify(t, threshold))
    accuracy = correct / len(scores)
    fold = FoldResult(fold_index, [b.bag_id for b in test_bags], accuracy,
                      report.rmse[-1], report.epochs, report.stop_reason, model)
    return fold, scores


def cross_validate(ds: BagDataset, rules: int, train_config: TrainConfig,
                   folds: int = 10, seed: int = 0, init: InitConfig = None,
                   pca_dims=None, threshold: float = 0.5, threads: int = 1,
                   _expand_train: bool = False) -> CvResult:
    """Stratified k-fold cross-validation, deterministic given the seed.

    Each fold fits PCA (if requested), initializes, and trains on the
    training bags only; held-out bags are scored intact at bag level.
    """
    init = init or InitConfig()
    fold_rng = np.random.default_rng(derive_seed(seed, 0))
    fold_sets = _stratified_folds(ds, folds, fold_rng)

    args = [(ds, f, test_idx, rules, train_config, init, pca_dims, threshold,
             seed, _expand_train) for f, test_idx in enumerate(fold_sets)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda a: _run_fold(*a), args))
    else:
        outcomes = [_run_fold(*a) for a in args]

    fold_results = [f for f, _ in outcomes]
    scores = [row for _, fold_scores in outcomes for row in fold_scores]
    accuracies = [f.accuracy for f in fold_results]
    return CvResult(accuracies, float(np.mean(accuracies)),
                    float(np.std(accuracies)), fold_results, scores, seed)


def naive_baseline_cv(ds: BagDataset, rules: int, train_config: TrainConfig,
                      folds: int = 10, seed: int = 0, init: InitConfig = None,
                      pca_dims=None, threshold: float = 0.5,
                      threads: int = 1) -> CvResult:
    """Cross-validation of the naive baseline: training folds are flattened
    to single-instance bags inheriting the parent label, testing stays at
    bag level on the intact held-out bags."""
    return cross_validate(ds, rules, train_config, folds=folds, seed=seed,
                          init=init, pca_dims=pca_dims, threshold=threshold,
                          threads=threads, _expand_train=True)


@dataclass
class RocCurve:
    points: np.ndarray    # (k, 2) rows of (false-alarm rate, detection rate)
    auc: float


def roc(score_label_pairs) -> RocCurve:
    """ROC curve from (score, label) pairs via a descending threshold sweep.

    Tied scores move as a single step, so the trapezoidal AUC equals the
    tie-aware pair-counting (Mann-Whitney) statistic. Labels >= 0.5 count as
    positive.
    """
    pairs = [(float(s), float(l)) for s, l in score_label_pairs]
    if not pairs:
        raise ValidationError("roc needs at least one (score, label) pair")
    n_pos = sum(1 for _, l in pairs if l >= 0.5)
    n_neg = len(pairs) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("roc needs both a positive and a negative example")

    pairs.sort(key=lambda p: -p[0])
    far = [0.0]
    pd = [0.0]
    tp = fp = 0
    i = 0
    while i < len(pairs):
        j = i
        while j < len(pairs) and pairs[j][0] == pairs[i][0]:
            tp += pairs[j][1] >= 0.5
            fp += pairs[j][1] < 0.5
            j += 1
        far.append(fp / n_neg)
        pd.append(tp / n_pos)
        i = j
    points = np.column_stack([far, pd])
    auc = float(_trapezoid(points[:, 1], points[:, 0]))
    return RocCurve(points, auc)


@dataclass
class DropoutComparison:
    """Per-epoch SSE traces of two runs from one initialization: with rule
    dropout during training and without. Traces are recorded dropout-free (no
    mask sampling); the dropout arm uses the keep-probability output scaling
    that defines inference for a dropout-trained network, which cancels the
    keep_p bias its training target carries."""

    keep_p: float
    seed: int
    test_ids: list
    train_sse_dropout: list = field(default_factory=list)
    test_sse_dropout: list = field(default_factory=list)
    train_sse_plain: list = field(default_factory=list)
    test_sse_plain: list = field(default_factory=list)


def _sse(model, bags, keep_p: float) -> float:
    return float(sum((b.label - predict_with_dropout_scaling(model, b, keep_p)) ** 2
                     for b in bags))


def dropout_comparison(ds: BagDataset, rules: int, train_config: TrainConfig,
                       keep_p: float, split_ratio: float = 0.9,
                       seed: int = 0, init: InitConfig = None) -> DropoutComparison:
    """Train twice from the same initialization and seed, once with rule
    dropout at keep_p and once without, on a stratified train/test split."""
    if not (0.0 < split_ratio < 1.0):
        raise ValidationError(f"split_ratio must be in (0, 1), got {split_ratio}")
    if not (0.0 < keep_p <= 1.0):
        raise ValidationError(f"keep_p must be in (0, 1], got {keep_p}")
    init = init or InitConfig()

    rng = np.random.default_rng(derive_seed(seed, 100))
    groups = {}
    for i, bag in enumerate(ds.bags):
        groups.setdefault(bag.label, []).append(i)
    train_idx, test_idx = [], []
    for label in sorted(groups):
        order = rng.permutation(groups[label])
        n_test = max(1, round((1.0 - split_ratio) * len(order)))
        if n_test >= len(order):
            raise ValidationError(f"label {label}: split leaves no training bags")
        test_idx.extend(int(i) for i in order[:n_test])
        train_idx.extend(int(i) for i in order[n_test:])
    train_bags = [ds.bags[i] for i in sorted(train_idx)]
    test_bags = [ds.bags[i] for i in sorted(test_idx)]
    train_ds = BagDataset(train_bags, dim=ds.dim)

    icfg = replace(init, seed=derive_seed(seed, 101))
    base = init_model(train_ds, rules, icfg)
    result = DropoutComparison(keep_p, seed, [b.bag_id for b in test_bags])

    for arm_p, train_trace, test_trace in (
            (keep_p, result.train_sse_dropout, result.test_sse_dropout),
            (1.0, result.train_sse_plain, result.test_sse_plain)):
        tcfg = replace(train_config, dropout_p=arm_p, seed=derive_seed(seed, 102))

        def record(epoch, model, _p=arm_p, _tr=train_trace, _te=test_trace):
            _tr.append(_sse(model, train_bags, _p))
            _te.append(_sse(model, test_bags, _p))

        train(base.copy(), train_ds, tcfg, on_epoch=record)
    return result
