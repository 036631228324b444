"""File formats.

Bag CSV: header `bag_id,label,f1,...,fD`, one instance per row. Rows of a
bag need not be contiguous; bags keep their first-appearance order and every
row of a bag must repeat the same label. Lines starting with `#` (used to
echo the effective configuration into artifacts) and blank lines are skipped.
Floats are written with 17 significant digits so a write/read round-trip is
bit-exact.

Model JSON: versioned document
  {"version": 1, "D": ..., "order": ..., "alpha_premise": ...,
   "alpha_consequent": ..., "rules": [{"c": [...], "sigma": [...], "b": [...]}]}
with an optional "pca" member {"mean", "basis", "explained"} and an optional
"meta" member (ignored on load). Unknown versions are rejected.
"""

import csv
import io
import json
import math

import numpy as np

from .bags import Bag, BagDataset, validate_dataset
from .errors import DataError, FormatError
from .initialization import PcaMap
from .model import MiAnfisModel

MODEL_FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _meta_lines(meta) -> str:
    if not meta:
        return ""
    return "".join(f"# {key}={meta[key]}\n" for key in meta)


def read_bags(path) -> BagDataset:
    """Parse a bag CSV file into a validated BagDataset."""
    with open(path, "r", newline="") as fh:
        numbered = [(n, line) for n, line in enumerate(fh, start=1)
                    if line.strip() and not line.lstrip().startswith("#")]
    if not numbered:
        raise FormatError(f"{path}: missing header row 'bag_id,label,f1,...'")

    header_no, header_line = numbered[0]
    header = next(csv.reader([header_line]))
    if len(header) < 3 or header[0].strip() != "bag_id" or header[1].strip() != "label":
        raise FormatError(
            f"{path}:{header_no}: expected header 'bag_id,label,f1,...', "
            f"got {header_line.strip()!r}")
    dim = len(header) - 2

    order = []
    labels = {}
    rows = {}
    for line_no, line in numbered[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != dim + 2:
            raise FormatError(
                f"{path}:{line_no}: expected {dim + 2} columns, got {len(fields)}")
        bag_id = fields[0]
        try:
            label = float(fields[1])
        except ValueError:
            raise FormatError(
                f"{path}:{line_no}: column 'label' is not a number: {fields[1]!r}")
        feats = []
        for col, raw in enumerate(fields[2:], start=1):
            try:
                feats.append(float(raw))
            except ValueError:
                raise FormatError(
                    f"{path}:{line_no}: column 'f{col}' is not a number: {raw!r}")
        if bag_id not in labels:
            order.append(bag_id)
            labels[bag_id] = label
            rows[bag_id] = []
        elif labels[bag_id] != label and not (
                math.isnan(labels[bag_id]) and math.isnan(label)):
            raise DataError(
                f"{path}:{line_no}: bag {bag_id} has inconsistent labels "
                f"({_fmt(labels[bag_id])} vs {_fmt(label)})")
        rows[bag_id].append(feats)

    if not order:
        raise DataError(f"{path}: no data rows")
    ds = BagDataset([Bag(b, labels[b], np.array(rows[b])) for b in order], dim=dim)
    problems = validate_dataset(ds)
    if problems:
        raise DataError(f"{path}: " + "; ".join(problems))
    return ds


def write_bags(ds: BagDataset, path, meta=None):
    """Write a BagDataset in the bag CSV schema (bag order, instance order)."""
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bag_id", "label"] + [f"f{d + 1}" for d in range(ds.dim)])
    for bag in ds.bags:
        for row in bag.instances:
            writer.writerow([bag.bag_id, _fmt(bag.label)] + [_fmt(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def save_model(model: MiAnfisModel, path, pca: PcaMap = None, meta=None):
    """Serialize a model (and optional PCA projection) as versioned JSON."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "D": model.dim,
        "order": model.order,
        "alpha_premise": model.alpha_premise,
        "alpha_consequent": model.alpha_consequent,
        "rules": [{"c": model.centers[i].tolist(),
                   "sigma": model.sigmas[i].tolist(),
                   "b": model.coeffs[i].tolist()}
                  for i in range(model.n_rules)],
    }
    if pca is not None:
        doc["pca"] = {"mean": pca.mean.tolist(),
                      "basis": pca.basis.tolist(),
                      "explained": pca.explained.tolist()}
    if meta:
        doc["meta"] = meta
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Load (model, pca-or-None) from a model JSON file."""
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})")
    if not isinstance(doc, dict) or "version" not in doc:
        raise FormatError(f"{path}: missing 'version' field")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported model format version {doc['version']!r} "
            f"(expected {MODEL_FORMAT_VERSION})")
    try:
        dim = int(doc["D"])
        rules = doc["rules"]
        centers = np.array([r["c"] for r in rules], dtype=float)
        sigmas = np.array([r["sigma"] for r in rules], dtype=float)
        coeffs = np.array([r["b"] for r in rules], dtype=float)
        if centers.shape != (len(rules), dim) or coeffs.shape != (len(rules), dim + 1):
            raise FormatError(
                f"{path}: rule arrays inconsistent with D={dim}")
        model = MiAnfisModel(centers, sigmas, coeffs,
                             float(doc["alpha_premise"]),
                             float(doc["alpha_consequent"]),
                             str(doc["order"]))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed model document ({exc})")

    pca = None
    if "pca" in doc:
        try:
            pca = PcaMap(np.array(doc["pca"]["mean"], dtype=float),
                         np.array(doc["pca"]["basis"], dtype=float),
                         np.array(doc["pca"]["explained"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed pca member ({exc})")
        if pca.basis.shape[0] != dim and pca.basis.shape[1] != dim:
            raise FormatError(f"{path}: pca basis inconsistent with D={dim}")
    return model, pca


def write_train_report(report, path, meta=None):
    """TrainReport as CSV: epoch,rmse."""
    with open(path, "w", newline="") as fh:
        fh.write(_meta_lines(meta))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "rmse"])
        for epoch, rmse in enumerate(report.rmse, start=1):
            writer.writerow([epoch, _fmt(rmse)])


def write_scores(rows, path, meta=None):
    """Score rows (bag_id, score, class) as CSV."""
    with open(path, "w", newline="") as fh:
        fh.write(_meta_lines(meta))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bag_id", "score", "class"])
        for bag_id, score, cls in rows:
            writer.writerow([bag_id, _fmt(score), cls])


def write_cv_result(cv, path, meta=None):
    """CvResult as CSV: one row per fold plus a trailing summary row."""
    with open(path, "w", newline="") as fh:
        fh.write(_meta_lines(meta))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "n_test", "accuracy", "rmse_final",
                         "epochs", "stop_reason"])
        for f in cv.folds:
            writer.writerow([f.index, len(f.test_ids), _fmt(f.accuracy),
                             _fmt(f.rmse_final), f.epochs, f.stop_reason])
        writer.writerow(["mean", "", _fmt(cv.mean_accuracy),
                         "", "", f"std={_fmt(cv.std_accuracy)}"])


def write_roc(curve, path, meta=None):
    """RocCurve as CSV: far,pd (the AUC goes into the meta lines)."""
    merged = dict(meta or {})
    merged["auc"] = _fmt(curve.auc)
    with open(path, "w", newline="") as fh:
        fh.write(_meta_lines(merged))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["far", "pd"])
        for far, pd in curve.points:
            writer.writerow([_fmt(far), _fmt(pd)])


def write_dropout_traces(cmp, path, meta=None):
    """DropoutComparison as CSV: epoch plus the four SSE traces."""
    with open(path, "w", newline="") as fh:
        fh.write(_meta_lines(meta))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_sse_dropout", "test_sse_dropout",
                         "train_sse_plain", "test_sse_plain"])
        n = max(len(cmp.train_sse_dropout), len(cmp.train_sse_plain))
        for i in range(n):
            def cell(trace):
                return _fmt(trace[i]) if i < len(trace) else ""
            writer.writerow([i + 1, cell(cmp.train_sse_dropout),
                             cell(cmp.test_sse_dropout),
                             cell(cmp.train_sse_plain),
                             cell(cmp.test_sse_plain)])
