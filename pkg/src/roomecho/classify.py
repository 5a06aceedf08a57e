"""Room identification: classifiers, cross-validation, divergence tests, SFFS.

Two small classifiers are implemented in-repo (Gaussian naive Bayes and
k-nearest-neighbors) — enough to evaluate fingerprint separability without
dragging in a model zoo. Distinctiveness of single features is measured
with a histogram Jensen-Shannon divergence under a label-permutation test,
and feature subsets are chosen by sequential floating forward selection
driven by cross-validated misclassification rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import LabeledDataset, Normalization, zscore_apply, zscore_fit
from .features import FeatureVector

CLASSIFIER_KINDS = ("gaussian_nb", "knn")


# --- confusion matrix --------------------------------------------------------

@dataclass(eq=False)
class ConfusionMatrix:
    """Rows are true labels, columns predicted; entries are counts."""

    labels: list[str]
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ValueError(f"counts must be {n}x{n}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def zeros(cls, labels) -> "ConfusionMatrix":
        labels = list(labels)
        return cls(labels, np.zeros((len(labels), len(labels)), dtype=np.int64))

    def add(self, true_label: str, predicted_label: str, n: int = 1) -> None:
        self.counts[self.labels.index(true_label), self.labels.index(predicted_label)] += n

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def overall_accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def per_class_accuracy(self) -> dict[str, float]:
        out = {}
        for i, label in enumerate(self.labels):
            row = self.counts[i].sum()
            out[label] = float(self.counts[i, i] / row) if row else math.nan
        return out

    def row_normalized(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            return np.where(rows > 0, self.counts / rows, 0.0)

    def to_text(self) -> str:
        width = max(max(len(l) for l in self.labels), 6)
        head = " " * (width + 1) + " ".join(f"{l[:width]:>{width}}" for l in self.labels)
        lines = [head]
        for i, label in enumerate(self.labels):
            cells = " ".join(f"{c:>{width}d}" for c in self.counts[i])
            lines.append(f"{label[:width]:>{width}} {cells}")
        lines.append(f"overall accuracy: {100.0 * self.overall_accuracy():.1f}%")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + self.labels)
            for i, label in enumerate(self.labels):
                writer.writerow([label] + self.counts[i].tolist())


# --- classifiers -------------------------------------------------------------

@dataclass(eq=False)
class ClassifierModel:
    """A fitted classifier: kind, feature subset, z-scoring, parameters."""

    kind: str
    labels: list[str]
    feature_subset: tuple[int, ...]
    normalization: Normalization | None
    params: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        params = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in self.params.items()
        }
        return {
            "kind": self.kind,
            "labels": self.labels,
            "feature_subset": list(self.feature_subset),
            "normalization": None
            if self.normalization is None
            else self.normalization.to_jsonable(),
            "params": params,
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "ClassifierModel":
        params = dict(obj["params"])
        for key in ("means", "variances", "log_priors", "train_x"):
            if key in params:
                params[key] = np.asarray(params[key], dtype=np.float64)
        if "train_y" in params:
            params["train_y"] = np.asarray(params["train_y"], dtype=np.int64)
        norm = obj.get("normalization")
        return cls(
            kind=obj["kind"],
            labels=list(obj["labels"]),
            feature_subset=tuple(obj["feature_subset"]),
            normalization=None if norm is None else Normalization.from_jsonable(norm),
            params=params,
        )


def save_model(model: ClassifierModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_jsonable(), indent=2, sort_keys=True))


def load_model(path) -> ClassifierModel:
    return ClassifierModel.from_jsonable(json.loads(Path(path).read_text()))


def fit(
    kind: str,
    ds: LabeledDataset,
    feature_subset=None,
    k: int = 5,
    var_floor: float = 1e-9,
    normalize: bool = True,
) -> ClassifierModel:
    """Fit a classifier on a dataset (z-scoring is fit here, on these rows).

    gaussian_nb stores per-class feature means/variances and log priors;
    knn stores the normalized training matrix itself.
    """
    if kind not in CLASSIFIER_KINDS:
        raise ValueError(f"kind must be one of {CLASSIFIER_KINDS}")
    if len(ds) == 0:
        raise ValueError("cannot fit on an empty dataset")
    if feature_subset is None:
        feature_subset = tuple(range(ds.n_features))
    feature_subset = tuple(int(i) for i in feature_subset)
    if not feature_subset:
        raise ValueError("feature_subset must not be empty")
    if min(feature_subset) < 0 or max(feature_subset) >= ds.n_features:
        raise ValueError("feature_subset index out of range")

    norm = zscore_fit(ds) if normalize else None
    x = (zscore_apply(ds, norm) if norm else ds).features[:, feature_subset]
    labels = sorted(set(ds.labels))
    y = np.array([labels.index(l) for l in ds.labels], dtype=np.int64)

    if kind == "gaussian_nb":
        n_classes, n_feat = len(labels), len(feature_subset)
        means = np.zeros((n_classes, n_feat))
        variances = np.zeros((n_classes, n_feat))
        counts = np.zeros(n_classes)
        for c in range(n_classes):
            rows = x[y == c]
            if rows.shape[0] == 0:
                raise ValueError(f"class {labels[c]!r} has no training rows")
            means[c] = rows.mean(axis=0)
            variances[c] = rows.var(axis=0)
            counts[c] = rows.shape[0]
        # variance floor, relative to the largest feature variance, keeps
        # log-likelihoods finite for near-constant features
        overall_var = float(x.var(axis=0).max())
        variances += var_floor * (overall_var if overall_var > 0 else 1.0)
        params = {
            "means": means,
            "variances": variances,
            "log_priors": np.log(counts / counts.sum()),
        }
    else:
        params = {"k": int(k), "train_x": x, "train_y": y}

    return ClassifierModel(
        kind=kind,
        labels=labels,
        feature_subset=feature_subset,
        normalization=norm,
        params=params,
    )


def _query_matrix(model: ClassifierModel, queries: np.ndarray) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if model.normalization is not None:
        if queries.shape[1] != model.normalization.mean.size:
            raise ValueError(
                f"query has {queries.shape[1]} features, model expects "
                f"{model.normalization.mean.size}"
            )
    elif queries.shape[1] <= max(model.feature_subset):
        raise ValueError(
            f"query has {queries.shape[1]} features, model needs index "
            f"{max(model.feature_subset)}"
        )
    if model.normalization is not None:
        m = model.normalization.scaled
        queries = queries.copy()
        queries[:, m] = (queries[:, m] - model.normalization.mean[m]) / model.normalization.std[m]
    return queries[:, model.feature_subset]


def predict_batch(model: ClassifierModel, features: np.ndarray) -> list[str]:
    """Predict labels for a matrix of raw (unnormalized) feature rows."""
    x = _query_matrix(model, features)
    if x.shape[1] != len(model.feature_subset):
        raise ValueError("query dimensionality does not match the model")

    if model.kind == "gaussian_nb":
        means = model.params["means"]
        variances = model.params["variances"]
        log_priors = model.params["log_priors"]
        # log-likelihood per class, (n_queries, n_classes)
        ll = np.empty((x.shape[0], means.shape[0]))
        for c in range(means.shape[0]):
            ll[:, c] = log_priors[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * variances[c])
                + (x - means[c]) ** 2 / variances[c],
                axis=1,
            )
        winners = np.argmax(ll, axis=1)  # argmax takes the first (lowest label) tie
        return [model.labels[c] for c in winners]

    train_x, train_y, k = model.params["train_x"], model.params["train_y"], model.params["k"]
    k = min(k, train_x.shape[0])
    out = []
    n_classes = len(model.labels)
    for q in x:
        dist = np.sqrt(np.sum((train_x - q) ** 2, axis=1))
        # stable neighbor order: distance, then training index
        order = np.lexsort((np.arange(dist.size), dist))[:k]
        votes = np.bincount(train_y[order], minlength=n_classes)
        best = votes.max()
        tied = np.flatnonzero(votes == best)
        if tied.size > 1:
            mean_dist = np.array(
                [dist[order][train_y[order] == c].mean() for c in tied]
            )
            tied = tied[np.flatnonzero(mean_dist == mean_dist.min())]
        out.append(model.labels[int(tied[0])])  # remaining ties: label order
    return out


def predict(model: ClassifierModel, fv) -> str:
    """Predict the room label for one fingerprint."""
    if isinstance(fv, FeatureVector):
        fv = fv.as_array()
    return predict_batch(model, np.atleast_2d(fv))[0]


# --- cross-validation --------------------------------------------------------

def stratified_folds(labels: list[str], k: int, seed: int) -> np.ndarray:
    """Seeded stratified fold assignment; every class needs >= k rows."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    labels_arr = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels_arr.size, dtype=np.int64)
    for cls in sorted(set(labels)):
        rows = np.flatnonzero(labels_arr == cls)
        if rows.size < k:
            raise ValueError(
                f"class {cls!r} has {rows.size} rows; needs at least {k} for "
                f"{k}-fold stratified CV"
            )
        rows = rng.permutation(rows)
        fold_of[rows] = np.arange(rows.size) % k
    return fold_of


def kfold_cv(
    ds: LabeledDataset,
    n_folds: int,
    kind: str = "gaussian_nb",
    feature_subset=None,
    seed: int = 0,
    **fit_kwargs,
) -> tuple[ConfusionMatrix, float, dict[str, float]]:
    """Stratified k-fold cross-validation with per-fold normalization.

    The z-scoring is refit inside every training fold — test rows never
    leak into the scaling. Returns the aggregated confusion matrix, the
    overall accuracy (trace over total) and per-class accuracies.
    """
    fold_of = stratified_folds(ds.labels, n_folds, seed)
    labels = sorted(set(ds.labels))
    cm = ConfusionMatrix.zeros(labels)
    for fold in range(n_folds):
        test_mask = fold_of == fold
        model = fit(kind, ds.subset(~test_mask), feature_subset, **fit_kwargs)
        test = ds.subset(test_mask)
        for true_label, predicted in zip(test.labels, predict_batch(model, test.features)):
            cm.add(true_label, predicted)
    return cm, cm.overall_accuracy(), cm.per_class_accuracy()


# --- divergence --------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteDistribution:
    """A histogram normalized to a probability mass function."""

    bin_edges: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", np.asarray(self.bin_edges, dtype=np.float64))
        object.__setattr__(
            self, "probabilities", np.asarray(self.probabilities, dtype=np.float64)
        )
        if self.probabilities.size != self.bin_edges.size - 1:
            raise ValueError("need one probability per bin")
        if np.any(self.probabilities < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(self.probabilities.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def from_samples(cls, values, bin_edges) -> "DiscreteDistribution":
        counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=bin_edges)
        total = counts.sum()
        if total == 0:
            raise ValueError("no samples fall inside the bins")
        return cls(bin_edges=bin_edges, probabilities=counts / total)


def _probs(dist) -> np.ndarray:
    if isinstance(dist, DiscreteDistribution):
        return dist.probabilities
    return np.asarray(dist, dtype=np.float64)


def _check_same_bins(dists) -> None:
    edges = [d.bin_edges for d in dists if isinstance(d, DiscreteDistribution)]
    for e in edges[1:]:
        if e.shape != edges[0].shape or not np.array_equal(e, edges[0]):
            raise ValueError("distributions must share identical bin edges")


def kl_divergence(p, q) -> float:
    """KL(P || Q) in nats; 0*ln(0/q) = 0, and p>0 with q=0 gives +inf."""
    _check_same_bins([d for d in (p, q) if isinstance(d, DiscreteDistribution)])
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise ValueError("distributions must have the same number of bins")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def js_divergence(dists, weights=None) -> float:
    """Multi-distribution Jensen-Shannon divergence in nats.

    The weighted sum of each distribution's KL divergence to the weighted
    mixture. Finite for any inputs, since the mixture dominates every
    component.
    """
    dists = list(dists)
    if not dists:
        raise ValueError("need at least one distribution")
    _check_same_bins(dists)
    ps = [_probs(d) for d in dists]
    if weights is None:
        weights = np.full(len(ps), 1.0 / len(ps))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size != len(ps) or np.any(weights < 0):
        raise ValueError("need one non-negative weight per distribution")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    mixture = np.zeros_like(ps[0])
    for w, p in zip(weights, ps):
        if p.shape != mixture.shape:
            raise ValueError("distributions must have the same number of bins")
        mixture += w * p
    return float(sum(w * kl_divergence(p, mixture) for w, p in zip(weights, ps)))


# --- permutation test --------------------------------------------------------

@dataclass(eq=False)
class PermutationResult:
    observed_js: float
    p_value: float
    null_js: np.ndarray
    n_bins: int

    def summary(self) -> dict:
        return {
            "observed_js": self.observed_js,
            "p_value": self.p_value,
            "n_perm": int(self.null_js.size),
            "null_mean": float(self.null_js.mean()),
            "null_std": float(self.null_js.std()),
            "null_max": float(self.null_js.max()),
        }


def permutation_test(
    feature_column,
    labels,
    n_perm: int = 4999,
    seed: int = 0,
    n_bins: int = 32,
    smoothing: float = 1.0,
) -> PermutationResult:
    """Label-permutation test of one feature's distinctiveness.

    The statistic is the JS divergence between per-class histograms on
    shared equal-width bins over the pooled range, weighted by class
    frequency. Histogram counts get add-``smoothing`` regularization so no
    KL term is infinite; observed and permuted statistics use identical
    smoothing. The p-value uses the +1 convention, so its floor is
    ``1 / (n_perm + 1)``.
    """
    values = np.asarray(feature_column, dtype=np.float64)
    labels_arr = np.asarray(labels)
    if values.ndim != 1 or values.size != labels_arr.size:
        raise ValueError("feature_column and labels must be 1-D and equally long")
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    classes = sorted(set(labels_arr.tolist()))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        raise ValueError("constant feature has zero-width range")

    edges = np.linspace(lo, hi, n_bins + 1)
    # values never move between bins under label permutation, so bin
    # membership is computed once
    bin_of = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, n_bins - 1)
    y = np.array([classes.index(l) for l in labels_arr.tolist()], dtype=np.int64)
    n_classes = len(classes)
    class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    weights = class_counts / class_counts.sum()

    def js_of(y_perm: np.ndarray) -> float:
        counts = np.bincount(
            y_perm * n_bins + bin_of, minlength=n_classes * n_bins
        ).reshape(n_classes, n_bins).astype(np.float64)
        counts += smoothing
        probs = counts / counts.sum(axis=1, keepdims=True)
        mixture = weights @ probs
        terms = probs * np.log(probs / mixture)
        return float(np.sum(weights * terms.sum(axis=1)))

    observed = js_of(y)
    rng = np.random.default_rng(seed)
    null = np.empty(n_perm)
    for i in range(n_perm):
        null[i] = js_of(rng.permutation(y))
    p = (1.0 + float(np.count_nonzero(null >= observed))) / (1.0 + n_perm)
    return PermutationResult(observed_js=observed, p_value=p, null_js=null, n_bins=n_bins)


def permutation_test_joint(
    feature_matrix,
    labels,
    n_perm: int = 4999,
    seed: int = 0,
    n_bins: int = 32,
    smoothing: float = 1.0,
) -> PermutationResult:
    """Permutation test on the mean JS divergence across feature columns.

    Each permutation shuffles the labels once and scores every column, so
    the joint statistic respects the correlation between features.
    Constant columns carry no divergence and are skipped.
    """
    x = np.asarray(feature_matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("feature_matrix must be 2-D")
    labels_arr = np.asarray(labels)
    classes = sorted(set(labels_arr.tolist()))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    y = np.array([classes.index(l) for l in labels_arr.tolist()], dtype=np.int64)
    n_classes = len(classes)
    class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    weights = class_counts / class_counts.sum()

    bin_of_cols = []
    for col in range(x.shape[1]):
        lo, hi = float(x[:, col].min()), float(x[:, col].max())
        if lo == hi:
            continue
        edges = np.linspace(lo, hi, n_bins + 1)
        bin_of_cols.append(
            np.clip(np.searchsorted(edges, x[:, col], side="right") - 1, 0, n_bins - 1)
        )
    if not bin_of_cols:
        raise ValueError("every feature column is constant")

    def mean_js(y_perm: np.ndarray) -> float:
        total = 0.0
        for bin_of in bin_of_cols:
            counts = np.bincount(
                y_perm * n_bins + bin_of, minlength=n_classes * n_bins
            ).reshape(n_classes, n_bins).astype(np.float64)
            counts += smoothing
            probs = counts / counts.sum(axis=1, keepdims=True)
            mixture = weights @ probs
            total += float(np.sum(weights * (probs * np.log(probs / mixture)).sum(axis=1)))
        return total / len(bin_of_cols)

    observed = mean_js(y)
    rng = np.random.default_rng(seed)
    null = np.empty(n_perm)
    for i in range(n_perm):
        null[i] = mean_js(rng.permutation(y))
    p = (1.0 + float(np.count_nonzero(null >= observed))) / (1.0 + n_perm)
    return PermutationResult(observed_js=observed, p_value=p, null_js=null, n_bins=n_bins)


# --- feature selection -------------------------------------------------------

@dataclass(eq=False)
class SffsResult:
    selected: tuple[int, ...]
    trace: list[dict]

    def criterion(self) -> float:
        return self.trace[-1]["criterion"] if self.trace else math.nan


def sffs(
    ds: LabeledDataset,
    kind: str = "gaussian_nb",
    k_folds: int = 5,
    seed: int = 0,
    max_features: int | None = None,
    **fit_kwargs,
) -> SffsResult:
    """Sequential floating forward selection on CV misclassification rate.

    Forward steps add the single feature whose inclusion minimizes the
    cross-validated error (ties to the lower feature index); floating
    backward steps then drop features as long as each removal *strictly*
    improves the criterion. The search stops when no addition improves the
    current subset or ``max_features`` is reached. Fold assignment is
    fixed by the seed, so all candidate subsets are scored on identical
    splits.
    """
    n_features = ds.n_features
    if n_features < 2:
        raise ValueError("need at least 2 features to select from")
    if max_features is None:
        max_features = n_features
    if max_features < 1:
        raise ValueError("max_features must be >= 1")

    cache: dict[tuple[int, ...], float] = {}

    def error_of(subset: tuple[int, ...]) -> float:
        if subset not in cache:
            _, accuracy, _ = kfold_cv(
                ds, k_folds, kind, feature_subset=subset, seed=seed, **fit_kwargs
            )
            cache[subset] = 1.0 - accuracy
        return cache[subset]

    selected: list[int] = []
    current_error = math.inf
    trace: list[dict] = []

    while len(selected) < max_features:
        candidates = [f for f in range(n_features) if f not in selected]
        if not candidates:
            break
        scored = [(error_of(tuple(sorted(selected + [f]))), f) for f in candidates]
        best_error, best_feature = min(scored)  # ties resolve to lower index
        if best_error >= current_error:
            break
        selected.append(best_feature)
        current_error = best_error
        trace.append(
            {"action": "add", "feature": best_feature,
             "subset": tuple(sorted(selected)), "criterion": current_error}
        )

        while len(selected) > 1:
            scored = [
                (error_of(tuple(sorted(set(selected) - {f}))), f) for f in selected
            ]
            removal_error, removal_feature = min(scored)
            if removal_error >= current_error:
                break
            selected.remove(removal_feature)
            current_error = removal_error
            trace.append(
                {"action": "remove", "feature": removal_feature,
                 "subset": tuple(sorted(selected)), "criterion": current_error}
            )

    return SffsResult(selected=tuple(sorted(selected)), trace=trace)
