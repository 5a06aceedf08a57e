"""Classifiers, cross-validation, divergences, permutation test, SFFS."""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from roomecho.classify import (
    ClassifierModel,
    ConfusionMatrix,
    DiscreteDistribution,
    fit,
    js_divergence,
    kfold_cv,
    kl_divergence,
    load_model,
    permutation_test,
    permutation_test_joint,
    predict,
    predict_batch,
    save_model,
    sffs,
    stratified_folds,
)
from roomecho.dataset import LabeledDataset
from roomecho.features import FEATURE_NAMES


def toy_dataset(features, labels):
    features = np.asarray(features, dtype=np.float64)
    n, f = features.shape
    names = tuple(f"f{i}" for i in range(f))
    return LabeledDataset(
        features, list(labels), ["1"] * n, ["quiet"] * n, ["0"] * n,
        feature_names=names,
    )


def gaussian_blobs(means, n_per_class, sigma=1.0, seed=0):
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for c, mu in enumerate(means):
        rows.append(rng.normal(loc=mu, scale=sigma,
                               size=(n_per_class, len(mu))))
        labels += [f"c{c}"] * n_per_class
    return toy_dataset(np.vstack(rows), labels)


# --- brute-force reference classifiers ---------------------------------------

def nb_reference_predict(model, x):
    """Scalar-loop Gaussian naive Bayes for cross-checking."""
    best_label, best_score = None, -math.inf
    means = model.params["means"]
    variances = model.params["variances"]
    log_priors = model.params["log_priors"]
    for c, label in enumerate(model.labels):
        score = log_priors[c]
        for j in range(len(x)):
            v = variances[c][j]
            score += -0.5 * (math.log(2 * math.pi * v) + (x[j] - means[c][j]) ** 2 / v)
        if score > best_score:
            best_label, best_score = label, score
    return best_label


def knn_reference_predict(model, x):
    """Sorted-list k-nearest-neighbors with the documented tie-breaking."""
    train_x, train_y, k = model.params["train_x"], model.params["train_y"], model.params["k"]
    dists = sorted(
        (math.dist(x, row), i, int(train_y[i])) for i, row in enumerate(train_x)
    )[: min(k, len(train_x))]
    votes = {}
    for d, _, c in dists:
        votes.setdefault(c, []).append(d)
    best = max(len(v) for v in votes.values())
    tied = [c for c, v in votes.items() if len(v) == best]
    if len(tied) > 1:
        means = {c: sum(votes[c]) / len(votes[c]) for c in tied}
        lo = min(means.values())
        tied = [c for c in tied if means[c] == lo]
    return model.labels[min(tied)]


class TestClassifiers:
    def test_knn_k1_training_point_is_its_own_label(self):
        ds = gaussian_blobs([(0, 0), (5, 5)], 10)
        model = fit("knn", ds, k=1)
        for i in range(len(ds)):
            assert predict(model, ds.features[i]) == ds.labels[i]

    def test_gaussian_nb_separated_1d(self):
        ds = toy_dataset([[0.0], [0.1], [-0.1], [10.0], [9.9], [10.1]],
                         ["a", "a", "a", "b", "b", "b"])
        model = fit("gaussian_nb", ds, normalize=False)
        assert predict(model, np.array([9.0])) == "b"
        assert predict(model, np.array([1.0])) == "a"

    @pytest.mark.parametrize("kind", ["gaussian_nb", "knn"])
    def test_agrees_with_reference_on_random_queries(self, kind):
        ds = gaussian_blobs([(0, 0, 0), (3, 1, -2), (-2, 4, 1)], 30, seed=5)
        model = fit(kind, ds, k=5)
        rng = np.random.default_rng(17)
        queries = rng.normal(scale=3.0, size=(200, 3))
        # references work in the model's normalized space
        norm = model.normalization
        scaled_queries = (queries - norm.mean) / norm.std
        reference = (nb_reference_predict if kind == "gaussian_nb"
                     else knn_reference_predict)
        got = predict_batch(model, queries)
        expected = [reference(model, q) for q in scaled_queries]
        assert got == expected

    def test_feature_subset_respected(self):
        ds = gaussian_blobs([(0, 100), (5, 100)], 20, seed=2)
        model = fit("gaussian_nb", ds, feature_subset=(0,))
        assert predict(model, np.array([0.1, -1000.0])) == "c0"

    def test_knn_affine_invariance_after_refit(self):
        ds = gaussian_blobs([(0, 0), (4, 2), (1, 5)], 15, seed=3)
        rng = np.random.default_rng(8)
        queries = rng.normal(scale=2.0, size=(50, 2))
        base = predict_batch(fit("knn", ds), queries)

        rescaled = ds.subset(np.arange(len(ds)))
        rescaled.features = ds.features * np.array([7.0, -0.25]) + np.array([3.0, 11.0])
        scaled_queries = queries * np.array([7.0, -0.25]) + np.array([3.0, 11.0])
        again = predict_batch(fit("knn", rescaled), scaled_queries)
        assert base == again

    def test_dimension_mismatch(self):
        ds = gaussian_blobs([(0, 0), (5, 5)], 5)
        model = fit("knn", ds)
        with pytest.raises(ValueError):
            predict(model, np.array([1.0, 2.0, 3.0]))

    def test_model_json_round_trip(self, tmp_path):
        ds = gaussian_blobs([(0, 0), (5, 5)], 10, seed=4)
        for kind in ("gaussian_nb", "knn"):
            model = fit(kind, ds)
            path = tmp_path / f"{kind}.json"
            save_model(model, path)
            back = load_model(path)
            queries = np.random.default_rng(0).normal(size=(20, 2), scale=4.0)
            assert predict_batch(model, queries) == predict_batch(back, queries)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            fit("svm", gaussian_blobs([(0,), (1,)], 3))


class TestKfold:
    def test_paper_style_confusion_arithmetic(self):
        # aggregated counts with the reported per-class diagonal: the
        # overall accuracy must come out at trace/total = 97.8%
        diag = (98, 97, 100, 93, 100, 99, 94, 99, 98, 100)
        labels = [f"r{i}" for i in range(10)]
        counts = np.zeros((10, 10), dtype=int)
        for i, d in enumerate(diag):
            counts[i, i] = d
            counts[i, (i + 1) % 10] = 100 - d
        cm = ConfusionMatrix(labels, counts)
        assert cm.total == 1000
        assert cm.overall_accuracy() == pytest.approx(0.978)
        assert cm.per_class_accuracy()["r3"] == pytest.approx(0.93)

    def test_perfectly_separable_two_classes(self):
        ds = gaussian_blobs([(0.0,), (50.0,)], 30, sigma=0.5, seed=1)
        _, accuracy, _ = kfold_cv(ds, 5, "gaussian_nb", seed=0)
        assert accuracy == 1.0

    def test_identical_distributions_near_chance(self):
        rng = np.random.default_rng(11)
        features = rng.normal(size=(800, 2))
        labels = ["a"] * 400 + ["b"] * 400
        ds = toy_dataset(features, labels)
        _, accuracy, _ = kfold_cv(ds, 10, "gaussian_nb", seed=0)
        assert abs(accuracy - 0.5) < 0.05

    def test_stratified_folds_balanced(self):
        labels = ["a"] * 50 + ["b"] * 30
        folds = stratified_folds(labels, 5, seed=0)
        for fold in range(5):
            mask = folds == fold
            assert sum(mask[:50]) == 10
            assert sum(mask[50:]) == 6

    def test_class_smaller_than_k_rejected(self):
        ds = gaussian_blobs([(0,), (5,)], 3)
        with pytest.raises(ValueError):
            kfold_cv(ds, 5, "gaussian_nb")

    def test_seeded_runs_reproduce(self):
        ds = gaussian_blobs([(0, 0), (2, 1)], 25, seed=9)
        a = kfold_cv(ds, 5, "knn", seed=3)
        b = kfold_cv(ds, 5, "knn", seed=3)
        assert np.array_equal(a[0].counts, b[0].counts)
        assert a[1] == b[1]

    def test_trace_total_identity(self):
        ds = gaussian_blobs([(0, 0), (1.5, 0.5), (0.5, 2)], 20, seed=13)
        cm, accuracy, _ = kfold_cv(ds, 4, "gaussian_nb", seed=1)
        assert abs(accuracy - np.trace(cm.counts) / cm.counts.sum()) < 1e-12


class TestDivergence:
    def test_kl_self_is_zero(self):
        p = np.array([0.2, 0.3, 0.5])
        assert kl_divergence(p, p) == 0.0

    def test_kl_direct_formula(self):
        p = np.array([0.5, 0.5, 0.0])
        q = np.array([0.25, 0.5, 0.25])
        expected = 0.5 * math.log(0.5 / 0.25)
        assert kl_divergence(p, q) == pytest.approx(expected)

    def test_kl_infinite_when_support_escapes(self):
        assert kl_divergence(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == math.inf

    def test_js_two_point_ln2(self):
        value = js_divergence([np.array([1.0, 0.0]), np.array([0.0, 1.0])],
                              [0.5, 0.5])
        assert value == pytest.approx(math.log(2.0))

    def test_js_identical_distributions_zero(self):
        p = np.array([0.1, 0.6, 0.3])
        value = js_divergence([p, p, p], [0.2, 0.5, 0.3])
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_js_nonnegative_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            k = rng.integers(2, 5)
            ps = [rng.dirichlet(np.ones(8)) for _ in range(k)]
            w = rng.dirichlet(np.ones(k))
            assert js_divergence(ps, w) >= 0.0

    def test_distribution_type_checks_bins(self):
        edges = np.array([0.0, 1.0, 2.0])
        a = DiscreteDistribution(edges, np.array([0.5, 0.5]))
        b = DiscreteDistribution(edges + 1.0, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            kl_divergence(a, b)

    def test_distribution_from_samples(self):
        edges = np.linspace(0.0, 1.0, 5)
        dist = DiscreteDistribution.from_samples([0.1, 0.3, 0.9, 1.0], edges)
        assert dist.probabilities.sum() == pytest.approx(1.0)
        assert dist.probabilities[3] == pytest.approx(0.5)  # right edge inclusive

    def test_bad_weights(self):
        p = np.array([0.5, 0.5])
        with pytest.raises(ValueError):
            js_divergence([p, p], [0.9, 0.3])


class TestPermutation:
    def test_fully_separated_minimal_p(self):
        values = np.concatenate([np.zeros(20), np.ones(20) * 10, np.ones(20) * 20])
        labels = ["a"] * 20 + ["b"] * 20 + ["c"] * 20
        result = permutation_test(values, labels, n_perm=4999, seed=0)
        assert result.p_value == pytest.approx(1.0 / 5000.0)
        assert result.p_value == pytest.approx(2e-4)

    def test_null_true_p_uniform(self):
        rng = np.random.default_rng(100)
        p_values = []
        labels = ["a"] * 30 + ["b"] * 30
        for rep in range(200):
            values = rng.normal(size=60)
            result = permutation_test(values, labels, n_perm=99, seed=rep)
            p_values.append(result.p_value)
        assert kstest(p_values, "uniform").pvalue > 0.01

    def test_identical_distributions_cannot_reject(self):
        rng = np.random.default_rng(42)
        values = rng.normal(size=200)
        labels = ["a"] * 100 + ["b"] * 100
        result = permutation_test(values, labels, n_perm=500, seed=1)
        spread = 4.0 * result.null_js.std()
        assert result.observed_js <= result.null_js.mean() + spread

    def test_p_value_bounds(self):
        values = np.arange(40.0)
        labels = ["a"] * 20 + ["b"] * 20
        for seed in range(5):
            result = permutation_test(values, labels, n_perm=50, seed=seed)
            assert 0.0 < result.p_value <= 1.0
            assert result.p_value >= 1.0 / 51.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            permutation_test(np.arange(10.0), ["a"] * 10, n_perm=10)

    def test_constant_feature_rejected(self):
        with pytest.raises(ValueError):
            permutation_test(np.ones(10), ["a"] * 5 + ["b"] * 5, n_perm=10)

    def test_joint_statistic(self):
        rng = np.random.default_rng(7)
        informative = np.concatenate([rng.normal(0, 1, 40), rng.normal(4, 1, 40)])
        noise = rng.normal(size=80)
        matrix = np.column_stack([informative, noise])
        labels = ["a"] * 40 + ["b"] * 40
        result = permutation_test_joint(matrix, labels, n_perm=199, seed=0)
        assert result.p_value < 0.05

    def test_seeded_reproducible(self):
        values = np.random.default_rng(0).normal(size=60)
        labels = ["a"] * 30 + ["b"] * 30
        a = permutation_test(values, labels, n_perm=100, seed=5)
        b = permutation_test(values, labels, n_perm=100, seed=5)
        assert a.p_value == b.p_value
        assert np.array_equal(a.null_js, b.null_js)


def planted_dataset(seed, n_noise=7, n_per_class=20, spacing=10.0):
    """8 classes at the corners of a cube spanned by 3 informative
    features; the rest is pure noise. No single feature or pair separates
    everything, all three together do."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for corner in range(8):
        mu = [spacing * ((corner >> b) & 1) for b in range(3)]
        block = rng.normal(size=(n_per_class, 3 + n_noise))
        block[:, :3] += mu
        rows.append(block)
        labels += [f"corner{corner}"] * n_per_class
    return toy_dataset(np.vstack(rows), labels)


class TestSffs:
    def test_finds_planted_features(self):
        for seed in range(4):
            ds = planted_dataset(seed)
            result = sffs(ds, "gaussian_nb", k_folds=5, seed=seed)
            assert result.selected == (0, 1, 2)

    def test_selected_error_not_worse_than_full_set(self):
        ds = planted_dataset(1)
        result = sffs(ds, "gaussian_nb", k_folds=5, seed=1)
        _, full_accuracy, _ = kfold_cv(ds, 5, "gaussian_nb", seed=1)
        assert result.criterion() <= 1.0 - full_accuracy + 1e-12

    def test_max_features_one_returns_best_single(self):
        ds = planted_dataset(2)
        result = sffs(ds, "gaussian_nb", k_folds=5, seed=2, max_features=1)
        assert len(result.selected) == 1
        assert result.selected[0] in (0, 1, 2)

    def test_trace_criterion_non_increasing(self):
        ds = planted_dataset(3)
        result = sffs(ds, "gaussian_nb", k_folds=5, seed=3)
        values = [t["criterion"] for t in result.trace]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_backward_step_only_on_strict_improvement(self):
        ds = planted_dataset(4)
        result = sffs(ds, "gaussian_nb", k_folds=5, seed=4)
        removals = [t for t in result.trace if t["action"] == "remove"]
        values = [t["criterion"] for t in result.trace]
        for t in removals:
            i = result.trace.index(t)
            assert values[i] < values[i - 1]

    def test_deterministic(self):
        ds = planted_dataset(5)
        a = sffs(ds, "gaussian_nb", k_folds=5, seed=5)
        b = sffs(ds, "gaussian_nb", k_folds=5, seed=5)
        assert a.selected == b.selected
        assert a.trace == b.trace
