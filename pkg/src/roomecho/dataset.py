"""Labeled fingerprint corpora: CSV persistence, filtering, normalization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError
from .features import FEATURE_NAMES

NOISE_CONDITIONS = ("quiet", "noisy")
_META_COLUMNS = ("label", "visit_id", "noise_condition", "position_id")


@dataclass(frozen=True)
class RoomLabel:
    """A room and how it is used; ``space_kind`` is "closed" or "open"."""

    name: str
    space_kind: str = "closed"
    notes: str = ""

    def __post_init__(self):
        if self.space_kind not in ("closed", "open"):
            raise ValueError(f"space_kind must be closed|open, got {self.space_kind!r}")


@dataclass(frozen=True)
class Normalization:
    """Per-feature z-score parameters, fit on training rows only."""

    mean: np.ndarray
    std: np.ndarray
    scaled: np.ndarray  # bool mask; zero-variance features pass through

    def to_jsonable(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "scaled": self.scaled.tolist(),
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "Normalization":
        return cls(
            mean=np.asarray(obj["mean"], dtype=np.float64),
            std=np.asarray(obj["std"], dtype=np.float64),
            scaled=np.asarray(obj["scaled"], dtype=bool),
        )


@dataclass(eq=False)
class LabeledDataset:
    """Feature matrix plus per-row labels and collection metadata.

    Treated as immutable: filtering and normalization return new datasets.
    """

    features: np.ndarray
    labels: list[str]
    visit_ids: list[str]
    noise_conditions: list[str]
    position_ids: list[str]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    normalization: Normalization | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n = self.features.shape[0]
        for name in ("labels", "visit_ids", "noise_conditions", "position_ids"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{self.features.shape[1]} feature columns but "
                f"{len(self.feature_names)} names"
            )
        for cond in self.noise_conditions:
            if cond not in NOISE_CONDITIONS:
                raise ValueError(f"unknown noise_condition {cond!r}")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_names(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices)
        if indices.dtype == bool:
            indices = np.flatnonzero(indices)
        return LabeledDataset(
            features=self.features[indices].copy(),
            labels=[self.labels[i] for i in indices],
            visit_ids=[self.visit_ids[i] for i in indices],
            noise_conditions=[self.noise_conditions[i] for i in indices],
            position_ids=[self.position_ids[i] for i in indices],
            feature_names=self.feature_names,
            normalization=self.normalization,
        )

    def filter(
        self,
        visit: str | None = None,
        noise: str | None = None,
        label: str | None = None,
    ) -> "LabeledDataset":
        """Rows matching every given (visit_id, noise_condition, label) value."""
        mask = np.ones(len(self), dtype=bool)
        if visit is not None:
            mask &= np.array([v == visit for v in self.visit_ids])
        if noise is not None:
            mask &= np.array([c == noise for c in self.noise_conditions])
        if label is not None:
            mask &= np.array([l == label for l in self.labels])
        return self.subset(mask)


def save_dataset(ds: LabeledDataset, path) -> None:
    """Write the corpus CSV: feature columns, then label/visit/noise/position."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + list(_META_COLUMNS))
        for i in range(len(ds)):
            row = [f"{v:.17g}" for v in ds.features[i]]
            row += [ds.labels[i], ds.visit_ids[i], ds.noise_conditions[i],
                    ds.position_ids[i]]
            writer.writerow(row)


def load_dataset(path) -> LabeledDataset:
    """Read a corpus CSV back; exact inverse of :func:`save_dataset`."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file, expected a header row")
        if len(header) < len(_META_COLUMNS) + 1:
            raise DatasetFormatError(f"{path}: header has only {len(header)} columns")
        if tuple(header[-len(_META_COLUMNS):]) != _META_COLUMNS:
            raise DatasetFormatError(
                f"{path}: last header columns must be {', '.join(_META_COLUMNS)}"
            )
        feature_names = tuple(header[:-len(_META_COLUMNS)])
        n_cols = len(header)

        features, labels, visits, noises, positions = [], [], [], [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DatasetFormatError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {n_cols}"
                )
            try:
                values = np.array(row[:len(feature_names)], dtype=np.float64)
            except ValueError as exc:
                raise DatasetFormatError(f"{path}: row {row_no}: {exc}") from exc
            if not np.all(np.isfinite(values)):
                raise DatasetFormatError(f"{path}: row {row_no}: non-finite feature value")
            label, visit, noise, position = row[len(feature_names):]
            if noise not in NOISE_CONDITIONS:
                raise DatasetFormatError(
                    f"{path}: row {row_no}: unknown noise_condition {noise!r}"
                )
            features.append(values)
            labels.append(label)
            visits.append(visit)
            noises.append(noise)
            positions.append(position)

    matrix = (np.vstack(features) if features
              else np.empty((0, len(feature_names)), dtype=np.float64))
    return LabeledDataset(
        features=matrix,
        labels=labels,
        visit_ids=visits,
        noise_conditions=noises,
        position_ids=positions,
        feature_names=feature_names,
    )


def zscore_fit(ds: LabeledDataset) -> Normalization:
    """Per-feature mean/std from the given (training) rows.

    Zero-variance features are flagged and later passed through unscaled
    rather than divided by zero.
    """
    if len(ds) < 2:
        raise ValueError("need at least 2 rows to fit a normalization")
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    return Normalization(mean=mean, std=std, scaled=std > 0.0)


def zscore_apply(ds: LabeledDataset, norm: Normalization) -> LabeledDataset:
    """Apply a fitted normalization to any dataset (training or held-out)."""
    if norm.mean.shape != (ds.n_features,):
        raise ValueError("normalization dimensionality does not match dataset")
    transformed = ds.features.copy()
    m = norm.scaled
    transformed[:, m] = (transformed[:, m] - norm.mean[m]) / norm.std[m]
    out = ds.subset(np.arange(len(ds)))
    out.features = transformed
    out.normalization = norm
    return out
