"""Dataset ingestion, splitting, per-device partitioning, and normalization.

The CSV schema is: feature columns, then a string ``label`` column, then an
integer ``subject`` column, with a header row. The activity profile pins the
feature count to 561; the generic profile accepts any width.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, PartitionError

ACTIVITY_FEATURES = 561
MAX_SYNTHETIC_DIM = 8

STRATEGIES = ("iid-shuffle", "by-label", "by-subject")


@dataclass
class Dataset:
    records: np.ndarray  # (m, d) float64
    labels: np.ndarray  # (m,) str
    subjects: np.ndarray  # (m,) int

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=object)
        self.subjects = np.asarray(self.subjects, dtype=np.int64)
        if self.records.ndim != 2:
            raise ValueError(f"records must be 2-D, got shape {self.records.shape}")
        m = self.records.shape[0]
        if len(self.labels) != m or len(self.subjects) != m:
            raise ValueError("labels/subjects length must match record count")
        if not np.isfinite(self.records).all():
            raise ValueError("records contain non-finite features")

    def __len__(self) -> int:
        return self.records.shape[0]

    @property
    def d(self) -> int:
        return self.records.shape[1]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.records[idx], self.labels[idx], self.subjects[idx])


@dataclass
class Partition:
    shares: list[Dataset]
    strategy: str

    @property
    def n(self) -> int:
        return len(self.shares)


@dataclass
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def active(self) -> np.ndarray:
        """Features with non-zero spread; the rest pass through unchanged."""
        return self.std > 0


@dataclass(frozen=True)
class MixtureComponent:
    mean: tuple
    std: float
    weight: float = 1.0


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("mixture needs at least one component")
        dims = {len(c.mean) for c in comps}
        if len(dims) != 1:
            raise ValueError("all component means must share a dimension")
        dim = dims.pop()
        if dim > MAX_SYNTHETIC_DIM:
            raise ValueError(f"synthetic data is capped at {MAX_SYNTHETIC_DIM} dimensions")
        if any(c.std < 0 for c in comps) or any(c.weight <= 0 for c in comps):
            raise ValueError("component std must be >= 0 and weight > 0")

    @property
    def dim(self) -> int:
        return len(self.components[0].mean)

    def weights(self) -> np.ndarray:
        w = np.asarray([c.weight for c in self.components], dtype=np.float64)
        return w / w.sum()


def load_dataset(path, profile: str = "activity") -> Dataset:
    if profile not in ("activity", "generic"):
        raise ValueError(f"profile must be activity or generic, got {profile!r}")
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 3 or header[-2] != "label" or header[-1] != "subject":
        raise ParseError(f"{path}: header must end with 'label,subject' columns", line=1)
    d = len(header) - 2
    if profile == "activity" and d != ACTIVITY_FEATURES:
        raise ParseError(
            f"{path}: activity profile requires {ACTIVITY_FEATURES} features, header has {d}",
            line=1)
    records, labels, subjects = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != d + 2:
            raise ParseError(f"{path}: expected {d + 2} columns, got {len(cells)}", line=lineno)
        try:
            row = [float(c) for c in cells[:d]]
        except ValueError:
            raise ParseError(f"{path}: non-numeric feature value", line=lineno) from None
        if not all(np.isfinite(row)):
            raise ParseError(f"{path}: non-finite feature value", line=lineno)
        try:
            subject = int(cells[-1])
        except ValueError:
            raise ParseError(f"{path}: non-integer subject", line=lineno) from None
        records.append(row)
        labels.append(cells[-2].strip())
        subjects.append(subject)
    if not records:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.asarray(records), np.asarray(labels, dtype=object), np.asarray(subjects))


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join([f"f{i}" for i in range(dataset.d)] + ["label", "subject"]) + "\n")
        for row, lab, sub in zip(dataset.records, dataset.labels, dataset.subjects):
            fh.write(",".join([repr(float(v)) for v in row] + [str(lab), str(int(sub))]) + "\n")


def split(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random disjoint train/test split; test gets floor(m * fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    m = len(dataset)
    n_test = int(np.floor(m * test_fraction))
    perm = np.random.default_rng(seed).permutation(m)
    return dataset.take(np.sort(perm[n_test:])), dataset.take(np.sort(perm[:n_test]))


def _group_assignment(keys, n: int, seed: int) -> dict:
    """Deal sorted-then-shuffled group keys round-robin onto n devices."""
    keys = sorted(keys)
    if n > len(keys):
        raise PartitionError(f"{n} devices but only {len(keys)} groups to deal")
    order = np.random.default_rng(seed).permutation(len(keys))
    return {keys[g]: int(rank % n) for rank, g in enumerate(order)}


def _grouped_partition(dataset: Dataset, keys_per_row, n: int, seed: int,
                       strategy: str) -> Partition:
    assignment = _group_assignment(set(keys_per_row), n, seed)
    shares = []
    for dev in range(n):
        idx = [i for i, k in enumerate(keys_per_row) if assignment[k] == dev]
        shares.append(dataset.take(idx))
    if any(len(s) == 0 for s in shares):
        raise PartitionError("a device received an empty share")
    return Partition(shares, strategy)


def partition(dataset: Dataset, n: int, strategy: str = "by-subject", seed: int = 0) -> Partition:
    """Deal the dataset onto n devices; shares are disjoint and cover it."""
    if n < 1:
        raise ValueError(f"need at least one device, got n={n}")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if strategy == "iid-shuffle":
        if n > len(dataset):
            raise PartitionError(f"{n} devices but only {len(dataset)} rows")
        perm = np.random.default_rng(seed).permutation(len(dataset))
        shares = [dataset.take(np.sort(chunk)) for chunk in np.array_split(perm, n)]
        return Partition(shares, strategy)
    keys = dataset.labels if strategy == "by-label" else dataset.subjects
    return _grouped_partition(dataset, list(keys), n, seed, strategy)


def partition_aligned(train: Dataset, test: Dataset, n: int, strategy: str,
                      seed: int) -> tuple[Partition, Partition]:
    """Partition train and test with one shared group-to-device assignment.

    For iid-shuffle there is no grouping to preserve, so the two sides are
    partitioned independently.
    """
    if strategy == "iid-shuffle":
        return partition(train, n, strategy, seed), partition(test, n, strategy, seed)
    key_of = (lambda ds: ds.labels) if strategy == "by-label" else (lambda ds: ds.subjects)
    all_keys = set(key_of(train)) | set(key_of(test))
    assignment = _group_assignment(all_keys, n, seed)
    parts = []
    for ds in (train, test):
        keys = list(key_of(ds))
        shares = [ds.take([i for i, k in enumerate(keys) if assignment[k] == dev])
                  for dev in range(n)]
        parts.append(Partition(shares, strategy))
    if any(len(s) == 0 for s in parts[0].shares):
        raise PartitionError("a device received an empty training share")
    return parts[0], parts[1]


def pooled(shares) -> Dataset:
    """Concatenate device datasets back into one."""
    shares = list(shares)
    return Dataset(np.concatenate([s.records for s in shares]),
                   np.concatenate([s.labels for s in shares]),
                   np.concatenate([s.subjects for s in shares]))


def fit_normalizer(train: Dataset) -> NormalizationStats:
    if len(train) == 0:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    return NormalizationStats(train.records.mean(axis=0), train.records.std(axis=0))


def apply_normalizer(stats: NormalizationStats, dataset: Dataset) -> Dataset:
    out = dataset.records.copy()
    act = stats.active
    out[:, act] = (out[:, act] - stats.mean[act]) / stats.std[act]
    return Dataset(out, dataset.labels, dataset.subjects)


def invert_normalizer(stats: NormalizationStats, dataset: Dataset) -> Dataset:
    out = dataset.records.copy()
    act = stats.active
    out[:, act] = out[:, act] * stats.std[act] + stats.mean[act]
    return Dataset(out, dataset.labels, dataset.subjects)


def make_synthetic(spec: MixtureSpec, m: int, seed: int) -> Dataset:
    """Sample a labeled Gaussian mixture; labels and subjects are the component."""
    if m < 1:
        raise ValueError(f"need at least one row, got m={m}")
    rng = np.random.default_rng(seed)
    comp = rng.choice(len(spec.components), size=m, p=spec.weights())
    records = np.empty((m, spec.dim))
    for k, c in enumerate(spec.components):
        mask = comp == k
        records[mask] = rng.normal(0.0, 1.0, size=(int(mask.sum()), spec.dim)) * c.std + np.asarray(c.mean)
    labels = np.asarray([f"c{k}" for k in comp], dtype=object)
    return Dataset(records, labels, comp.astype(np.int64))
