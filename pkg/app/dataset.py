"""Labeled marker data: core types, CSV ingestion and Pima preprocessing."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

PIMA_COLUMNS = [
    "pregnancies",
    "glucose",
    "blood_pressure",
    "skinfold",
    "insulin",
    "bmi",
    "pedigree",
    "age",
    "outcome",
]
PIMA_MAX_AGE = 60.0


class DatasetError(ValueError):
    """Raised when labeled data cannot be parsed or violates a contract."""


@dataclass(frozen=True, slots=True)
class LabeledSample:
    x: float
    y: int
    z: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not math.isfinite(self.x):
            raise DatasetError(f"Marker value must be finite, got {self.x!r}.")
        if self.y not in (-1, 1):
            raise DatasetError(f"Label must be -1 or +1, got {self.y!r}.")
        if not all(math.isfinite(v) for v in self.z):
            raise DatasetError(f"Covariate profile must be finite, got {self.z!r}.")


@dataclass(frozen=True, slots=True)
class ClassWeights:
    w_pos: float
    w_neg: float

    def of(self, y: np.ndarray) -> np.ndarray:
        """Return the per-sample weight vector for labels ``y``."""

        return np.where(np.asarray(y) > 0, self.w_pos, self.w_neg)


@dataclass(frozen=True, slots=True)
class Dataset:
    """Immutable column store of (x, y, z) rows in input order."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    covariate_names: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=int).reshape(-1)
        z = np.array(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(len(x), -1) if len(x) else z.reshape(0, 0)
        if z.ndim != 2 or z.shape[0] != x.shape[0] or y.shape[0] != x.shape[0]:
            raise DatasetError(
                f"Inconsistent dataset shapes: x={x.shape}, y={y.shape}, z={z.shape}."
            )
        if not np.all(np.isfinite(x)):
            raise DatasetError("Marker values must be finite.")
        if not np.all(np.isin(y, (-1, 1))):
            raise DatasetError("Labels must be -1 or +1.")
        if not np.all(np.isfinite(z)):
            raise DatasetError("Covariate values must be finite.")
        names = tuple(self.covariate_names) or tuple(f"z{j + 1}" for j in range(z.shape[1]))
        if len(names) != z.shape[1]:
            raise DatasetError(f"Expected {z.shape[1]} covariate names, got {len(names)}.")
        for arr in (x, y, z):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "covariate_names", names)

    @classmethod
    def from_arrays(
        cls,
        x: Sequence[float],
        y: Sequence[int],
        z: Optional[Union[Sequence[Sequence[float]], np.ndarray]] = None,
        covariate_names: Sequence[str] = (),
    ) -> "Dataset":
        x_arr = np.asarray(x, dtype=float).reshape(-1)
        if z is None:
            z_arr = np.zeros((len(x_arr), 0))
        else:
            z_arr = np.asarray(z, dtype=float)
            if z_arr.ndim == 1:
                z_arr = z_arr.reshape(-1, 1)
        return cls(x=x_arr, y=np.asarray(y, dtype=int), z=z_arr, covariate_names=tuple(covariate_names))

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample], covariate_names: Sequence[str] = ()) -> "Dataset":
        widths = {len(s.z) for s in samples}
        if len(widths) > 1:
            raise DatasetError(f"All samples must share the same covariate length, got {sorted(widths)}.")
        p = widths.pop() if widths else 0
        z = np.array([s.z for s in samples], dtype=float).reshape(len(samples), p)
        return cls.from_arrays([s.x for s in samples], [s.y for s in samples], z, covariate_names)

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.z.shape[1])

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.y == -1))

    @property
    def positives(self) -> np.ndarray:
        """Indices of S1 in input order."""

        return np.flatnonzero(self.y == 1)

    @property
    def negatives(self) -> np.ndarray:
        """Indices of S-1 in input order."""

        return np.flatnonzero(self.y == -1)

    @property
    def samples(self) -> List[LabeledSample]:
        return [
            LabeledSample(float(xi), int(yi), tuple(float(v) for v in zi))
            for xi, yi, zi in zip(self.x, self.y, self.z)
        ]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(x=self.x[idx], y=self.y[idx], z=self.z[idx], covariate_names=self.covariate_names)

    def require_both_classes(self) -> None:
        if self.n_pos < 1 or self.n_neg < 1:
            raise DatasetError(
                f"Both classes must be non-empty (n1={self.n_pos}, n-1={self.n_neg})."
            )

    def equals(self, other: "Dataset") -> bool:
        return (
            self.covariate_names == other.covariate_names
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.z, other.z)
        )


@dataclass(frozen=True, slots=True)
class CsvSchema:
    """Column mapping for CSV ingestion."""

    marker: str
    label: str
    covariates: Tuple[str, ...] = ()
    encoding: Dict[str, int] = field(default_factory=lambda: {"0": -1, "1": 1})

    def __post_init__(self) -> None:
        object.__setattr__(self, "covariates", tuple(self.covariates))
        encoding = {_label_key(k): int(v) for k, v in dict(self.encoding).items()}
        if set(encoding.values()) != {-1, 1}:
            raise DatasetError(f"Label encoding must map onto both -1 and +1, got {encoding}.")
        object.__setattr__(self, "encoding", encoding)

    @classmethod
    def pima(cls) -> "CsvSchema":
        return cls(marker="glucose", label="outcome", covariates=("age",))

    @classmethod
    def simulated(cls, p: int) -> "CsvSchema":
        return cls(marker="x", label="y", covariates=tuple(f"z{j + 1}" for j in range(p)), encoding={"-1": -1, "1": 1})

    def decode(self) -> Dict[int, str]:
        return {value: key for key, value in self.encoding.items()}


def _label_key(value: object) -> str:
    """Normalise a raw label cell so '1', '1.0' and 1 share one key."""

    text = str(value).strip()
    try:
        number = float(text)
    except ValueError:
        return text
    if number.is_integer():
        return str(int(number))
    return text


def load_csv(path: Union[str, Path], schema: CsvSchema) -> Dataset:
    """Read a headered CSV into a Dataset, keeping file row order."""

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise DatasetError(f"CSV file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"Could not parse CSV {path}: {exc}") from exc

    frame.columns = [str(col).strip() for col in frame.columns]
    required = [schema.marker, schema.label, *schema.covariates]
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise DatasetError(f"Missing column(s) {missing} in {path}; found {list(frame.columns)}.")

    x = _numeric_column(frame, schema.marker, path)
    z = np.column_stack([_numeric_column(frame, col, path) for col in schema.covariates]) if schema.covariates else np.zeros((len(frame), 0))

    labels = np.empty(len(frame), dtype=int)
    for row, raw in enumerate(frame[schema.label]):
        key = _label_key(raw)
        if key not in schema.encoding:
            raise DatasetError(
                f"Row {row + 1}: unmapped label value {raw!r} in column '{schema.label}' "
                f"(known: {sorted(schema.encoding)})."
            )
        labels[row] = schema.encoding[key]

    dataset = Dataset(x=x, y=labels, z=z, covariate_names=schema.covariates)
    logger.debug("Loaded %d rows (n1=%d, n-1=%d) from %s", dataset.n, dataset.n_pos, dataset.n_neg, path)
    return dataset


def _numeric_column(frame: pd.DataFrame, column: str, path: Union[str, Path]) -> np.ndarray:
    raw = frame[column]
    values = pd.to_numeric(raw.astype(str).str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        raise DatasetError(f"Row {row + 1}: non-numeric value {raw.iloc[row]!r} in column '{column}' of {path}.")
    return values


def write_csv(d: Dataset, path: Union[str, Path], schema: Optional[CsvSchema] = None) -> None:
    """Write ``d`` so that ``load_csv(path, schema)`` reproduces it exactly."""

    schema = schema or CsvSchema.simulated(d.p)
    if len(schema.covariates) != d.p:
        raise DatasetError(f"Schema names {len(schema.covariates)} covariates but dataset has {d.p}.")
    decode = schema.decode()
    frame = pd.DataFrame({schema.marker: [repr(float(v)) for v in d.x]})
    frame[schema.label] = [decode[int(v)] for v in d.y]
    for j, name in enumerate(schema.covariates):
        frame[name] = [repr(float(v)) for v in d.z[:, j]]
    frame.to_csv(path, index=False, encoding="utf-8")


def pima_filter(d: Dataset, age_column: str = "age") -> Dataset:
    """Drop rows with glucose 0 and subjects aged 60 or older."""

    if age_column not in d.covariate_names:
        raise DatasetError(f"Pima filter needs covariate '{age_column}'; found {list(d.covariate_names)}.")
    age = d.z[:, d.covariate_names.index(age_column)]
    keep = np.flatnonzero((d.x != 0) & (age < PIMA_MAX_AGE))
    if keep.size == 0:
        raise DatasetError("Pima filter removed every row.")
    logger.info("Pima filter kept %d of %d rows", keep.size, d.n)
    return d.subset(keep)


def class_weights(d: Dataset) -> ClassWeights:
    """Inverse class-frequency weights w(1) = n/n1 and w(-1) = n/n-1."""

    d.require_both_classes()
    return ClassWeights(w_pos=d.n / d.n_pos, w_neg=d.n / d.n_neg)
