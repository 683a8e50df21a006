"""Dataset text format, a matching writer, and fold assignment.

Text format: first content line "N D M" (ASCII decimal). Then N instance
lines "<labels> <f:v> <f:v> ...", where <labels> is a comma-separated list
of 0-based label indices ("-" for the empty set) and each f:v is a 0-based
feature index, a colon, and a decimal float. '#' starts a comment line.
UTF-8, LF line endings. Absent feature indices are zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError
from .linalg import seeded_rng


@dataclass(frozen=True)
class Dataset:
    """Dense multi-label dataset: features X (N x D), binary labels Y (N x M)."""

    X: np.ndarray
    Y: np.ndarray
    name: str = ""

    def __post_init__(self):
        x = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.Y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise InputError("X and Y must be 2-D")
        if x.shape[0] != y.shape[0] or x.shape[0] < 1:
            raise InputError(
                f"X and Y must share N >= 1 rows, got {x.shape[0]} and {y.shape[0]}"
            )
        if y.shape[1] < 2:
            raise InputError(f"need at least 2 labels, got M={y.shape[1]}")
        if not np.isfinite(x).all():
            raise InputError("X contains non-finite entries")
        if not np.isin(y, (0.0, 1.0)).all():
            raise InputError("Y entries must be exactly 0.0 or 1.0")
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "Y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_labels(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        return Dataset(self.X[idx], self.Y[idx], name if name is not None else self.name)


@dataclass(frozen=True)
class FoldPlan:
    """Cross-validation fold assignment: assignments[i] is instance i's fold."""

    k: int
    assignments: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def _content_lines(text: str):
    """Yield (1-based line number, stripped line), skipping blanks and comments."""
    for ln, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield ln, line


def parse_dataset(source, name: str = "") -> Dataset:
    """Parse the dataset text format from bytes, str, or a file-like object."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    lines = _content_lines(text)
    try:
        header_ln, header = next(lines)
    except StopIteration:
        raise ParseError("empty input: missing 'N D M' header") from None
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"header must be 'N D M', got {header!r}", header_ln)
    try:
        n, d, m = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"non-numeric header token in {header!r}", header_ln) from None
    if n < 1 or d < 1 or m < 2:
        raise ParseError(f"header requires N >= 1, D >= 1, M >= 2, got {header!r}", header_ln)

    x = np.zeros((n, d))
    y = np.zeros((n, m))
    row = 0
    for ln, line in lines:
        if row >= n:
            raise ParseError(f"header declared {n} instances but more lines follow", ln)
        toks = line.split()
        label_tok = toks[0]
        if label_tok != "-":
            for t in label_tok.split(","):
                try:
                    lab = int(t)
                except ValueError:
                    raise ParseError(f"non-numeric label token {t!r}", ln) from None
                if not 0 <= lab < m:
                    raise ParseError(f"label index {lab} out of range [0, {m})", ln)
                y[row, lab] = 1.0
        seen = set()
        for tok in toks[1:]:
            idx_s, _, val_s = tok.partition(":")
            if not val_s:
                raise ParseError(f"malformed feature token {tok!r} (expected f:v)", ln)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"non-numeric feature index in {tok!r}", ln) from None
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric feature value in {tok!r}", ln) from None
            if not 0 <= idx < d:
                raise ParseError(f"feature index {idx} >= D={d}", ln)
            if not np.isfinite(val):
                raise ParseError(f"non-finite feature value in {tok!r}", ln)
            if idx in seen:
                warnings.warn(
                    f"line {ln}: duplicate feature index {idx}; last value wins",
                    stacklevel=2,
                )
            seen.add(idx)
            x[row, idx] = val
        row += 1
    if row != n:
        raise ParseError(f"header declared {n} instances but only {row} found")
    return Dataset(x, y, name)


def parse_dataset_file(path, name: str | None = None) -> Dataset:
    with open(path, "rb") as fh:
        return parse_dataset(fh, name if name is not None else str(path))


def write_dataset(ds: Dataset) -> str:
    """Serialize a Dataset in the text format; parse_dataset round-trips it."""
    out = [f"{ds.n} {ds.n_features} {ds.n_labels}"]
    for i in range(ds.n):
        labs = np.flatnonzero(ds.Y[i] != 0.0)
        fields = [",".join(str(j) for j in labs) if labs.size else "-"]
        nz = np.flatnonzero(ds.X[i] != 0.0)
        fields.extend(f"{j}:{float(ds.X[i, j])!r}" for j in nz)
        out.append(" ".join(fields))
    return "\n".join(out) + "\n"


def split_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Assign a seeded pseudorandom permutation of [0, n) round-robin to k folds."""
    if not 2 <= k <= n:
        raise InputError(f"fold count must satisfy 2 <= k <= n, got k={k}, n={n}")
    perm = seeded_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(k=k, assignments=assignments)
