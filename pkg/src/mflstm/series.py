"""
Time-series containers and deterministic transforms.

Period indices are abstract 1-based integers in each series' own frequency.
A covariate with mismatch ratio ``m`` has ``m`` observations per low-frequency
period, so its observation ``m * t`` is the last one inside period ``t``.

Missing values are carried by an explicit boolean mask (``True`` = missing).
"""

from __future__ import annotations

import csv
import json
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "Series",
    "MixedFrequencyDataset",
    "growth_rate",
    "validate_dataset",
    "rng",
    "stream_seed",
    "read_dataset",
    "write_dataset",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Series:
    """A named series observed ``ratio`` times per low-frequency period."""

    id: str
    values: np.ndarray
    ratio: int = 1
    mask: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ShapeError(f"series {self.id!r}: values must be one-dimensional")
        if int(self.ratio) < 1:
            raise DomainError(f"series {self.id!r}: ratio must be >= 1, got {self.ratio}")
        if self.mask is None:
            mask = ~np.isfinite(vals)
        else:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != vals.shape:
                raise ShapeError(f"series {self.id!r}: mask shape {mask.shape} != values {vals.shape}")
            mask = mask | ~np.isfinite(vals)
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "ratio", int(self.ratio))

    def __len__(self):
        return len(self.values)

    def available(self, index: int) -> bool:
        """True when 1-based ``index`` is inside the series and not masked."""
        return 1 <= index <= len(self.values) and not self.mask[index - 1]

    def truncated(self, last: int) -> "Series":
        """Copy with every observation after 1-based position ``last`` masked."""
        mask = self.mask.copy()
        mask[max(last, 0):] = True
        return Series(self.id, self.values, self.ratio, mask)

    def with_values(self, values) -> "Series":
        return Series(self.id, values, self.ratio, None)


@dataclass(frozen=True, eq=False)
class MixedFrequencyDataset:
    """One low-frequency target plus covariates with their own mismatch ratios."""

    target: Series
    covariates: tuple[Series, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.target.ratio != 1:
            raise DomainError("target series must have ratio 1")
        object.__setattr__(self, "covariates", tuple(self.covariates))
        ids = [self.target.id] + [c.id for c in self.covariates]
        if len(set(ids)) != len(ids):
            raise DomainError(f"duplicate series ids in dataset: {ids}")

    @property
    def n(self) -> int:
        return len(self.target)

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.covariates]

    @property
    def ratios(self) -> list[int]:
        return [c.ratio for c in self.covariates]

    def covariate(self, sid: str) -> Series:
        for c in self.covariates:
            if c.id == sid:
                return c
        raise KeyError(sid)

    def subset(self, ids: Iterable[str]) -> "MixedFrequencyDataset":
        keep = list(ids)
        return MixedFrequencyDataset(self.target, tuple(self.covariate(i) for i in keep))

    def information_set(self, low_last: int, hf_last: dict[str, int]) -> "MixedFrequencyDataset":
        """Mask target values after ``low_last`` and covariate values after ``hf_last[id]``."""
        return MixedFrequencyDataset(
            self.target.truncated(low_last),
            tuple(c.truncated(hf_last[c.id]) for c in self.covariates),
        )


def growth_rate(levels) -> np.ndarray:
    """Percentage growth ``100 * (x[t+1] - x[t]) / x[t]``; output has length n - 1."""
    x = np.asarray(levels, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("growth_rate requires strictly positive levels")
    return 100.0 * np.diff(x) / x[:-1]


def validate_dataset(ds: MixedFrequencyDataset) -> list[str]:
    """Return one message per covariate whose length differs from ``ratio * n``."""
    n = ds.n
    report = []
    for c in ds.covariates:
        expected = c.ratio * n
        if len(c) != expected:
            report.append(
                f"series {c.id!r}: length {len(c)} != ratio {c.ratio} x n {n} = {expected}"
            )
    return report


# Random streams. Philox is counter-based, so each named stream is an
# independent key and adding consumers never perturbs existing draws.

def _name_key(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode("utf8"))


def stream_seed(seed: int, *names) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_name_key(n) for n in names))


def rng(seed: int, *names) -> np.random.Generator:
    """Generator for the named sub-stream of ``seed``; same inputs give the same stream."""
    return np.random.Generator(np.random.Philox(stream_seed(seed, *names)))


# CSV ingestion. One CSV per frequency group with header ``t,<id1>,<id2>,...``;
# a JSON manifest maps ids to ratios and groups to files.

def _read_group(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ShapeError(f"{path}: header must start with 't'")
    header = rows[0][1:]
    body = rows[1:]
    t = [int(r[0]) for r in body]
    if t != list(range(1, len(body) + 1)):
        raise ShapeError(f"{path}: column t must be 1..{len(body)} without gaps")
    data = np.full((len(body), len(header)), np.nan)
    for i, r in enumerate(body):
        for j, cell in enumerate(r[1:]):
            cell = cell.strip()
            data[i, j] = float(cell) if cell not in ("", "NA", "nan") else np.nan
    return header, data


def read_dataset(manifest_path, impute_leading_zeros: bool = False) -> MixedFrequencyDataset:
    """
    Load a dataset from a manifest of the form::

        {"target": "y",
         "ratios": {"y": 1, "x1": 3},
         "files": {"1": "low.csv", "3": "hf_3.csv"}}

    ``impute_leading_zeros`` replaces missing values before each series' first
    observation with 0.0 (off by default).
    """
    manifest_path = Path(manifest_path)
    spec = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    columns: dict[str, np.ndarray] = {}
    for _ratio, fname in spec["files"].items():
        header, data = _read_group(base / fname)
        for j, sid in enumerate(header):
            columns[sid] = data[:, j]
    ratios = spec["ratios"]
    missing = [s for s in ratios if s not in columns]
    if missing:
        raise ShapeError(f"series listed in manifest but not found in files: {missing}")

    def make(sid):
        vals = columns[sid].copy()
        if impute_leading_zeros:
            finite = np.flatnonzero(np.isfinite(vals))
            first = finite[0] if finite.size else len(vals)
            if first > 0:
                warnings.warn(f"series {sid!r}: imputing {first} leading zeros", stacklevel=3)
            vals[:first] = 0.0
        return Series(sid, vals, int(ratios[sid]))

    target = make(spec["target"])
    order = spec.get("order") or [s for s in ratios if s != spec["target"]]
    return MixedFrequencyDataset(target, tuple(make(s) for s in order))


def _fmt(v: float, masked: bool) -> str:
    return "" if masked else repr(float(v))


def write_dataset(ds: MixedFrequencyDataset, directory, name: str = "dataset") -> Path:
    """Write one CSV per ratio group plus ``<name>.json`` manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    groups: dict[int, list[Series]] = {1: [ds.target]}
    for c in ds.covariates:
        groups.setdefault(c.ratio, []).append(c)
    files = {}
    for ratio in sorted(groups):
        members = groups[ratio]
        length = max(len(s) for s in members)
        fname = f"{name}_m{ratio}.csv"
        with open(directory / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [s.id for s in members])
            for i in range(length):
                row = [str(i + 1)]
                for s in members:
                    row.append(_fmt(s.values[i], s.mask[i]) if i < len(s) else "")
                w.writerow(row)
        files[str(ratio)] = fname
    manifest = {
        "target": ds.target.id,
        "ratios": {ds.target.id: 1, **{c.id: c.ratio for c in ds.covariates}},
        "order": ds.ids,
        "files": files,
    }
    path = directory / f"{name}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path

