"""Material datasets of (strain, stress) pairs.

A :class:`Dataset` is an immutable, ordered collection of points.  Points are
addressed by their zero-based position, which is what assignments store.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DataPoint",
    "Dataset",
    "ConsistencyReport",
    "DatasetError",
    "generate_linear",
    "generate_sigmoid",
    "make_unsymmetric",
    "add_noise",
    "repair_noisy",
    "check_consistency",
    "load_csv",
    "read_columns",
    "split_subsets",
    "sigmoid_law",
]

NOISE_PRNG = "numpy.PCG64"


class DatasetError(ValueError):
    """Invalid dataset parameters or malformed dataset input."""


class DataPoint(NamedTuple):
    strain: float
    stress: float


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered (strain, stress) pairs plus generation metadata.

    ``strains`` and ``stresses`` are read-only float arrays of equal length.
    ``provenance`` records how the set was produced (``kind`` is one of
    ``linear``, ``sigmoid``, ``csv``, ``noisy``, ``unsymmetric``, ``subset``).
    """

    strains: np.ndarray
    stresses: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        e = _frozen(self.strains).ravel()
        s = _frozen(self.stresses).ravel()
        if e.shape != s.shape:
            raise DatasetError("strain and stress arrays differ in length")
        if e.size == 0:
            raise DatasetError("a dataset needs at least one point")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(s))):
            raise DatasetError("strains and stresses must be finite")
        e.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "strains", e)
        object.__setattr__(self, "stresses", s)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], **provenance) -> "Dataset":
        pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], provenance)

    @property
    def n_points(self) -> int:
        return self.strains.size

    def __len__(self) -> int:
        return self.strains.size

    def __getitem__(self, i: int) -> DataPoint:
        return DataPoint(float(self.strains[i]), float(self.stresses[i]))

    def __iter__(self):
        for e, s in zip(self.strains, self.stresses):
            yield DataPoint(float(e), float(s))

    @property
    def points(self) -> list[DataPoint]:
        return list(self)

    def as_array(self) -> np.ndarray:
        """(n, 2) copy with strains in column 0 and stresses in column 1."""
        return np.column_stack([self.strains, self.stresses])

    def index_of(self, strain: float, stress: float) -> int | None:
        """Lowest index of an exact point match, or None."""
        hit = np.flatnonzero((self.strains == strain) & (self.stresses == stress))
        return int(hit[0]) if hit.size else None

    def default_weight(self) -> float:
        """Least-squares slope through the origin, sum(e*s) / sum(e*e).

        Used as the default objective weight ``c``.  Falls back to the ratio of
        stress and strain spreads if the slope is not positive.
        """
        e, s = self.strains, self.stresses
        den = float(e @ e)
        if den > 0.0:
            c = float(e @ s) / den
            if c > 0.0 and np.isfinite(c):
                return c
        de = float(np.ptp(e))
        ds = float(np.ptp(s))
        if de > 0.0 and ds > 0.0:
            return ds / de
        return 1.0

    def is_mirror_symmetric(self) -> bool:
        """True if every point's exact negation is also present."""
        pts = set(zip(self.strains.tolist(), self.stresses.tolist()))
        return all((-e, -s) in pts for e, s in pts)


class ConsistencyReport(NamedTuple):
    """Result of the pairwise monotonicity scan.

    ``violations`` holds ``(i, j, magnitude)`` with ``i < j`` zero-based and
    ``magnitude = -(s_i - s_j)(e_i - e_j) > tol``.
    """

    consistent: bool
    violations: list
    tol: float

    @property
    def flagged(self) -> set[int]:
        return {i for i, _, _ in self.violations} | {j for _, j, _ in self.violations}


def _symmetric_grid(n_points: int, strain_max: float) -> np.ndarray:
    # positive half built once and negated so mirrored points are exact
    h = n_points // 2
    pos = strain_max * (np.arange(1, h + 1) / h)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _check_grid(n_points, strain_max):
    if n_points < 3:
        raise DatasetError("n_points must be at least 3")
    if n_points % 2 == 0:
        raise DatasetError("n_points must be odd so the grid is symmetric and holds the origin")
    if not strain_max > 0:
        raise DatasetError("strain_max must be positive")


def generate_linear(E: float, n_points: int, strain_max: float) -> Dataset:
    """Symmetric samples of the linear law ``s = E e`` on ``[-strain_max, strain_max]``."""
    if not E > 0:
        raise DatasetError("E must be positive")
    _check_grid(n_points, strain_max)
    e = _symmetric_grid(n_points, strain_max)
    return Dataset(e, E * e, dict(kind="linear", E=E, n_points=n_points, strain_max=strain_max))


def sigmoid_law(strain, S_max: float):
    """``S_max * (2 / (1 + exp(-e)) - 1)``, an odd function saturating at ``S_max``."""
    return S_max * (2.0 / (1.0 + np.exp(-np.asarray(strain, dtype=float))) - 1.0)


def generate_sigmoid(S_max: float, n_points: int, strain_max: float) -> Dataset:
    """Symmetric samples of :func:`sigmoid_law`."""
    if not S_max > 0:
        raise DatasetError("S_max must be positive")
    _check_grid(n_points, strain_max)
    h = n_points // 2
    pos = strain_max * (np.arange(1, h + 1) / h)
    spos = sigmoid_law(pos, S_max)
    e = np.concatenate([-pos[::-1], [0.0], pos])
    s = np.concatenate([-spos[::-1], [0.0], spos])
    return Dataset(e, s, dict(kind="sigmoid", S_max=S_max, n_points=n_points, strain_max=strain_max))


def make_unsymmetric(
    law: str,
    n_points: int,
    strain_max: float,
    fraction_positive: float,
    **params,
) -> Dataset:
    """Sample ``law`` with more points on the tension branch than on compression.

    ``round(fraction_positive * n_points)`` points (the origin among them) are
    spaced evenly on ``[0, strain_max]``; the rest are spaced evenly on
    ``[-strain_max, 0)``.  ``law`` is ``"linear"`` (needs ``E``) or
    ``"sigmoid"`` (needs ``S_max``).
    """
    if not 0.0 < fraction_positive < 1.0:
        raise DatasetError("fraction_positive must lie strictly between 0 and 1")
    if not strain_max > 0:
        raise DatasetError("strain_max must be positive")
    n_pos = int(round(fraction_positive * n_points))
    n_neg = n_points - n_pos
    if n_pos < 2 or n_neg < 1:
        raise DatasetError(
            f"fraction {fraction_positive} leaves an empty branch for n_points={n_points}"
        )
    e_pos = strain_max * (np.arange(n_pos) / (n_pos - 1))
    e_neg = -strain_max * (np.arange(n_neg, 0, -1) / n_neg)
    e = np.concatenate([e_neg, e_pos])
    if law == "linear":
        s = params["E"] * e
    elif law == "sigmoid":
        s = sigmoid_law(e, params["S_max"])
    else:
        raise DatasetError(f"unknown law {law!r}")
    prov = dict(kind="unsymmetric", law=law, n_points=n_points, strain_max=strain_max,
                fraction_positive=fraction_positive, n_positive=n_pos, n_negative=n_neg, **params)
    return Dataset(e, s, prov)


def add_noise(d: Dataset, sigma: float, seed: int) -> Dataset:
    """Gaussian noise of standard deviation ``sigma`` in normalized coordinates.

    Strains and stresses are each mapped affinely onto ``[-1, 1]`` over the
    dataset, perturbed independently and mapped back.  The perturbation is
    added in original units (``noise * range / 2``) so ``sigma=0`` returns the
    input values bit for bit.
    """
    if sigma < 0:
        raise DatasetError("sigma must be non-negative")
    if len(d) == 0:
        raise DatasetError("empty dataset")
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal((2, len(d))) * sigma
    half_e = 0.5 * float(np.ptp(d.strains))
    half_s = 0.5 * float(np.ptp(d.stresses))
    e = d.strains + noise[0] * half_e
    s = d.stresses + noise[1] * half_s
    prov = dict(kind="noisy", sigma=sigma, seed=seed, prng=NOISE_PRNG, source=dict(d.provenance))
    return Dataset(e, s, prov)


def check_consistency(d: Dataset, tol: float | None = None) -> ConsistencyReport:
    """Pairwise monotonicity scan: ``(s_i - s_j)(e_i - e_j) >= -tol`` for all pairs.

    The default tolerance is ``1e-12 * max|s| * max|e|``.
    """
    e, s = d.strains, d.stresses
    if tol is None:
        tol = 1e-12 * float(np.max(np.abs(s))) * float(np.max(np.abs(e)))
    prod = (s[:, None] - s[None, :]) * (e[:, None] - e[None, :])
    i, j = np.nonzero(np.triu(prod < -tol, k=1))
    violations = [(int(a), int(b), float(-prod[a, b])) for a, b in zip(i, j)]
    return ConsistencyReport(not violations, violations, tol)


def repair_noisy(noisy: Dataset, original: Dataset) -> tuple[Dataset, list[int]]:
    """Revert noisy points to their originals until the set is monotone.

    Points are reverted one at a time, always the one involved in the most
    violations (ties: larger summed magnitude, then lower index).  Returns the
    repaired dataset and the reverted indices in revert order.
    """
    if len(noisy) != len(original):
        raise DatasetError("noisy and original datasets differ in size")
    e = np.array(noisy.strains)
    s = np.array(noisy.stresses)
    reverted: list[int] = []
    while True:
        rep = check_consistency(Dataset(e, s))
        if rep.consistent:
            break
        count = np.zeros(len(e))
        mag = np.zeros(len(e))
        for a, b, v in rep.violations:
            count[a] += 1
            count[b] += 1
            mag[a] += v
            mag[b] += v
        # points already reverted cannot be reverted again
        count[reverted] = -1
        order = np.lexsort((np.arange(len(e)), -mag, -count))
        k = int(order[0])
        if count[k] <= 0:
            raise DatasetError("original dataset is itself inconsistent")
        e[k] = original.strains[k]
        s[k] = original.stresses[k]
        reverted.append(k)
    prov = dict(noisy.provenance, repaired=reverted)
    return Dataset(e, s, prov), reverted


def read_columns(path, columns: Sequence[str]) -> dict[str, np.ndarray]:
    """Read named numeric columns from a headed, comma-separated UTF-8 file.

    Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DatasetError(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DatasetError(f"{path}: missing column(s) {missing}; header is {header}")
    idx = [header.index(c) for c in columns]
    out = {c: [] for c in columns}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        for c, k in zip(columns, idx):
            try:
                out[c].append(float(row[k]))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric cell {row[k]!r} in {c!r}") from None
    return {c: np.asarray(v, dtype=float) for c, v in out.items()}


def load_csv(
    path,
    strain: str = "strain",
    stress: str | None = "stress",
    force: str | None = None,
    area: float | None = None,
) -> Dataset:
    """Load a dataset from CSV.

    Either give a ``stress`` column (Pa), or a ``force`` column (N) together
    with the cross-section ``area`` (m^2) used to convert force to stress.
    """
    if force is not None:
        if area is None or not area > 0:
            raise DatasetError("a force column needs a positive cross-section area")
        cols = read_columns(path, [strain, force])
        s = cols[force] / area
    else:
        if stress is None:
            raise DatasetError("need a stress column or a force column")
        cols = read_columns(path, [strain, stress])
        s = cols[stress]
    if cols[strain].size == 0:
        raise DatasetError(f"{path}: no data rows")
    prov = dict(kind="csv", path=str(path), strain=strain, stress=stress, force=force, area=area)
    return Dataset(cols[strain], s, prov)


def split_subsets(
    d: Dataset,
    index_ranges: Sequence[tuple[int, int]],
    add_origin: bool | Sequence[bool] = False,
) -> list[Dataset]:
    """Cut ``d`` into consecutive sub-datasets.

    ``index_ranges`` are half-open ``(start, stop)`` pairs, ordered and
    non-overlapping.  ``add_origin`` (one flag, or one per range) prepends an
    artificial ``(0, 0)`` point at index 0 of the sub-dataset.
    """
    n = len(d)
    if isinstance(add_origin, bool):
        add_origin = [add_origin] * len(index_ranges)
    if len(add_origin) != len(index_ranges):
        raise DatasetError("one add_origin flag per range expected")
    out = []
    prev_stop = 0
    for k, ((a, b), origin) in enumerate(zip(index_ranges, add_origin)):
        if not (0 <= a < b <= n):
            raise DatasetError(f"range {(a, b)} out of bounds for {n} points")
        if a < prev_stop:
            raise DatasetError(f"range {(a, b)} overlaps or precedes the previous range")
        prev_stop = b
        e, s = d.strains[a:b], d.stresses[a:b]
        if origin:
            e = np.concatenate([[0.0], e])
            s = np.concatenate([[0.0], s])
        prov = dict(kind="subset", part=k, start=a, stop=b, origin_added=bool(origin),
                    source=dict(d.provenance))
        out.append(Dataset(e, s, prov))
    return out
