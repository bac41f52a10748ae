"""Benchmark and experiment drivers built on the solver API.

Everything here is deterministic for fixed inputs; wall times are recorded
but never part of a comparison.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import SolverConfig, State
from .dataset import Dataset, check_consistency, generate_linear, split_subsets
from .oracle import OracleResult, enumerate_global
from .solvers import RunRecord, local_state_assignment, solve_structure, weight_for
from .structure import BenchmarkSpec, Structure, build_bar, manufactured_displacement

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_RANGE_FACTOR",
    "volume_objective_mpa",
    "load_steps",
    "benchmark_dataset",
    "run_bar_benchmark",
    "relative_l2_error",
    "ConvergenceGrid",
    "convergence_grid",
    "ROPE_LENGTH",
    "ROPE_DIAMETER",
    "synthetic_rope_columns",
    "RopePhase",
    "RopeResult",
    "rope_phase_ranges",
    "run_rope",
    "polygon_area",
    "OracleComparison",
    "compare_with_oracle",
]

# dataset half-range relative to the benchmark's largest reference strain
DEFAULT_RANGE_FACTOR = 1.5

ROPE_LENGTH = 17.010
ROPE_DIAMETER = 0.208


def volume_objective_mpa(objective: float, area: float) -> float:
    """Objective in MPa with volume weights (``L * A``) instead of length weights."""
    return objective * area * 1e-6


def load_steps(n: int, final: float = 1.0) -> tuple:
    """``n`` equal load increments ending at ``final``."""
    if n < 1:
        raise ValueError("need at least one load step")
    return tuple(final * (k + 1) / n for k in range(n))


def benchmark_dataset(spec: BenchmarkSpec, n_points: int = 65,
                      range_factor: float = DEFAULT_RANGE_FACTOR) -> Dataset:
    return generate_linear(spec.E, n_points, range_factor * spec.max_strain())


def run_bar_benchmark(
    alpha: int = 1,
    n_elements: int = 8,
    n_points: int = 65,
    n_steps: int = 1,
    solvers=("adm", "go_adm"),
    range_factor: float = DEFAULT_RANGE_FACTOR,
    spec: BenchmarkSpec | None = None,
    config: SolverConfig | None = None,
) -> dict[str, RunRecord]:
    """Manufactured-solution bar, one record per solver kind."""
    spec = BenchmarkSpec(alpha=alpha) if spec is None else spec
    st = spec.structure(n_elements)
    ds = benchmark_dataset(spec, n_points, range_factor)
    cfg = (config or SolverConfig()).with_(alpha=spec.alpha, load_factors=load_steps(n_steps))
    return {k: solve_structure(st, ds, cfg, k) for k in solvers}


def relative_l2_error(st: Structure, u: np.ndarray, spec: BenchmarkSpec, n_gauss: int = 4) -> float:
    """``||u_h - u_ref|| / ||u_ref||`` on a bar, by Gauss quadrature per element."""
    g, w = np.polynomial.legendre.leggauss(n_gauss)
    x = st.nodes[:, 0]
    a, b = st.elements[:, 0], st.elements[:, 1]
    h = x[b] - x[a]
    N = 0.5 * (g + 1.0)
    xi = x[a, None] + N[None, :] * h[:, None]
    uh = u[a, None] * (1.0 - N) + u[b, None] * N
    ur = manufactured_displacement(xi, spec)
    wh = 0.5 * w[None, :] * h[:, None]
    return float(np.sqrt(np.sum(wh * (uh - ur) ** 2) / np.sum(wh * ur**2)))


@dataclass
class ConvergenceGrid:
    n_elements: list
    n_points: list
    errors: np.ndarray           # shape (len(n_elements), len(n_points)); nan for failed runs
    objectives: np.ndarray
    status: list                 # per cell "ok" or the error code
    alpha: int
    solver: str

    def long_form(self) -> dict:
        m, n = np.meshgrid(self.n_elements, self.n_points, indexing="ij")
        return dict(n_elements=m.ravel(), n_points=n.ravel(), error=self.errors.ravel(),
                    objective=self.objectives.ravel())

    def increases(self, rtol: float = 0.0) -> list:
        """Adjacent cells where the error grows under refinement: ``(axis, i, j, before, after)``."""
        out = []
        E = self.errors
        for axis in (0, 1):
            d = np.diff(E, axis=axis)
            before = E[:-1, :] if axis == 0 else E[:, :-1]
            for i, j in zip(*np.nonzero(d > rtol * before)):
                after = E[i + 1, j] if axis == 0 else E[i, j + 1]
                out.append((axis, int(i), int(j), float(E[i, j]), float(after)))
        return out

    def column_variation(self, n_points: int) -> float:
        """``(max - min) / max`` of the errors along mesh refinement at fixed data size."""
        col = self.errors[:, self.n_points.index(n_points)]
        return float((col.max() - col.min()) / col.max())


def convergence_grid(
    n_elements=(8, 16, 32, 64, 128),
    n_points=(17, 33, 65, 129, 257),
    alpha: int = 0,
    solver: str = "adm",
    n_steps: int | None = None,
    spec: BenchmarkSpec | None = None,
    range_factor: float = DEFAULT_RANGE_FACTOR,
    config: SolverConfig | None = None,
) -> ConvergenceGrid:
    """Relative L2 displacement error over meshes x dataset sizes.

    ``n_steps`` defaults to 1 for linear strains and 10 otherwise.
    """
    spec = BenchmarkSpec(alpha=alpha) if spec is None else spec
    n_steps = (1 if spec.alpha == 0 else 10) if n_steps is None else n_steps
    cfg = (config or SolverConfig()).with_(alpha=spec.alpha, load_factors=load_steps(n_steps))
    meshes, sizes = list(n_elements), list(n_points)
    E = np.full((len(meshes), len(sizes)), np.nan)
    J = np.full_like(E, np.nan)
    status = []
    datasets = {n: benchmark_dataset(spec, n, range_factor) for n in sizes}
    for i, m in enumerate(meshes):
        st = spec.structure(m)
        for j, n in enumerate(sizes):
            rec = solve_structure(st, datasets[n], cfg, solver)
            status.append("ok" if rec.ok else rec.error_code)
            if rec.ok:
                E[i, j] = relative_l2_error(st, rec.final.state.u, spec)
                J[i, j] = rec.final.objective
    return ConvergenceGrid(meshes, sizes, E, J, status, spec.alpha, solver)


# -- cyclic rope test ----------------------------------------------------------

def synthetic_rope_columns(
    n_per_branch: int = 40,
    force_max: float = 1.2e6,
    force_min: float = 6.0e4,
    modulus: float = 1.5e9,
    diameter: float = ROPE_DIAMETER,
    residual: float = 4e-3,
    rate: float = 2.0e4,
) -> dict[str, np.ndarray]:
    """Stand-in for a cyclic tensile test: loading, unloading, reloading.

    The loading branch starts at ``force_min`` (not at zero) and stiffens
    with load.  Unloading is stiffer and leaves ``residual`` strain at
    ``force_min``; reloading follows a softer path back to the peak, so the
    last two branches enclose a loop.  Rows are sampled at constant force
    rate ``rate`` (N/s) to form the time column.
    """
    area = np.pi * diameter**2 / 4
    F_up = np.linspace(force_min, force_max, n_per_branch)
    sig = F_up / area
    sig_max = force_max / area
    eps_load = sig / modulus * (1.0 - 0.25 * sig / sig_max)
    eps_peak = eps_load[-1]
    eps_low = eps_load[0] + residual
    p = (F_up - force_min) / (force_max - force_min)   # 0 at the bottom, 1 at the peak
    span = eps_peak - eps_low
    eps_unload = eps_low + span * p * (2.0 - p)        # stiff near the peak
    eps_reload = eps_low + span * p * (1.0 + p) / 2.0  # softening toward the peak
    force = np.concatenate([F_up, F_up[::-1][1:], F_up[1:]])
    strain = np.concatenate([eps_load, eps_unload[::-1][1:], eps_reload[1:]])
    time = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(force)) / rate)])
    return dict(time=time, force=force, strain=strain)


def rope_phase_ranges(n_per_branch: int = 40) -> list[tuple[int, int]]:
    """Half-open row ranges of the three branches of :func:`synthetic_rope_columns`."""
    n = n_per_branch
    return [(0, n), (n, 2 * n - 1), (2 * n - 1, 3 * n - 2)]


@dataclass
class RopePhase:
    name: str
    dataset: Dataset
    forces: np.ndarray
    record: RunRecord
    tip_displacement: np.ndarray
    data_consistent: bool
    results_consistent: bool
    warm_started: bool


@dataclass
class RopeResult:
    phases: list = field(default_factory=list)
    structure: Structure | None = None

    @property
    def ok(self) -> bool:
        return bool(self.phases) and all(p.record.ok for p in self.phases)

    def load_deflection(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tip displacement, applied force and phase index along the whole test."""
        d = np.concatenate([p.tip_displacement for p in self.phases])
        f = np.concatenate([p.forces[:len(p.tip_displacement)] for p in self.phases])
        k = np.concatenate([np.full(len(p.tip_displacement), i) for i, p in enumerate(self.phases)])
        return d, f, k

    def loop_area(self) -> float:
        """Area enclosed by the unloading and reloading branches (0 with fewer phases)."""
        if len(self.phases) < 3:
            return 0.0
        d, f, k = self.load_deflection()
        sel = k >= 1
        return polygon_area(d[sel], f[sel])


def polygon_area(x, y) -> float:
    """Absolute shoelace area of the closed polygon through the given vertices."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def run_rope(
    columns: dict[str, np.ndarray],
    ranges,
    area: float | None = None,
    length: float = ROPE_LENGTH,
    n_elements: int = 16,
    config: SolverConfig | None = None,
    solver: str = "adm",
    names=("first loading", "first unloading", "second loading"),
    force: bool = False,
    steps_per_phase: int | None = None,
) -> RopeResult:
    """Sequential bar solves over the branches of a cyclic test.

    Each phase uses the sub-dataset of its branch (force converted to stress
    by ``area``) and the branch's forces as tip loads.  The first phase gets
    an artificial origin point and starts from rest; later phases start from
    the previous phase's final state with data reassigned to the nearest
    points of their own sub-dataset.  Inconsistent sub-datasets raise
    ``ValueError`` unless ``force`` is set.
    """
    area = np.pi * ROPE_DIAMETER**2 / 4 if area is None else area
    cfg = config or SolverConfig(alpha=1)
    full = Dataset(columns["strain"], columns["force"] / area, dict(kind="rope", area=area))
    flags = [True] + [False] * (len(ranges) - 1)
    subsets = split_subsets(full, ranges, add_origin=flags)
    st = build_bar(length, n_elements, area, "left", tip_load=1.0)
    F_ref = st.load_vector()
    tip = st.n_nodes - 1
    result = RopeResult(structure=st)
    state = None
    for k, ((a, b), sub) in enumerate(zip(ranges, subsets)):
        name = names[k] if k < len(names) else f"phase {k + 1}"
        rep = check_consistency(sub)
        if not rep.consistent and not force:
            raise ValueError(f"{name}: sub-dataset is not consistent ({len(rep.violations)} pairs)")
        forces = np.asarray(columns["force"][a:b], dtype=float)
        if steps_per_phase is not None and steps_per_phase < len(forces):
            pick = np.unique(np.linspace(0, len(forces) - 1, steps_per_phase).round().astype(int))
            forces = forces[pick]
        c = weight_for(sub, cfg)
        init = None
        if state is not None:
            init = local_state_assignment(state, sub, c)
        rec = solve_structure(st, sub, cfg.with_(load_factors=tuple(forces)), solver,
                              F_ref=F_ref, guess=state, init_assignment=init)
        u_tip = np.array([s.state.u[tip] for s in rec.steps])
        pairs = Dataset(np.concatenate([s.state.e for s in rec.steps]) if rec.steps else [0.0],
                        np.concatenate([s.state.s for s in rec.steps]) if rec.steps else [0.0])
        result.phases.append(RopePhase(
            name=name, dataset=sub, forces=forces, record=rec, tip_displacement=u_tip,
            data_consistent=rep.consistent,
            results_consistent=check_consistency(pairs).consistent if len(pairs) > 1 else True,
            warm_started=state is not None,
        ))
        if not rec.ok:
            log.warning("rope phase %r failed: %s", name, rec.error)
            break
        state = rec.final.state
    return result


# -- oracle comparison ----------------------------------------------------------

@dataclass
class OracleComparison:
    oracle: OracleResult
    adm: RunRecord
    go_adm: RunRecord
    rtol: float = 1e-9

    @property
    def objectives(self) -> dict:
        return dict(oracle=self.oracle.best_objective,
                    adm=self.adm.final.objective, go_adm=self.go_adm.final.objective)

    @property
    def dominance(self) -> bool:
        o = self.objectives
        tol = self.rtol * max(abs(o["adm"]), 1e-300)
        return o["oracle"] <= o["go_adm"] + tol and o["go_adm"] <= o["adm"] + tol

    def ties(self) -> dict:
        """Which solver pairs reach the same objective within ``rtol``."""
        o = self.objectives
        tol = self.rtol * max(abs(o["adm"]), 1e-300)
        return {f"{a}={b}": abs(o[a] - o[b]) <= tol
                for a, b in (("oracle", "adm"), ("oracle", "go_adm"), ("adm", "go_adm"))}


def compare_with_oracle(st: Structure, dataset: Dataset, config: SolverConfig,
                        budget: int = 10**6, start: State | None = None) -> OracleComparison:
    """Single-load comparison of enumeration, ADM and GO-ADM at the final load factor."""
    F = config.load_factors[-1] * st.load_vector()
    cfg = config.with_(load_factors=(1.0,))
    oracle = enumerate_global(st, dataset, cfg, F, budget=budget, start=start)
    adm = solve_structure(st, dataset, cfg, "adm", F_ref=F)
    go = solve_structure(st, dataset, cfg, "go_adm", F_ref=F)
    return OracleComparison(oracle, adm, go)
