"""Newton-Raphson inner solver, ADM and greedy GO-ADM data-driven solvers.

An assignment is an integer array with one dataset index per element.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    KktSystem,
    SolverConfig,
    State,
    assemble_kkt,
    block_slices,
    element_objectives,
    global_objective,
    kkt_residual,
)
from .dataset import Dataset
from .structure import Structure

__all__ = [
    "SolverError",
    "NewtonDiverged",
    "SingularSystem",
    "AdmNotConverged",
    "InitializationError",
    "NewtonResult",
    "SolveStats",
    "AdmResult",
    "GoAdmResult",
    "StepRecord",
    "RunRecord",
    "newton_solve",
    "local_state_assignment",
    "adm_solve",
    "go_adm_solve",
    "initialize_data",
    "equilibrium_operator",
    "solve_structure",
    "to_one_hot",
    "from_one_hot",
    "weight_for",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Base class for solver failures."""

    code = "SOLVER_ERROR"


class NewtonDiverged(SolverError):
    code = "DIVERGED"


class SingularSystem(SolverError):
    code = "SINGULAR"


class AdmNotConverged(SolverError):
    code = "NO_CONVERGENCE"


class InitializationError(SolverError):
    code = "INIT_FAILED"


@dataclass
class SolveStats:
    """Counters and wall times accumulated across nested solver calls."""

    newton_iterations: int = 0
    newton_calls: int = 0
    adm_iterations: int = 0
    greedy_searches: int = 0
    greedy_improvements: int = 0
    failed_trials: int = 0
    t_assembly: float = 0.0
    t_linear_solve: float = 0.0
    t_greedy: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class NewtonResult:
    state: State
    iterations: int
    increment_norms: list
    residual_norms: list


def weight_for(dataset: Dataset, config: SolverConfig) -> float:
    return config.c if config.c is not None else dataset.default_weight()


# Each block is measured against itself and a block of matching units, so a
# block that is zero at the solution (mu for exact data fits, lam at zero
# load) does not stall the test on round-off.
_PARTNER = dict(u="lam", e="u", s="mu", mu="s", lam="u")


def _block_converged(dx: np.ndarray, x: np.ndarray, sl: dict, tol: float) -> bool:
    norms = {k: np.linalg.norm(x[b]) for k, b in sl.items()}
    for k, b in sl.items():
        nd = np.linalg.norm(dx[b])
        ref = max(norms[k], norms[_PARTNER[k]])
        if nd > tol * ref and nd != 0.0:
            return False
    return True


def newton_solve(
    guess: State,
    assignment,
    dataset: Dataset,
    st: Structure,
    config: SolverConfig,
    F: np.ndarray,
    c: float | None = None,
    stats: SolveStats | None = None,
) -> NewtonResult:
    """Solve the stationarity conditions for fixed data by Newton-Raphson.

    Iterates in the scaled unknowns until every block's increment is below
    ``newton_tol`` relative to that block's norm.  With ``alpha=0`` the
    system is linear and a single solve is exact.

    Raises
    ------
    NewtonDiverged
        ``newton_max_iters`` exceeded, non-finite iterate, or the increment
        grew by more than 1e6 over the first one.
    SingularSystem
        The linear solve failed.
    """
    c = weight_for(dataset, config) if c is None else c
    idx = np.asarray(assignment, dtype=int)
    e_t = dataset.strains[idx]
    s_t = dataset.stresses[idx]
    G = st.gradient_operator()
    sl = block_slices(st)
    state = guess.copy()
    state.check(st)
    x_phys = state.pack(st)
    inc, res = [], []
    first = None
    for it in range(1, config.newton_max_iters + 1):
        t0 = time.perf_counter()
        kkt = assemble_kkt(state, e_t, s_t, st, config, F, c=c, G=G)
        t1 = time.perf_counter()
        res.append(float(np.linalg.norm(kkt.rhs)))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", RuntimeWarning)
                dx = np.linalg.solve(kkt.matrix, kkt.rhs)
        except (np.linalg.LinAlgError, RuntimeWarning) as exc:
            raise SingularSystem(f"linear solve failed: {exc}") from exc
        t2 = time.perf_counter()
        if stats is not None:
            stats.t_assembly += t1 - t0
            stats.t_linear_solve += t2 - t1
            stats.newton_iterations += 1
        if not np.all(np.isfinite(dx)):
            raise NewtonDiverged("non-finite Newton increment")
        x_phys = x_phys + kkt.physical_increment(dx)
        state = State.unpack(x_phys, st)
        ndx = float(np.linalg.norm(dx))
        inc.append(ndx)
        if config.alpha == 0:
            break
        if first is None:
            first = ndx
        elif first > 0 and ndx > 1e6 * first:
            raise NewtonDiverged(f"increment grew from {first:.3e} to {ndx:.3e}")
        x_scaled = x_phys / kkt.col_scale
        if _block_converged(dx, x_scaled, sl, config.newton_tol):
            break
    else:
        raise NewtonDiverged(f"no convergence within {config.newton_max_iters} iterations")
    if stats is not None:
        stats.newton_calls += 1
    return NewtonResult(state, it, inc, res)


def local_state_assignment(state: State, dataset: Dataset, c: float, st: Structure | None = None) -> np.ndarray:
    """Nearest data point per element under the c-weighted metric.

    Ties go to the lowest index.  The element length scales every candidate
    equally, so it does not affect the choice.
    """
    de = state.e[:, None] - dataset.strains[None, :]
    ds = state.s[:, None] - dataset.stresses[None, :]
    d = 0.5 * c * de * de + 0.5 / c * ds * ds
    return np.argmin(d, axis=1)


def _two_best(e_hat: float, s_hat: float, dataset: Dataset, c: float):
    de = e_hat - dataset.strains
    ds = s_hat - dataset.stresses
    d = 0.5 * c * de * de + 0.5 / c * ds * ds
    order = np.argsort(d, kind="stable")
    best = int(order[0])
    second = int(order[1]) if order.size > 1 else None
    return best, second


@dataclass
class AdmResult:
    state: State
    assignment: np.ndarray
    objective: float
    iterations: int
    newton_iterations: int


def adm_solve(
    guess: State,
    init_assignment,
    st: Structure,
    config: SolverConfig,
    F: np.ndarray,
    dataset: Dataset,
    c: float | None = None,
    stats: SolveStats | None = None,
) -> AdmResult:
    """Alternate fixed-data Newton solves and local assignment until the assignment repeats.

    Every Newton solve starts from the same ``guess``; only the data change.
    """
    c = weight_for(dataset, config) if c is None else c
    current = np.array(init_assignment, dtype=int)
    if current.shape != (st.n_elements,):
        raise ValueError(f"assignment must have length {st.n_elements}")
    if current.min() < 0 or current.max() >= len(dataset):
        raise ValueError("assignment index out of range")
    newton_its = 0
    for it in range(1, config.adm_max_iters + 1):
        nr = newton_solve(guess, current, dataset, st, config, F, c=c, stats=stats)
        newton_its += nr.iterations
        if stats is not None:
            stats.adm_iterations += 1
        new = local_state_assignment(nr.state, dataset, c, st)
        if np.array_equal(new, current):
            obj = global_objective(nr.state, dataset.strains[current], dataset.stresses[current], c, st)
            return AdmResult(nr.state, current, obj, it, newton_its)
        current = new
    raise AdmNotConverged(f"assignment still changing after {config.adm_max_iters} ADM iterations")


@dataclass
class GoAdmResult(AdmResult):
    adm_objective: float = np.nan
    searches: int = 0
    improvements: int = 0
    committed_objectives: list = field(default_factory=list)
    failed_trials: int = 0

    @property
    def improved(self) -> bool:
        return self.improvements > 0


def go_adm_solve(
    guess: State,
    init_assignment,
    st: Structure,
    config: SolverConfig,
    F: np.ndarray,
    dataset: Dataset,
    c: float | None = None,
    stats: SolveStats | None = None,
) -> GoAdmResult:
    """ADM followed by a greedy search over per-element data alternatives.

    Elements are visited in descending order of their distance to the
    assigned data.  For each, the nearest data point is tried unless it is
    already assigned, in which case the second nearest is tried.  A trial
    reruns ADM from ``guess`` with the modified assignment; it is committed
    only if the global objective strictly decreases, after which the
    ordering is rebuilt.  Every trial counts as one search and at most
    ``config.k_max`` searches are made.  A trial whose ADM run fails is
    discarded.

    With ``config.stop_on_stall`` the search also ends once a full pass over
    the elements commits nothing: further passes would retry identical trials.
    """
    c = weight_for(dataset, config) if c is None else c
    t_start = time.perf_counter()
    base = adm_solve(guess, init_assignment, st, config, F, dataset, c=c, stats=stats)
    best = base
    committed = [base.objective]
    k = 0
    improvements = 0
    failures = 0
    total_adm = base.iterations
    total_newton = base.newton_iterations
    n_d = len(dataset)
    while k < config.k_max:
        d_el = element_objectives(best.state.e, best.state.s, dataset.strains[best.assignment],
                                  dataset.stresses[best.assignment], c, st.lengths)
        order = np.argsort(-d_el, kind="stable")
        committed_now = False
        for i in order:
            if k >= config.k_max:
                break
            q, p = _two_best(best.state.e[i], best.state.s[i], dataset, c)
            trial = best.assignment.copy()
            if trial[i] != q:
                trial[i] = q
            elif p is not None:
                trial[i] = p
            else:
                continue  # single-point dataset: nothing to try
            k += 1
            if stats is not None:
                stats.greedy_searches += 1
            try:
                res = adm_solve(guess, trial, st, config, F, dataset, c=c, stats=stats)
            except SolverError as exc:
                failures += 1
                if stats is not None:
                    stats.failed_trials += 1
                log.debug("greedy trial on element %d failed: %s", i, exc)
                continue
            total_adm += res.iterations
            total_newton += res.newton_iterations
            if res.objective < best.objective - 1e-13 * abs(best.objective):
                best = res
                improvements += 1
                committed.append(res.objective)
                committed_now = True
                if stats is not None:
                    stats.greedy_improvements += 1
                break
        if not committed_now and (config.stop_on_stall or n_d < 2):
            break
    if stats is not None:
        stats.t_greedy += time.perf_counter() - t_start
    return GoAdmResult(
        best.state, best.assignment, best.objective, total_adm, total_newton,
        adm_objective=base.objective, searches=k, improvements=improvements,
        committed_objectives=committed, failed_trials=failures,
    )


# -- initialization -------------------------------------------------------------

def equilibrium_operator(st: Structure) -> np.ndarray:
    """Small-strain equilibrium matrix ``H`` (free DOFs x elements) with ``H s = F``."""
    G = st.gradient_operator()
    m, d = st.n_elements, st.dim
    Gt = np.einsum("idk,id->ik", G.reshape(m, d, -1), st.tangents)
    return (Gt * (st.lengths * st.areas)[:, None]).T


def initialize_data(
    dataset: Dataset,
    st: Structure,
    config: SolverConfig,
    F: np.ndarray | None = None,
    c: float | None = None,
) -> np.ndarray:
    """Initial assignment: ``random``, ``stress_free`` or ``structure_specific``.

    ``structure_specific`` takes the minimum-norm stresses satisfying the
    small-strain equilibrium ``H s = F`` and picks, per element, the data point
    with the nearest stress.  ``F`` defaults to the first load step.
    """
    m = st.n_elements
    mode = config.init_mode
    c = weight_for(dataset, config) if c is None else c
    if mode == "random":
        rng = np.random.Generator(np.random.PCG64(config.seed))
        return rng.integers(0, len(dataset), size=m)
    if mode == "stress_free":
        k = dataset.index_of(0.0, 0.0)
        if k is None:
            d = 0.5 * c * dataset.strains**2 + 0.5 / c * dataset.stresses**2
            k = int(np.argmin(d))
            warnings.warn("dataset has no exact origin; using the nearest point to (0, 0)",
                          stacklevel=2)
        return np.full(m, k, dtype=int)
    if F is None:
        F = config.load_factors[0] * st.load_vector()
    H = equilibrium_operator(st)
    f = np.asarray(F, dtype=float)[st.free_dofs]
    zero_rows = np.all(H == 0.0, axis=1) & (f != 0.0)
    if np.any(zero_rows):
        raise InitializationError(
            f"loaded DOFs {st.free_dofs[zero_rows].tolist()} have no small-strain stiffness")
    s_hat = np.linalg.lstsq(H, f, rcond=None)[0]
    ds = s_hat[:, None] - dataset.stresses[None, :]
    return np.argmin(ds * ds, axis=1)


# -- one-hot encoding -----------------------------------------------------------

def to_one_hot(assignment, n_data: int) -> np.ndarray:
    idx = np.asarray(assignment, dtype=int)
    t = np.zeros((idx.size, n_data), dtype=np.int8)
    t[np.arange(idx.size), idx] = 1
    return t


def from_one_hot(t) -> np.ndarray:
    t = np.asarray(t)
    if not np.all(t.sum(axis=1) == 1) or not np.all((t == 0) | (t == 1)):
        raise ValueError("each row needs exactly one selected data point")
    return np.argmax(t, axis=1)


# -- load stepping --------------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    load_factor: float
    state: State
    assignment: np.ndarray
    objective: float
    adm_objective: float
    newton_iterations: int
    adm_iterations: int
    greedy_searches: int
    improved: bool
    wall_time: float
    timings: dict


@dataclass
class RunRecord:
    solver: str
    config: SolverConfig
    c: float
    initial_assignment: np.ndarray
    steps: list = field(default_factory=list)
    status: str = "ok"
    error: str | None = None
    error_code: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def final(self) -> StepRecord:
        return self.steps[-1]

    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    def totals(self) -> dict:
        return dict(
            newton_iterations=sum(s.newton_iterations for s in self.steps),
            adm_iterations=sum(s.adm_iterations for s in self.steps),
            greedy_searches=sum(s.greedy_searches for s in self.steps),
            wall_time=sum(s.wall_time for s in self.steps),
        )


def solve_structure(
    st: Structure,
    dataset: Dataset,
    config: SolverConfig,
    solver_kind: str = "adm",
    F_ref: np.ndarray | None = None,
    guess: State | None = None,
    init_assignment=None,
) -> RunRecord:
    """Run ADM or GO-ADM over the load steps ``config.load_factors``.

    Step ``j`` applies ``load_factors[j] * F_ref`` starting from the previous
    step's state and assignment.  The first step starts from ``guess`` (zero
    by default) and ``init_assignment`` (``initialize_data`` by default).  A
    failing step ends the run; the record keeps the completed steps and has
    ``status="failed"``.
    """
    kind = solver_kind.replace("-", "_")
    if kind not in ("adm", "go_adm"):
        raise ValueError("solver_kind must be 'adm' or 'go_adm'")
    solve = adm_solve if kind == "adm" else go_adm_solve
    c = weight_for(dataset, config)
    F_ref = st.load_vector() if F_ref is None else np.asarray(F_ref, dtype=float)
    q = State.zeros(st) if guess is None else guess.copy()
    if init_assignment is None:
        assignment = initialize_data(dataset, st, config, config.load_factors[0] * F_ref, c=c)
    else:
        assignment = np.array(init_assignment, dtype=int)
    record = RunRecord(kind, config, c, assignment.copy())
    for j, gamma in enumerate(config.load_factors, start=1):
        stats = SolveStats()
        t0 = time.perf_counter()
        try:
            res = solve(q, assignment, st, config, gamma * F_ref, dataset, c=c, stats=stats)
        except SolverError as exc:
            record.status = "failed"
            record.error = f"step {j} (load factor {gamma}): {exc}"
            record.error_code = exc.code
            log.warning("run aborted: %s", record.error)
            break
        wall = time.perf_counter() - t0
        q, assignment = res.state, res.assignment
        record.steps.append(StepRecord(
            step=j,
            load_factor=gamma,
            state=res.state,
            assignment=res.assignment.copy(),
            objective=res.objective,
            adm_objective=getattr(res, "adm_objective", res.objective),
            newton_iterations=stats.newton_iterations,
            adm_iterations=stats.adm_iterations,
            greedy_searches=stats.greedy_searches,
            improved=bool(getattr(res, "improved", False)),
            wall_time=wall,
            timings=dict(assembly=stats.t_assembly, linear_solve=stats.t_linear_solve,
                         greedy=stats.t_greedy),
        ))
    return record
