"""Exhaustive global reference for the data-selection problem on small instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import SolverConfig, State, assemble_kkt, global_objective
from .dataset import Dataset
from .solvers import SolverError, newton_solve, weight_for
from .structure import Structure

__all__ = ["OracleResult", "OracleError", "BudgetExceeded", "AllFailed", "enumerate_global"]


class OracleError(RuntimeError):
    code = "ORACLE_ERROR"


class BudgetExceeded(OracleError):
    code = "BUDGET_EXCEEDED"


class AllFailed(OracleError):
    code = "ALL_FAILED"


@dataclass
class OracleResult:
    best_assignment: np.ndarray
    best_state: State
    best_objective: float
    n_evaluated: int
    n_failed: int
    ties: list

    @property
    def n_total(self) -> int:
        return self.n_evaluated + self.n_failed


def enumerate_global(
    st: Structure,
    dataset: Dataset,
    config: SolverConfig,
    F: np.ndarray,
    budget: int = 10**6,
    start: State | None = None,
    c: float | None = None,
    tie_tol: float = 1e-12,
) -> OracleResult:
    """Minimum objective over every assignment of data points to elements.

    Each assignment's fixed-data problem is solved by Newton from ``start``
    (zero state by default).  Assignments whose Newton solve fails are
    counted in ``n_failed`` and excluded; with ``alpha=1`` the result is
    therefore the optimum over the Newton-reachable stationary points.
    Equal objectives keep the lexicographically smallest assignment; the
    others are listed in ``ties``.
    """
    m, n_d = st.n_elements, len(dataset)
    total = n_d**m
    if total > budget:
        raise BudgetExceeded(f"{n_d}^{m} = {total} assignments exceeds budget {budget}")
    c = weight_for(dataset, config) if c is None else c
    guess = State.zeros(st) if start is None else start
    best = None
    ties: list = []
    n_failed = 0

    if config.alpha == 0:
        # linear case: one factorization, the data only enter the right-hand side
        e0 = np.zeros(m)
        base = assemble_kkt(guess, e0, e0, st, config, F, c=c)
        lu = scipy.linalg.lu_factor(base.matrix)
        sl = base.dof_map
        L = st.lengths

    for combo in itertools.product(range(n_d), repeat=m):
        idx = np.array(combo, dtype=int)
        e_t = dataset.strains[idx]
        s_t = dataset.stresses[idx]
        if config.alpha == 0:
            rhs = base.rhs.copy()
            # rhs = -row * g; data enter g_e as -L c e~ and g_s as -L s~ / c
            rhs[sl["e"]] += base.row_scale[sl["e"]] * L * c * e_t
            rhs[sl["s"]] += base.row_scale[sl["s"]] * L * s_t / c
            x = guess.pack(st) + base.physical_increment(scipy.linalg.lu_solve(lu, rhs))
            state = State.unpack(x, st)
        else:
            try:
                state = newton_solve(guess, idx, dataset, st, config, F, c=c).state
            except SolverError:
                n_failed += 1
                continue
        obj = global_objective(state, e_t, s_t, c, st)
        if best is None or obj < best[0] - tie_tol * abs(best[0]):
            best = (obj, idx, state)
            ties = []
        elif obj <= best[0] + tie_tol * abs(best[0]):
            ties.append(idx)
    if best is None:
        raise AllFailed("no assignment converged")
    return OracleResult(best[1], best[2], best[0], total - n_failed, n_failed, ties)
