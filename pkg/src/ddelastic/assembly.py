"""Strain measures, distance objectives and the saddle-point (KKT) system.

Unknowns are ordered ``q = [u, e, s, mu, lam]`` with ``u`` and ``lam`` on
the free DOFs only.  The stationarity residual is the gradient of the
element-wise Lagrangian

    sum_i L_i [ c/2 (e_i - e~_i)^2 + 1/(2c) (s_i - s~_i)^2
                + A_i s_i a_i . lam'_i + mu_i (eps_i(u) - e_i) ] - lam . F

with ``a_i = t_i + alpha u'_i`` and ``eps_i = t_i . u'_i + alpha/2 u'_i . u'_i``.
Stresses are in Pa, so the equilibrium terms carry the area ``A_i``.
The system matrix is the Hessian of that Lagrangian, hence symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .structure import Structure

__all__ = [
    "State",
    "SolverConfig",
    "KktSystem",
    "AssemblyError",
    "strain",
    "element_strains",
    "element_objective",
    "element_objectives",
    "global_objective",
    "kkt_residual",
    "assemble_kkt",
    "block_slices",
]

INIT_MODES = ("random", "stress_free", "structure_specific")


class AssemblyError(ValueError):
    """State or data dimensions do not match the structure."""


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.  ``c=None`` means: use the dataset's least-squares slope."""

    alpha: int = 1
    c: float | None = None
    beta_s: float = 1e-5
    newton_tol: float = 1e-9
    newton_max_iters: int = 50
    adm_max_iters: int = 200
    k_max: int = 100
    load_factors: tuple = (1.0,)
    init_mode: str = "structure_specific"
    seed: int = 0
    stop_on_stall: bool = True

    def __post_init__(self):
        if self.alpha not in (0, 1):
            raise ValueError("alpha must be 0 or 1")
        if self.c is not None and not self.c > 0:
            raise ValueError("c must be positive")
        if not self.beta_s > 0:
            raise ValueError("beta_s must be positive")
        if not (self.newton_tol > 0 and self.newton_max_iters > 0 and self.adm_max_iters > 0):
            raise ValueError("tolerances and iteration limits must be positive")
        if self.k_max < 0:
            raise ValueError("k_max must be non-negative")
        lf = tuple(float(g) for g in np.atleast_1d(self.load_factors))
        if not lf:
            raise ValueError("load_factors must be nonempty")
        object.__setattr__(self, "load_factors", lf)
        mode = self.init_mode.replace("-", "_")
        if mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        object.__setattr__(self, "init_mode", mode)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class State:
    """Primal-dual state.  ``u`` and ``lam`` are full nodal vectors (fixed DOFs hold 0)."""

    u: np.ndarray
    e: np.ndarray
    s: np.ndarray
    mu: np.ndarray
    lam: np.ndarray

    @classmethod
    def zeros(cls, st: Structure) -> "State":
        m, n = st.n_elements, st.n_dofs
        return cls(np.zeros(n), np.zeros(m), np.zeros(m), np.zeros(m), np.zeros(n))

    def copy(self) -> "State":
        return State(self.u.copy(), self.e.copy(), self.s.copy(), self.mu.copy(), self.lam.copy())

    def check(self, st: Structure) -> None:
        m, n = st.n_elements, st.n_dofs
        shapes = dict(u=n, e=m, s=m, mu=m, lam=n)
        for name, size in shapes.items():
            if np.shape(getattr(self, name)) != (size,):
                raise AssemblyError(f"state.{name} has shape {np.shape(getattr(self, name))}, expected ({size},)")

    def pack(self, st: Structure) -> np.ndarray:
        f = st.free_dofs
        return np.concatenate([self.u[f], self.e, self.s, self.mu, self.lam[f]])

    @classmethod
    def unpack(cls, q: np.ndarray, st: Structure) -> "State":
        nf, m = st.n_free, st.n_elements
        u = np.zeros(st.n_dofs)
        lam = np.zeros(st.n_dofs)
        u[st.free_dofs] = q[:nf]
        lam[st.free_dofs] = q[nf + 3 * m:]
        return cls(u, q[nf:nf + m].copy(), q[nf + m:nf + 2 * m].copy(),
                   q[nf + 2 * m:nf + 3 * m].copy(), lam)

    def negated(self) -> "State":
        return State(-self.u, -self.e, -self.s, -self.mu, -self.lam)


def block_slices(st: Structure) -> dict[str, slice]:
    """Row/column ranges of each unknown block in the packed system."""
    nf, m = st.n_free, st.n_elements
    edges = np.cumsum([0, nf, m, m, m, nf])
    names = ("u", "e", "s", "mu", "lam")
    return {k: slice(int(a), int(b)) for k, a, b in zip(names, edges[:-1], edges[1:])}


@dataclass
class KktSystem:
    """Scaled Newton system ``matrix @ dx = rhs``.

    The physical increment is ``dq = col_scale * dx``; rows were multiplied by
    ``row_scale``.  With ``beta_s`` the u, e and lam rows are scaled by
    ``beta_s`` and the s and mu unknowns are replaced by ``beta_s * ds`` and
    ``beta_s * dmu``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    row_scale: np.ndarray
    col_scale: np.ndarray
    dof_map: dict = field(default_factory=dict)

    def physical_increment(self, dx: np.ndarray) -> np.ndarray:
        return self.col_scale * dx


# -- element kinematics -------------------------------------------------------

def strain(tangent, du, alpha: int) -> float:
    """Axial strain ``t . u' + alpha/2 u' . u'`` of one element.

    ``tangent`` is the unit reference direction and ``du`` the displacement
    gradient ``(u_b - u_a) / L``.
    """
    t = np.atleast_1d(np.asarray(tangent, dtype=float))
    g = np.atleast_1d(np.asarray(du, dtype=float))
    return float(t @ g + 0.5 * alpha * (g @ g))


def _gradients(st: Structure, v: np.ndarray, G: np.ndarray | None = None) -> np.ndarray:
    if G is None:
        G = st.gradient_operator()
    return (G @ v[st.free_dofs]).reshape(st.n_elements, st.dim)


def element_strains(st: Structure, u: np.ndarray, alpha: int) -> np.ndarray:
    du = _gradients(st, np.asarray(u, dtype=float))
    return np.einsum("ij,ij->i", st.tangents, du) + 0.5 * alpha * np.einsum("ij,ij->i", du, du)


# -- objectives ---------------------------------------------------------------

def element_objective(y_hat, y_tilde, c: float, length: float) -> float:
    """``L * (c/2 (e - e~)^2 + 1/(2c) (s - s~)^2)`` for one element."""
    de = y_hat[0] - y_tilde[0]
    ds = y_hat[1] - y_tilde[1]
    return float(length * (0.5 * c * de * de + 0.5 / c * ds * ds))


def element_objectives(e_hat, s_hat, e_tilde, s_tilde, c: float, lengths) -> np.ndarray:
    de = np.asarray(e_hat) - np.asarray(e_tilde)
    ds = np.asarray(s_hat) - np.asarray(s_tilde)
    return np.asarray(lengths) * (0.5 * c * de * de + 0.5 / c * ds * ds)


def global_objective(state: State, e_tilde, s_tilde, c: float, st: Structure) -> float:
    """Weighted squared distance between the state and the assigned data.

    ``e_tilde``/``s_tilde`` are per-element data values (use
    ``dataset.strains[assignment]``).
    """
    if np.shape(e_tilde) != (st.n_elements,) or np.shape(s_tilde) != (st.n_elements,):
        raise AssemblyError("one data pair per element expected")
    return float(np.sum(element_objectives(state.e, state.s, e_tilde, s_tilde, c, st.lengths)))


# -- residual and Jacobian ----------------------------------------------------

def _check_inputs(state, e_tilde, s_tilde, st, F):
    state.check(st)
    if np.shape(e_tilde) != (st.n_elements,) or np.shape(s_tilde) != (st.n_elements,):
        raise AssemblyError("one data pair per element expected")
    if F is not None and np.shape(F) != (st.n_dofs,):
        raise AssemblyError(f"load vector must have length {st.n_dofs}")


def kkt_residual(
    state: State,
    e_tilde,
    s_tilde,
    st: Structure,
    c: float,
    alpha: int,
    F: np.ndarray,
    G: np.ndarray | None = None,
) -> np.ndarray:
    """Unscaled stationarity residual ``g(q)`` in packed block order."""
    _check_inputs(state, e_tilde, s_tilde, st, F)
    if G is None:
        G = st.gradient_operator()
    m, d = st.n_elements, st.dim
    L, A, t = st.lengths, st.areas, st.tangents
    du = (G @ state.u[st.free_dofs]).reshape(m, d)
    dl = (G @ state.lam[st.free_dofs]).reshape(m, d)
    a = t + alpha * du
    eps = np.einsum("ij,ij->i", t, du) + 0.5 * alpha * np.einsum("ij,ij->i", du, du)
    s, mu, e = state.s, state.mu, state.e
    g_u = G.T @ ((L * mu)[:, None] * a + alpha * (L * A * s)[:, None] * dl).ravel()
    g_e = L * (c * (e - e_tilde) - mu)
    g_s = L * ((s - s_tilde) / c + A * np.einsum("ij,ij->i", a, dl))
    g_mu = L * (eps - e)
    g_lam = G.T @ ((L * A * s)[:, None] * a).ravel() - F[st.free_dofs]
    return np.concatenate([g_u, g_e, g_s, g_mu, g_lam])


def _scales(st: Structure, beta_s: float):
    sl = block_slices(st)
    n = sl["lam"].stop
    row = np.ones(n)
    col = np.ones(n)
    for k in ("u", "e", "lam"):
        row[sl[k]] = beta_s
    for k in ("s", "mu"):
        col[sl[k]] = 1.0 / beta_s
    return row, col


def assemble_kkt(
    state: State,
    e_tilde,
    s_tilde,
    st: Structure,
    config: SolverConfig,
    F: np.ndarray,
    c: float | None = None,
    G: np.ndarray | None = None,
) -> KktSystem:
    """Assemble the scaled Newton system at ``state`` for fixed data.

    ``c`` overrides ``config.c`` (one of them must be set).  ``F`` is the full
    external load vector.  The unscaled matrix is recovered as
    ``matrix / outer(row_scale, col_scale)``.
    """
    c = config.c if c is None else c
    if c is None:
        raise AssemblyError("objective weight c is not set")
    _check_inputs(state, e_tilde, s_tilde, st, F)
    if G is None:
        G = st.gradient_operator()
    alpha = config.alpha
    m, d, nf = st.n_elements, st.dim, st.n_free
    L, A, t = st.lengths, st.areas, st.tangents
    sl = block_slices(st)
    n = sl["lam"].stop
    K = np.zeros((n, n))

    du = (G @ state.u[st.free_dofs]).reshape(m, d)
    dl = (G @ state.lam[st.free_dofs]).reshape(m, d)
    a = t + alpha * du
    G3 = G.reshape(m, d, nf)
    # per-element (nf,) rows: G_i^T a_i and G_i^T lam'_i
    Ga = np.einsum("idk,id->ik", G3, a)
    su, se, ss, smu, slam = (sl[k] for k in ("u", "e", "s", "mu", "lam"))

    K[su, smu] = (L[:, None] * Ga).T
    K[ss, slam] = (L * A)[:, None] * Ga
    K[se, se] = np.diag(L * c)
    K[se, smu] = np.diag(-L)
    K[ss, ss] = np.diag(L / c)
    if alpha:
        Gl = np.einsum("idk,id->ik", G3, dl)
        w_mu = np.repeat(L * state.mu, d)
        w_s = np.repeat(L * A * state.s, d)
        K[su, su] = G.T @ (w_mu[:, None] * G)
        K[su, slam] = G.T @ (w_s[:, None] * G)
        K[su, ss] = ((L * A)[:, None] * Gl).T
    # mirror the upper blocks
    K = np.triu(K) + np.triu(K, 1).T

    g = kkt_residual(state, e_tilde, s_tilde, st, c, alpha, F, G)
    row, col = _scales(st, config.beta_s)
    matrix = row[:, None] * K * col[None, :]
    return KktSystem(matrix, -row * g, row, col, sl)
