"""Discretized bars and planar trusses.

Nodes carry ``dim`` displacement components (1 for a straight bar, 2 for a
planar truss); global DOF ``k`` is component ``k % dim`` of node ``k // dim``.
Every element is a two-node member with constant cross-section.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "Structure",
    "StructureError",
    "BenchmarkSpec",
    "build_bar",
    "build_truss",
    "load_structure",
    "structure_to_dict",
    "structure_from_dict",
    "manufactured_bar_load",
    "manufactured_displacement",
    "manufactured_strain",
    "simplified_truss",
]

# 2-point Gauss-Legendre rule on [0, 1]
_G2_X = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_G2_W = np.array([0.5, 0.5])


class StructureError(ValueError):
    """Invalid geometry, connectivity or boundary conditions."""


@dataclass(frozen=True, eq=False)
class Structure:
    """Nodes, two-node elements, supports and the reference load.

    Parameters
    ----------
    nodes : (n_nodes, dim) reference coordinates in m.
    elements : (m, 2) node indices.
    areas : (m,) cross-section areas in m^2.
    fixed_dofs : constrained global DOFs (zero displacement).
    nodal_loads : (n_nodes * dim,) nodal forces in N.
    distributed_load : optional ``f(X) -> (..., dim)`` force density in N/m,
        evaluated at reference positions ``X`` of shape ``(..., dim)``.
    """

    nodes: np.ndarray
    elements: np.ndarray
    areas: np.ndarray
    fixed_dofs: tuple
    nodal_loads: np.ndarray
    distributed_load: Callable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        elements = np.array(self.elements, dtype=int).reshape(-1, 2)
        areas = np.broadcast_to(np.asarray(self.areas, dtype=float), (len(elements),)).copy()
        n_nodes, dim = nodes.shape
        if dim not in (1, 2):
            raise StructureError("only 1D bars and 2D trusses are supported")
        if len(elements) == 0:
            raise StructureError("a structure needs at least one element")
        if elements.min() < 0 or elements.max() >= n_nodes:
            raise StructureError("element references a node out of range")
        if np.any(elements[:, 0] == elements[:, 1]):
            raise StructureError("element connects a node to itself")
        if np.any(areas <= 0):
            raise StructureError("cross-section areas must be positive")
        ndof = n_nodes * dim
        fixed = tuple(sorted({int(k) for k in self.fixed_dofs}))
        if fixed and (fixed[0] < 0 or fixed[-1] >= ndof):
            raise StructureError("fixed DOF out of range")
        loads = np.zeros(ndof) if self.nodal_loads is None else np.array(self.nodal_loads, dtype=float)
        if loads.shape != (ndof,):
            raise StructureError(f"nodal_loads must have length {ndof}")
        d = nodes[elements[:, 1]] - nodes[elements[:, 0]]
        lengths = np.linalg.norm(d, axis=1)
        if np.any(lengths <= 0):
            raise StructureError("element of zero length")
        for name, val in (("nodes", nodes), ("elements", elements), ("areas", areas),
                          ("nodal_loads", loads)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "fixed_dofs", fixed)
        lengths.setflags(write=False)
        tangents = d / lengths[:, None]
        tangents.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "tangents", tangents)
        free = np.setdiff1d(np.arange(ndof), np.array(fixed, dtype=int))
        free.setflags(write=False)
        object.__setattr__(self, "free_dofs", free)
        if free.size == 0:
            raise StructureError("all DOFs are fixed")
        self._check_supports()

    # -- sizes ---------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.nodes.size

    @property
    def n_free(self) -> int:
        return self.free_dofs.size

    def element_dofs(self) -> np.ndarray:
        """(m, 2*dim) global DOFs of each element, node a then node b."""
        d = self.dim
        a, b = self.elements[:, 0], self.elements[:, 1]
        comp = np.arange(d)
        return np.hstack([a[:, None] * d + comp, b[:, None] * d + comp])

    def gradient_operator(self) -> np.ndarray:
        """Dense ``(m*dim, n_free)`` map from free nodal values to element gradients.

        Row block ``i`` gives ``(v_b - v_a) / L_i`` for element ``i``.
        """
        m, d = self.n_elements, self.dim
        G = np.zeros((m * d, self.n_dofs))
        rows = np.arange(m * d).reshape(m, d)
        dofs = self.element_dofs()
        inv_L = 1.0 / self.lengths
        for c in range(d):
            G[rows[:, c], dofs[:, c]] -= inv_L
            G[rows[:, c], dofs[:, d + c]] += inv_L
        return G[:, self.free_dofs]

    def load_vector(self) -> np.ndarray:
        """Full reference load vector: nodal forces plus consistent distributed load.

        Distributed loads are integrated per element with 2-point Gauss.
        """
        F = np.array(self.nodal_loads, dtype=float)
        if self.distributed_load is None:
            return F
        d = self.dim
        Xa = self.nodes[self.elements[:, 0]]
        Xb = self.nodes[self.elements[:, 1]]
        dofs = self.element_dofs()
        for x, w in zip(_G2_X, _G2_W):
            X = Xa + x * (Xb - Xa)
            f = np.asarray(self.distributed_load(X), dtype=float).reshape(-1, d)
            wl = (w * self.lengths)[:, None]
            np.add.at(F, dofs[:, :d], wl * (1.0 - x) * f)
            np.add.at(F, dofs[:, d:], wl * x * f)
        return F

    def linear_stiffness(self, modulus: float = 1.0) -> np.ndarray:
        """Small-strain stiffness on the free DOFs for a uniform modulus."""
        G = self.gradient_operator()
        m, d = self.n_elements, self.dim
        Gt = (G.reshape(m, d, -1) * self.tangents[:, :, None]).sum(axis=1)
        return Gt.T @ ((modulus * self.areas * self.lengths)[:, None] * Gt)

    def _check_supports(self):
        K = self.linear_stiffness()
        scale = np.max(np.abs(K)) if K.size else 0.0
        if scale == 0.0 or np.linalg.matrix_rank(K, tol=1e-10 * scale) < K.shape[0]:
            raise StructureError("supports leave a rigid-body or mechanism mode")


def build_bar(
    L0: float,
    n_elements: int,
    area: float,
    fixed: str = "both",
    tip_load: float = 0.0,
    distributed_load: Callable | None = None,
) -> Structure:
    """Straight bar on ``[0, L0]`` with equally spaced nodes.

    ``fixed`` is ``"both"``, ``"left"`` or ``"right"``.  ``tip_load`` is an
    axial nodal force at the free end (only meaningful for one fixed end).
    ``distributed_load`` takes the axial coordinate array and returns N/m.
    """
    if n_elements < 1:
        raise StructureError("a bar needs at least one element")
    if not L0 > 0:
        raise StructureError("L0 must be positive")
    x = np.linspace(0.0, L0, n_elements + 1)
    elements = np.column_stack([np.arange(n_elements), np.arange(1, n_elements + 1)])
    ends = {"both": (0, n_elements), "left": (0,), "right": (n_elements,)}
    if fixed not in ends:
        raise StructureError(f"fixed must be one of {sorted(ends)}")
    loads = np.zeros(n_elements + 1)
    if tip_load:
        free_end = n_elements if fixed == "left" else 0
        if fixed == "both":
            raise StructureError("a tip load needs a free end")
        loads[free_end] = tip_load
    f = None
    if distributed_load is not None:
        def f(X, _g=distributed_load):
            return np.asarray(_g(X[..., 0]), dtype=float)[..., None]
    return Structure(x[:, None], elements, area, ends[fixed], loads, f,
                     dict(kind="bar", L0=L0, n_elements=n_elements, fixed=fixed))


def build_truss(
    nodes: Sequence[Sequence[float]],
    members: Sequence[Sequence[int]],
    supports: Mapping[int, Sequence[bool]] | Sequence,
    loads: Mapping[int, Sequence[float]] | None = None,
    areas: float | Sequence[float] = 1.0,
    meta: dict | None = None,
) -> Structure:
    """Planar pin-jointed truss.

    ``supports`` maps node index to per-component fixity flags, e.g.
    ``{0: (True, True), 3: (False, True)}``.  ``loads`` maps node index to a
    force vector in N.
    """
    X = np.asarray(nodes, dtype=float)
    if X.ndim != 2:
        raise StructureError("nodes must be a list of coordinate tuples")
    n_nodes, dim = X.shape
    E = np.asarray(members, dtype=int).reshape(-1, 2)
    keys = [tuple(sorted(map(int, e))) for e in E]
    if len(set(keys)) != len(keys):
        raise StructureError("duplicate member")
    used = set(E.ravel().tolist())
    dangling = sorted(set(range(n_nodes)) - used)
    if dangling:
        raise StructureError(f"dangling node(s) {dangling}")
    if isinstance(supports, Mapping):
        supports = list(supports.items())
    if not supports:
        raise StructureError("a truss needs at least one support")
    fixed = []
    for node, flags in supports:
        flags = list(flags)
        if len(flags) != dim:
            raise StructureError(f"support at node {node} needs {dim} flags")
        fixed += [int(node) * dim + c for c, on in enumerate(flags) if on]
    F = np.zeros(n_nodes * dim)
    for node, force in (loads or {}).items():
        F[int(node) * dim: int(node) * dim + dim] += np.asarray(force, dtype=float)
    return Structure(X, E, areas, fixed, F, None, dict(meta or {}, kind="truss"))


# -- JSON config -------------------------------------------------------------

def structure_from_dict(cfg: Mapping) -> Structure:
    """Build a truss (or 1D bar) from the JSON config layout in docs/formats.md."""
    supports = [(s["node"], s["fix"]) for s in cfg["supports"]]
    loads = {}
    for item in cfg.get("loads", []):
        loads[item["node"]] = np.add(loads.get(item["node"], 0.0), item["force"])
    meta = {k: v for k, v in cfg.items() if k not in ("nodes", "members", "supports", "loads", "areas")}
    return build_truss(cfg["nodes"], cfg["members"], supports, loads, cfg.get("areas", 1.0), meta)


def structure_to_dict(st: Structure) -> dict:
    d = st.dim
    supports = {}
    for k in st.fixed_dofs:
        supports.setdefault(k // d, [False] * d)[k % d] = True
    loads = []
    for n in range(st.n_nodes):
        f = st.nodal_loads[n * d:(n + 1) * d]
        if np.any(f != 0):
            loads.append({"node": n, "force": f.tolist()})
    out = {k: v for k, v in st.meta.items() if k != "kind"}
    out.update(
        nodes=st.nodes.tolist(),
        members=st.elements.tolist(),
        areas=st.areas.tolist(),
        supports=[{"node": n, "fix": f} for n, f in sorted(supports.items())],
        loads=loads,
    )
    return out


def load_structure(path) -> Structure:
    with Path(path).open(encoding="utf-8") as fh:
        return structure_from_dict(json.load(fh))


def simplified_truss(
    gamma: float = 1.0,
    area: float = 0.002,
    width: float = 1.0,
    height: float = 1.0,
) -> Structure:
    """Two-member truss with one free node loaded downward by ``400 * gamma`` N.

    Supports sit at ``(0, 0)`` and ``(0, height)``; the free node is at
    ``(width, height / 2)``.
    """
    nodes = [(0.0, 0.0), (0.0, height), (width, 0.5 * height)]
    return build_truss(nodes, [(0, 2), (1, 2)], {0: (True, True), 1: (True, True)},
                       {2: (0.0, -400.0 * gamma)}, area, dict(name="simplified"))


# -- manufactured bar benchmark ---------------------------------------------

@dataclass(frozen=True)
class BenchmarkSpec:
    """Manufactured displacement ``u = beta * sin(pi * xi / L0)`` on a fixed-fixed bar."""

    E: float = 70e9
    beta: float = 0.15 * np.pi
    L0: float = np.pi
    alpha: int = 0
    area: float = np.pi * 0.02**2

    def __post_init__(self):
        # beta may be negative for the mirrored benchmark
        if not (self.E > 0 and self.L0 > 0 and self.area > 0 and self.beta != 0):
            raise StructureError("E, L0 and area must be positive and beta nonzero")
        if self.alpha not in (0, 1):
            raise StructureError("alpha must be 0 or 1")

    def mirrored(self) -> "BenchmarkSpec":
        return BenchmarkSpec(self.E, -self.beta, self.L0, self.alpha, self.area)

    def structure(self, n_elements: int) -> Structure:
        return build_bar(self.L0, n_elements, self.area, "both",
                         distributed_load=lambda x: manufactured_bar_load(x, self))

    def max_strain(self) -> float:
        """Largest |strain| of the reference solution."""
        k = abs(self.beta) * np.pi / self.L0
        return k + 0.5 * self.alpha * k * k


def manufactured_displacement(xi, spec: BenchmarkSpec):
    return spec.beta * np.sin(np.pi * np.asarray(xi, dtype=float) / spec.L0)


def manufactured_strain(xi, spec: BenchmarkSpec):
    k = np.pi / spec.L0
    du = spec.beta * k * np.cos(k * np.asarray(xi, dtype=float))
    return du + 0.5 * spec.alpha * du * du


def manufactured_bar_load(xi, spec: BenchmarkSpec):
    """Axial force density (N/m) reproducing the manufactured displacement.

    ``A * (-E u'' (1 + 3 a u' + 1.5 a^2 u'^2))`` for the linear material law
    ``s = E * strain``, with ``a = alpha``.
    """
    k = np.pi / spec.L0
    arg = k * np.asarray(xi, dtype=float)
    du = spec.beta * k * np.cos(arg)
    ddu = -spec.beta * k * k * np.sin(arg)
    a = spec.alpha
    return spec.area * (-spec.E * ddu * (1.0 + 3.0 * a * du + 1.5 * a * a * du * du))
