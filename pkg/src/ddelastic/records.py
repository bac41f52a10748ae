"""Serialization of datasets, run records and plot data.

JSON uses Python's shortest round-trip float repr and CSV cells are written
with ``repr`` as well, so reading a file back gives bit-identical arrays.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from .assembly import State, element_objectives
from .dataset import Dataset, read_columns
from .solvers import RunRecord
from .structure import Structure

__all__ = [
    "SCHEMA_VERSION",
    "run_record_to_dict",
    "write_json",
    "read_json",
    "write_table",
    "read_table",
    "write_dataset_csv",
    "write_plot_data",
    "load_schema",
    "TIMING_KEYS",
]

SCHEMA_VERSION = 1
# fields that legitimately differ between otherwise identical runs
TIMING_KEYS = ("wall_time", "timings")


def _state_dict(q: State) -> dict:
    return dict(u=q.u.tolist(), e=q.e.tolist(), s=q.s.tolist(), mu=q.mu.tolist(), lam=q.lam.tolist())


def run_record_to_dict(record: RunRecord, structure: Structure | None = None,
                       dataset: Dataset | None = None) -> dict:
    """Plain-JSON view of a run record.  States are stored with full nodal vectors."""
    steps = []
    for s in record.steps:
        steps.append(dict(
            step=s.step,
            load_factor=s.load_factor,
            objective=s.objective,
            adm_objective=s.adm_objective,
            newton_iterations=s.newton_iterations,
            adm_iterations=s.adm_iterations,
            greedy_searches=s.greedy_searches,
            improved=s.improved,
            assignment=[int(k) for k in s.assignment],
            state=_state_dict(s.state),
            wall_time=s.wall_time,
            timings=dict(s.timings),
        ))
    cfg = asdict(record.config)
    cfg["load_factors"] = list(cfg["load_factors"])
    out = dict(
        schema_version=SCHEMA_VERSION,
        solver=record.solver,
        status=record.status,
        error=record.error,
        error_code=record.error_code,
        c=record.c,
        config=cfg,
        initial_assignment=[int(k) for k in record.initial_assignment],
        steps=steps,
        totals=record.totals(),
    )
    if structure is not None:
        out["structure"] = dict(dim=structure.dim, n_nodes=structure.n_nodes,
                                n_elements=structure.n_elements,
                                free_dofs=[int(k) for k in structure.free_dofs])
    if dataset is not None:
        out["dataset"] = dict(n_points=len(dataset), provenance=_jsonable(dataset.provenance))
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if callable(obj):
        return getattr(obj, "__name__", repr(obj))
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def read_json(path):
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def load_schema() -> dict:
    ref = resources.files("ddelastic") / "data" / "run_record.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, columns: dict, comments: dict | None = None) -> Path:
    """Write equal-length columns as CSV; ``comments`` become ``# key: json`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = {len(a) for a in arrays}
    if len(n) > 1:
        raise ValueError(f"columns differ in length: {dict(zip(names, map(len, arrays)))}")
    with path.open("w", newline="", encoding="utf-8") as fh:
        for k, v in (comments or {}).items():
            fh.write(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*arrays):
            w.writerow([_cell(v) for v in row])
    return path


def read_table(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                header = next(csv.reader([line]))
                break
        else:
            return {}
    return read_columns(path, [h.strip() for h in header])


def write_dataset_csv(d: Dataset, path) -> Path:
    return write_table(path, dict(strain=d.strains, stress=d.stresses),
                       comments=dict(provenance=d.provenance, n_points=len(d)))


def write_plot_data(record: RunRecord, structure: Structure, dataset: Dataset, out_dir,
                    prefix: str = "") -> dict[str, Path]:
    """Emit the per-run plot tables for the last completed step.

    Files: deformed configuration, element stresses, dataset overlay with
    assignment counts, and objective against load step.
    """
    out_dir = Path(out_dir)
    paths = {}
    steps = record.steps
    paths["objective"] = write_table(out_dir / f"{prefix}objective_vs_step.csv", dict(
        step=[s.step for s in steps],
        load_factor=[s.load_factor for s in steps],
        objective=[s.objective for s in steps],
        adm_objective=[s.adm_objective for s in steps],
    ))
    if not steps:
        return paths
    last = steps[-1]
    q, a = last.state, last.assignment
    d = structure.dim
    X = structure.nodes
    U = q.u.reshape(-1, d)
    cols = dict(node=np.arange(structure.n_nodes))
    for k, name in enumerate("xyz"[:d]):
        cols[name] = X[:, k]
    for k, name in enumerate("xyz"[:d]):
        cols[f"u{name}"] = U[:, k]
    for k, name in enumerate("xyz"[:d]):
        cols[f"{name}_def"] = X[:, k] + U[:, k]
    paths["deformed"] = write_table(out_dir / f"{prefix}deformed.csv", cols)
    e_t, s_t = dataset.strains[a], dataset.stresses[a]
    paths["elements"] = write_table(out_dir / f"{prefix}element_stresses.csv", dict(
        element=np.arange(structure.n_elements),
        node_a=structure.elements[:, 0],
        node_b=structure.elements[:, 1],
        e_hat=q.e,
        s_hat=q.s,
        data_index=a,
        e_tilde=e_t,
        s_tilde=s_t,
        local_objective=element_objectives(q.e, q.s, e_t, s_t, record.c, structure.lengths),
    ))
    counts = np.bincount(a, minlength=len(dataset))
    paths["overlay"] = write_table(out_dir / f"{prefix}dataset_overlay.csv", dict(
        index=np.arange(len(dataset)),
        strain=dataset.strains,
        stress=dataset.stresses,
        assigned=counts,
    ))
    return paths
