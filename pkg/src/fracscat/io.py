"""Flat-array dumps with JSON sidecars, CSV tables and canonical JSON."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .grid import GridSpec, make_grid
from .operators import HermitianOperator


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    base = p.with_suffix("") if p.suffix in (".bin", ".json") else p
    return base.with_suffix(".bin"), base.with_suffix(".json")


def write_flat(path, values) -> Path:
    """Interleaved real/imaginary little-endian float64."""
    arr = np.ascontiguousarray(np.ravel(values), dtype=np.complex128)
    flat = np.empty(2 * arr.size, dtype="<f8")
    flat[0::2] = arr.real
    flat[1::2] = arr.imag
    Path(path).write_bytes(flat.tobytes())
    return Path(path)


def read_flat(path) -> np.ndarray:
    flat = np.frombuffer(Path(path).read_bytes(), dtype="<f8")
    if flat.size % 2:
        raise ValueError(f"{path}: odd number of float64 values")
    return flat[0::2] + 1j * flat[1::2]


def save_grid_function(path, grid: GridSpec, values, components: int = 1) -> tuple[Path, Path]:
    """Write ``values`` (``components`` stacked grid functions) plus sidecar."""
    bin_path, meta_path = _paths(path)
    if np.size(values) != components * grid.size:
        raise ValueError("value count does not match grid and component count")
    write_flat(bin_path, values)
    meta = {"n": grid.n, "N": grid.N, "L": grid.L, "components": components}
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return bin_path, meta_path


def load_grid_function(path, memory_cap: int | None = None) -> tuple[GridSpec, np.ndarray]:
    """Return the grid and an array shaped ``(components,) + grid.shape``."""
    bin_path, meta_path = _paths(path)
    meta = json.loads(meta_path.read_text())
    kwargs = {} if memory_cap is None else {"memory_cap": memory_cap}
    grid = make_grid(int(meta["n"]), int(meta["N"]), float(meta["L"]), **kwargs)
    comps = int(meta.get("components", 1))
    values = read_flat(bin_path)
    if values.size != comps * grid.size:
        raise ValueError(f"{bin_path}: expected {comps * grid.size} values, found {values.size}")
    return grid, values.reshape((comps,) + grid.shape)


def save_operator(path, op: HermitianOperator) -> tuple[Path, Path]:
    bin_path, meta_path = _paths(path)
    write_flat(bin_path, op.matrix)
    meta = {"dim": op.dim, "label": op.label,
            "hermiticity_residual": op.hermiticity_residual()}
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return bin_path, meta_path


def load_operator(path) -> HermitianOperator:
    bin_path, meta_path = _paths(path)
    meta = json.loads(meta_path.read_text())
    dim = int(meta["dim"])
    return HermitianOperator(read_flat(bin_path).reshape(dim, dim), meta.get("label", ""))


def to_jsonable(obj):
    """Convert numpy containers and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


def dumps_canonical(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    Path(path).write_text(dumps_canonical(obj))
    return Path(path)


def write_csv(path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (repr(float(v)) if isinstance(
                v, (float, np.floating)) else v) for v in row])
    return Path(path)
