"""JSON/CSV file formats.

Complex numbers are [re, im] pairs; a matrix is {"rows", "cols", "data"} with
data in row-major order. Floats are written with repr, which round-trips exactly.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .dilation import DilationTriple, MomentKernel, RandomOperator
from .errors import DimensionMismatch, KernelError
from .gaussian import GaussianRealization
from .kernels import OperatorKernel, RandomKernel
from .kolmogorov import KolmogorovFactor


class FormatError(KernelError):
    """Malformed input file."""


def matrix_to_json(a) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return {"rows": a.shape[0], "cols": a.shape[1], "data": [[float(z.real), float(z.imag)] for z in a.ravel()]}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        if len(data) != rows * cols:
            raise FormatError(f"matrix declares {rows}x{cols} but has {len(data)} entries")
        vals = np.array([complex(float(re), float(im)) for re, im in data], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix object: {exc}") from exc
    return vals.reshape(rows, cols)


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


def kernel_to_json(k: OperatorKernel) -> dict:
    blocks = {}
    for i in range(k.n_points):
        for j in range(k.n_points):
            blocks[f"{i},{j}"] = matrix_to_json(k.blocks[i, j])
    return {"points": [str(p) for p in k.points], "dim": k.dim, "blocks": blocks}


def kernel_from_json(obj) -> OperatorKernel:
    try:
        points = [str(p) for p in obj["points"]]
        d = int(obj["dim"])
        raw = obj["blocks"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad kernel object: {exc}") from exc
    n = len(points)
    blocks = np.full((n, n, d, d), np.nan, dtype=complex)
    for key, m in raw.items():
        try:
            i, j = (int(x) for x in key.split(","))
        except ValueError:
            raise FormatError(f"bad block key {key!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise FormatError(f"block key {key!r} out of range")
        mat = matrix_from_json(m)
        if mat.shape != (d, d):
            raise DimensionMismatch(f"block {key} has shape {mat.shape}, expected ({d}, {d})")
        blocks[i, j] = mat
    for i in range(n):
        for j in range(n):
            if np.isnan(blocks[i, j]).any():
                if np.isnan(blocks[j, i]).any():
                    raise FormatError(f"missing block {i},{j}")
                blocks[i, j] = blocks[j, i].conj().T
    return OperatorKernel(tuple(points), blocks)


def random_kernel_to_json(rk: RandomKernel) -> dict:
    return {"atoms": [{"weight": w, "kernel": kernel_to_json(k)} for w, k in rk.atoms()]}


def random_kernel_from_json(obj) -> RandomKernel:
    try:
        atoms = [(float(a["weight"]), kernel_from_json(a["kernel"])) for a in obj["atoms"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad random kernel object: {exc}") from exc
    return RandomKernel.from_atoms(atoms)


def factor_to_json(f: KolmogorovFactor) -> dict:
    return {
        "rank": f.rank,
        "dim": f.dim,
        "rank_tol": f.rank_tol,
        "points": [str(p) for p in f.points],
        "factors": {str(p): matrix_to_json(v) for p, v in zip(f.points, f.factors)},
    }


def factor_from_json(obj) -> KolmogorovFactor:
    try:
        r, d = int(obj["rank"]), int(obj["dim"])
        points = [str(p) for p in obj["points"]]
        mats = [matrix_from_json(obj["factors"][p]).reshape(r, d) for p in points]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad factor object: {exc}") from exc
    arr = np.stack(mats) if mats else np.zeros((0, r, d))
    return KolmogorovFactor(tuple(points), arr, float(obj.get("rank_tol", 1e-10)))


def realization_to_json(g: GaussianRealization) -> dict:
    pts = [str(p) for p in g.points]
    return {
        "M": g.sample_count,
        "points": pts,
        "samples": [{p: vector_to_json(v) for p, v in zip(pts, draw)} for draw in g.samples],
    }


def operator_to_json(A: RandomOperator) -> dict:
    return {"dim": A.dim, "atoms": [{"weight": w, "matrix": matrix_to_json(m)} for w, m in A.atoms()]}


def operator_from_json(obj) -> RandomOperator:
    try:
        d = int(obj["dim"])
        atoms = obj["atoms"]
        weights = [float(a["weight"]) for a in atoms]
        mats = [matrix_from_json(a["matrix"]) for a in atoms]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad operator object: {exc}") from exc
    if not mats:
        raise FormatError("operator has no atoms")
    if any(m.shape != (d, d) for m in mats):
        raise DimensionMismatch(f"operator atoms must be {d}x{d}")
    return RandomOperator(weights, np.stack(mats))


def moment_kernel_to_json(K: MomentKernel) -> dict:
    out = kernel_to_json(K)
    out["max_power"] = K.max_power
    return out


def moment_kernel_from_json(obj) -> MomentKernel:
    k = kernel_from_json(obj)
    return MomentKernel(tuple(range(k.n_points)), k.blocks)


def triple_to_json(T: DilationTriple) -> dict:
    return {
        "space_dim": T.space_dim,
        "trunc_depth": T.trunc_depth,
        "U": matrix_to_json(T.U),
        "P": matrix_to_json(T.P),
        "W": matrix_to_json(T.W),
        "B": matrix_to_json(T.B),
    }


def triple_from_json(obj) -> DilationTriple:
    try:
        return DilationTriple(
            matrix_from_json(obj["U"]),
            matrix_from_json(obj["P"]),
            matrix_from_json(obj["W"]),
            matrix_from_json(obj["B"]),
            int(obj["trunc_depth"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad dilation triple: {exc}") from exc


def report_to_json(report) -> dict:
    """Plain dict for a report dataclass; arrays become matrices."""
    if is_dataclass(report):
        report = asdict(report)
    out = {}
    for k, v in report.items():
        if isinstance(v, np.ndarray):
            v = matrix_to_json(v)
        elif isinstance(v, (np.floating, np.integer, np.bool_)):
            v = v.item()
        out[k] = v
    return out


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False, allow_nan=False) + "\n"


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_json(path, obj):
    write_atomic(path, dumps(obj))


def convergence_csv(record, header=("m_or_M", "max_abs_error", "stderr_estimate")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for m, err, se in record:
        w.writerow([m, repr(float(err)), repr(float(se))])
    return buf.getvalue()
