"""Serialization helpers: complex matrices as row-major [re, im] pairs."""

from __future__ import annotations

import json

import numpy as np


def matrix_to_json(mat) -> list:
    mat = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 2:  # plain real matrix
        return arr.astype(complex)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix must be a list of rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
