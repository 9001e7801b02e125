"""Left-invariant driftless control systems and their algebraic hypotheses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liecore import (
    TOL_RANK,
    AlgebraBasis,
    AlgebraElement,
    Family,
    GroupSpec,
    LieError,
    standard_basis,
)


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """x' = sum_k u_k X_k(x) with generators given as algebra elements."""

    spec: GroupSpec
    basis: AlgebraBasis
    generators: tuple

    def __post_init__(self):
        gens = tuple(
            g if isinstance(g, AlgebraElement) else AlgebraElement(self.spec, g) for g in self.generators
        )
        if self.basis.spec != self.spec:
            raise LieError("basis and system use different groups")
        if not 1 <= len(gens) <= self.spec.dim:
            raise LieError(f"need between 1 and {self.spec.dim} generators, got {len(gens)}")
        for g in gens:
            if g.spec != self.spec:
                raise LieError("generator belongs to a different group")
            if g.norm() == 0.0:
                raise LieError("generators must be nonzero")
        object.__setattr__(self, "generators", gens)

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def n(self) -> int:
        return self.spec.dim

    def generator_stack(self) -> np.ndarray:
        return np.array([g.mat for g in self.generators])


@dataclass(frozen=True)
class SystemReport:
    bracket_generating: bool
    bracket_rank: int
    semisimple: bool
    min_abs_killing_eig: float
    reg_sys: bool
    reg_sys_rank: int

    def as_dict(self) -> dict:
        return {
            "bracket_generating": self.bracket_generating,
            "bracket_rank": self.bracket_rank,
            "semisimple": self.semisimple,
            "min_abs_killing_eig": self.min_abs_killing_eig,
            "reg_sys": self.reg_sys,
            "reg_sys_rank": self.reg_sys_rank,
        }


def numerical_rank(rows: np.ndarray, tol: float = TOL_RANK) -> int:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        return 0
    sv = np.linalg.svd(rows, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def _orth_rows(rows: np.ndarray, tol: float = TOL_RANK) -> np.ndarray:
    """Orthonormal basis (rows) of the row space, Euclidean in coordinates."""
    if rows.size == 0:
        return rows
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s[0] == 0.0:
        return rows[:0]
    return vh[s > tol * s[0]]


def check_bracket_generating(sys: ControlSystem) -> tuple[bool, int]:
    """Rank of the Lie algebra generated by the control directions."""
    basis = sys.basis
    gens = sys.generator_stack()
    span = _orth_rows(basis.coords(gens))
    rank = span.shape[0]
    for _ in range(sys.n):
        mats = basis.from_coords(span)
        new = []
        for e in mats:
            for x in gens:
                new.append(basis.coords(e @ x - x @ e))
        span = _orth_rows(np.vstack([span, np.array(new)]))
        if span.shape[0] == rank:
            break
        rank = span.shape[0]
    return rank == sys.n, rank


def check_semisimple(sys: ControlSystem | AlgebraBasis) -> tuple[bool, float]:
    """Cartan's criterion on the Killing Gram matrix."""
    basis = sys.basis if isinstance(sys, ControlSystem) else sys
    evals = np.abs(np.linalg.eigvalsh(basis.killing))
    lo, hi = float(evals.min()), float(evals.max())
    return bool(hi > 0 and lo > basis.n * TOL_RANK * hi), lo


def krylov_rows(sys: ControlSystem, pivot: int = 0) -> np.ndarray:
    """Coordinates of ad(X_pivot)^p X_k for p = 0..n and every k."""
    basis = sys.basis
    ad_pivot = basis.coords(
        sys.generators[pivot].mat @ basis.stack - basis.stack @ sys.generators[pivot].mat
    ).T
    rows = []
    for g in sys.generators:
        v = basis.coords(g.mat)
        for _ in range(sys.n + 1):
            rows.append(v)
            v = ad_pivot @ v
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                break
            v = v / nrm  # rescaling keeps the span and the SVD well conditioned
    return np.array(rows)


def check_reg_sys(sys: ControlSystem, pivot: int = 0) -> tuple[bool, int]:
    """Span of the ad(X_pivot)-Krylov orbits of the generators; zeroth power included."""
    if not 0 <= pivot < sys.m:
        raise LieError(f"pivot {pivot} out of range for {sys.m} generators")
    rank = numerical_rank(krylov_rows(sys, pivot))
    return rank == sys.n, rank


def system_report(sys: ControlSystem, pivot: int = 0) -> SystemReport:
    bg, bg_rank = check_bracket_generating(sys)
    ss, lo = check_semisimple(sys)
    rs, rs_rank = check_reg_sys(sys, pivot)
    return SystemReport(bg, bg_rank, ss, lo, rs, rs_rank)


# ------------------------------------------------------------------ presets


def _su3_two_generators(basis: AlgebraBasis):
    # regular diagonal pivot with distinct root values (1-2, 1+3, 2+3)
    x1 = 1j * np.diag([1.0, 2.0, -3.0]) / 2.0
    b = basis.stack
    x2 = b[0] + b[3] + b[5] + b[7]  # F1 + F4 + F6 + F8
    return [x1, x2]


PRESETS = {
    "so3-e1e2": (Family.SO, 3),
    "su2-f3f1": (Family.SU, 2),
    "su3-gellmann-2gen": (Family.SU, 3),
}


def preset_system(name: str) -> ControlSystem:
    """Named example systems.

    ``so3-e1e2``: SO(3) driven by E1, E2.  ``su2-f3f1``: SU(2) with F3 as the
    pivot and F1.  ``su3-gellmann-2gen``: SU(3) with a regular diagonal pivot
    and F1 + F4 + F6 + F8.
    """
    if name not in PRESETS:
        raise LieError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    spec = GroupSpec(*PRESETS[name])
    basis = standard_basis(spec)
    b = basis.stack
    if name == "so3-e1e2":
        gens = [b[0], b[1]]
    elif name == "su2-f3f1":
        gens = [b[2], b[0]]
    else:
        gens = _su3_two_generators(basis)
    return ControlSystem(spec, basis, tuple(gens))
