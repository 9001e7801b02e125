"""Matrix Lie group and Lie algebra primitives.

Groups live in their defining d x d representation and all matrices are
stored as complex arrays, including SO(d).  Coordinates with respect to an
algebra basis are taken against the real inner product <A, B> = Re tr(A^* B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TOL_GROUP = 1e-9
TOL_ALG = 1e-9
TOL_RANK = 1e-8


class LieError(ValueError):
    """Raised on invalid group/algebra data or incompatible operands."""


class Family(str, Enum):
    SU = "SU"
    SO = "SO"
    U = "U"


@dataclass(frozen=True)
class GroupSpec:
    family: Family
    d: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.d) != self.d or self.d < 2:
            raise LieError(f"matrix dimension must be an integer >= 2, got {self.d}")

    @property
    def dim(self) -> int:
        d = self.d
        if self.family is Family.SU:
            return d * d - 1
        if self.family is Family.SO:
            return d * (d - 1) // 2
        return d * d

    def __str__(self):
        return f"{self.family.value}({self.d})"


def _frob(a) -> float:
    return float(np.linalg.norm(a))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A point of a compact matrix group.  Validated on construction."""

    spec: GroupSpec
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        d = self.spec.d
        if mat.shape != (d, d):
            raise LieError(f"expected a {d}x{d} matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise LieError("non-finite group element")
        dev = _frob(mat.conj().T @ mat - np.eye(d))
        if dev > TOL_GROUP:
            raise LieError(f"matrix is not unitary (deviation {dev:.3e})")
        if self.spec.family is not Family.U:
            det_dev = abs(np.linalg.det(mat) - 1.0)
            if det_dev > TOL_GROUP:
                raise LieError(f"determinant differs from 1 by {det_dev:.3e}")
        if self.spec.family is Family.SO and np.max(np.abs(mat.imag)) > TOL_ALG:
            raise LieError("SO(d) element has non-negligible imaginary part")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, spec: GroupSpec) -> "GroupElement":
        return cls(spec, np.eye(spec.d, dtype=complex))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _same_spec(self, other)
        return GroupElement(self.spec, self.mat @ other.mat)

    def inv(self) -> "GroupElement":
        return GroupElement(self.spec, self.mat.conj().T)

    def __repr__(self):
        return f"GroupElement({self.spec}, {np.array2string(self.mat, precision=4)})"


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """An element of the Lie algebra (skew-Hermitian, traceless for su)."""

    spec: GroupSpec
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        d = self.spec.d
        if mat.shape != (d, d):
            raise LieError(f"expected a {d}x{d} matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise LieError("non-finite algebra element")
        scale = max(1.0, _frob(mat))
        if _frob(mat + mat.conj().T) > TOL_ALG * scale:
            raise LieError("matrix is not skew-Hermitian")
        if self.spec.family is not Family.U and abs(np.trace(mat)) > TOL_ALG * scale:
            raise LieError("algebra element must be traceless")
        if self.spec.family is Family.SO and np.max(np.abs(mat.imag)) > TOL_ALG * scale:
            raise LieError("so(d) element has non-negligible imaginary part")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def zero(cls, spec: GroupSpec) -> "AlgebraElement":
        return cls(spec, np.zeros((spec.d, spec.d), dtype=complex))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self, other)
        return AlgebraElement(self.spec, self.mat + other.mat)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self, other)
        return AlgebraElement(self.spec, self.mat - other.mat)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.spec, -self.mat)

    def __mul__(self, c: float) -> "AlgebraElement":
        return AlgebraElement(self.spec, float(c) * self.mat)

    __rmul__ = __mul__

    def norm(self) -> float:
        return _frob(self.mat)

    def __repr__(self):
        return f"AlgebraElement({self.spec}, {np.array2string(self.mat, precision=4)})"


def _same_spec(a, b):
    if a.spec != b.spec:
        raise LieError(f"spec mismatch: {a.spec} vs {b.spec}")


@dataclass(frozen=True, eq=False)
class AlgebraBasis:
    """Ordered basis E_1..E_n of the Lie algebra with cached coordinate data.

    ``gram_ref`` is the Gram matrix of Re tr(A^* B) and ``killing`` the
    Killing form B(E_i, E_j) = tr(ad E_i ad E_j).
    """

    spec: GroupSpec
    elems: tuple
    gram_ref: np.ndarray = field(init=False, repr=False)
    killing: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        elems = tuple(
            e if isinstance(e, AlgebraElement) else AlgebraElement(self.spec, e) for e in self.elems
        )
        for e in elems:
            _same_spec(self, e)
        n = self.spec.dim
        if len(elems) != n:
            raise LieError(f"{self.spec} needs {n} basis elements, got {len(elems)}")
        stack = np.array([e.mat for e in elems])
        flat = np.concatenate([stack.reshape(n, -1).real, stack.reshape(n, -1).imag], axis=1)
        sv = np.linalg.svd(flat, compute_uv=False)
        if sv[-1] <= TOL_RANK * sv[0]:
            raise LieError("basis elements are linearly dependent")
        gram = np.einsum("ikl,jkl->ij", stack.conj(), stack).real
        gram = 0.5 * (gram + gram.T)
        try:
            np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as exc:
            raise LieError("singular reference Gram matrix (degenerate basis)") from exc
        stack.setflags(write=False)
        object.__setattr__(self, "elems", elems)
        object.__setattr__(self, "gram_ref", gram)
        object.__setattr__(self, "_stack", stack)
        # coords(A)_i = Re sum_kl conj(dual_i)_kl A_kl
        dual = np.einsum("ij,jkl->ikl", np.linalg.inv(gram), stack)
        object.__setattr__(self, "_dual_conj", dual.conj())
        ads = np.array([_ad_raw(self, e.mat) for e in elems])
        object.__setattr__(self, "_ads", ads)
        killing = np.einsum("iab,jba->ij", ads, ads)
        object.__setattr__(self, "killing", 0.5 * (killing + killing.T))

    @property
    def n(self) -> int:
        return len(self.elems)

    @property
    def stack(self) -> np.ndarray:
        """Basis matrices as an (n, d, d) array."""
        return self._stack

    @property
    def ad_stack(self) -> np.ndarray:
        """ad(E_i) matrices as an (n, n, n) array."""
        return self._ads

    def coords(self, mat) -> np.ndarray:
        """Real coordinates of an algebra matrix (or a stack of them)."""
        mat = np.asarray(mat)
        return np.einsum("ikl,...kl->...i", self._dual_conj, mat).real

    def element(self, coords) -> AlgebraElement:
        return AlgebraElement(self.spec, self.from_coords(coords))

    def from_coords(self, coords) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=float), self._stack, axes=(-1, 0))

    def __len__(self):
        return self.n


def _ad_raw(basis: AlgebraBasis, a: np.ndarray) -> np.ndarray:
    stack = basis.stack
    comm = a @ stack - stack @ a
    # column j holds the coordinates of [A, E_j]
    return basis.coords(comm).T


def _mat(x):
    return x.mat if isinstance(x, (GroupElement, AlgebraElement)) else np.asarray(x, dtype=complex)


# ---------------------------------------------------------------- operations


def bracket(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _same_spec(a, b)
    return AlgebraElement(a.spec, a.mat @ b.mat - b.mat @ a.mat)


def expm_raw(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor core.

    Accepts a single matrix or a stack (..., d, d).  The Taylor degree adapts
    to the scaled norm so that the truncation error stays below 1e-17
    relative; ``theta <= 0.5`` after scaling.
    """
    a = np.asarray(a)
    d = a.shape[-1]
    nrm = float(np.abs(a).sum(axis=-2).max()) if a.size else 0.0
    eye = np.eye(d, dtype=complex)
    if nrm == 0.0:
        return np.broadcast_to(eye, a.shape).copy()
    s = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    b = a / (2.0**s)
    theta = nrm / (2.0**s)
    q = 1
    term = theta
    while term > 1e-17 and q < 30:
        q += 1
        term *= theta / q
    # Horner: I + b(I + b/2(I + b/3(...)))
    out = eye + b / q
    for k in range(q - 1, 0, -1):
        out = eye + (b @ out) / k
    for _ in range(s):
        out = out @ out
    return out


def expm(a: AlgebraElement) -> GroupElement:
    return GroupElement(a.spec, expm_raw(a.mat))


def ad_matrix(a: AlgebraElement, basis: AlgebraBasis) -> np.ndarray:
    """Matrix of ad(A): column j is the coordinate vector of [A, E_j]."""
    _same_spec(a, basis)
    return _ad_raw(basis, a.mat)


def Ad_raw(x: np.ndarray, basis: AlgebraBasis) -> np.ndarray:
    stack = basis.stack
    conj = x @ stack @ x.conj().T
    return basis.coords(conj).T


def Ad_matrix(x: GroupElement, basis: AlgebraBasis) -> np.ndarray:
    """Matrix of Ad(x): column j is the coordinate vector of x E_j x^{-1}."""
    _same_spec(x, basis)
    return Ad_raw(x.mat, basis)


def killing_gram(basis: AlgebraBasis) -> np.ndarray:
    return basis.killing.copy()


def orthonormalize_killing(basis: AlgebraBasis) -> AlgebraBasis:
    """Gram-Schmidt against -B, returning Y_1..Y_n with -B(Y_i, Y_j) = delta_ij."""
    neg_b = -basis.killing
    evals = np.linalg.eigvalsh(neg_b)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals[0] <= basis.n * TOL_RANK * scale:
        raise LieError("Killing form degenerate: the algebra is not semisimple")
    n = basis.n
    coeffs = []  # rows: coefficient vectors of Y_i in the old basis
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for c in coeffs:
            v = v - (c @ neg_b @ v) * c
        for c in coeffs:  # second pass for stability
            v = v - (c @ neg_b @ v) * c
        v = v / math.sqrt(v @ neg_b @ v)
        coeffs.append(v)
    return AlgebraBasis(basis.spec, tuple(basis.from_coords(c) for c in coeffs))


def polar_project_raw(x: np.ndarray, family: Family) -> np.ndarray:
    """Polar factor of x (or of each matrix in a stack), with the determinant
    repaired for SO and SU.  No distance checks."""
    if family is Family.SO:
        u, _, vh = np.linalg.svd(np.asarray(x).real)
        flip = np.linalg.det(u @ vh) < 0
        if np.any(flip):
            u = np.array(u)
            u[..., -1] = np.where(flip[..., None], -u[..., -1], u[..., -1])
        return (u @ vh).astype(complex)
    u, _, vh = np.linalg.svd(x)
    out = u @ vh
    if family is Family.SU:
        det = np.linalg.det(out)
        out = out * np.exp(-1j * np.angle(det) / x.shape[-1])[..., None, None]
    return out


def project_to_group(x, spec: GroupSpec) -> GroupElement:
    """Nearest group element via the polar factor, with determinant repair."""
    x = np.asarray(x, dtype=complex)
    d = spec.d
    if x.shape != (d, d) or not np.all(np.isfinite(x)):
        raise LieError("cannot project: bad shape or non-finite entries")
    s = np.linalg.svd(x, compute_uv=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise LieError("cannot project a singular matrix")
    if spec.family is Family.SO:
        x = x.real.astype(complex)
    out = polar_project_raw(x, spec.family)
    if _frob(out - x) > 0.5:
        raise LieError("matrix is too far from the group manifold to project")
    return GroupElement(spec, out)


# ---------------------------------------------------------- standard bases


def _so_basis(d: int) -> list:
    if d == 3:
        e1 = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=complex)
        e2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=complex)
        e3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
        return [e1, e2, e3]
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = -1.0
            m[j, i] = 1.0
            out.append(m)
    return out


def gell_mann(d: int) -> list:
    """Generalized Gell-Mann matrices (Pauli matrices for d = 2)."""
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = -1j
            m[j, i] = 1j
            out.append(m)
    for k in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[:k, :k] = np.eye(k)
        m[k, k] = -k
        out.append(m * math.sqrt(2.0 / (k * (k + 1))))
    if d == 2:
        # Pauli order sigma_x, sigma_y, sigma_z
        return [out[0], out[1], out[2]]
    if d == 3:
        # conventional lambda_1..lambda_8 order
        l12, l12i, l13, l13i, l23, l23i, l3, l8 = out
        return [l12, l12i, l3, l13, l13i, l23, l23i, l8]
    return out


def standard_basis(spec: GroupSpec) -> AlgebraBasis:
    """so(3): E1, E2, E3 with [E1, E2] = E3.  su(d): -(i/2) * Gell-Mann.
    u(d): the su(d) basis followed by the central element iI."""
    if spec.family is Family.SO:
        mats = _so_basis(spec.d)
    else:
        mats = [-0.5j * g for g in gell_mann(spec.d)]
        if spec.family is Family.U:
            mats.append(1j * np.eye(spec.d, dtype=complex))
    return AlgebraBasis(spec, tuple(mats))


def random_algebra(spec_or_basis, rng: np.random.Generator, scale: float = 1.0) -> AlgebraElement:
    basis = spec_or_basis if isinstance(spec_or_basis, AlgebraBasis) else standard_basis(spec_or_basis)
    return basis.element(scale * rng.standard_normal(basis.n))


def random_group(spec_or_basis, rng: np.random.Generator, scale: float = 2.0) -> GroupElement:
    return expm(random_algebra(spec_or_basis, rng, scale))
