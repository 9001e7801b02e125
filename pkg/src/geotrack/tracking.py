"""Feedback synthesis: the function V = tr Ad, the coefficients a_k and the
auxiliary field W, plus recovery of the tracking trajectory.

Vector fields are handled in body frame: W(t, w) = w * xi(t, w) with
xi(t, w) = sum_k a_k(t, w) Y_k(t) and Y_k(t) = x_r(t) X_k x_r(t)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liecore import (
    AlgebraBasis,
    AlgebraElement,
    GroupElement,
    LieError,
    Ad_matrix,
    Ad_raw,
    ad_matrix,
    orthonormalize_killing,
)
from .reference import ReferencePlan, eval_controls, reference_raw
from .systems import ControlSystem, check_semisimple


def lyapunov_V(x: GroupElement, basis: AlgebraBasis) -> float:
    return float(np.trace(Ad_matrix(x, basis)))


def dV_directional(x: GroupElement, v_body: AlgebraElement, basis: AlgebraBasis) -> float:
    """dV_x applied to the tangent vector x * v_body."""
    return float(np.trace(Ad_matrix(x, basis) @ ad_matrix(v_body, basis)))


@dataclass(frozen=True, eq=False)
class FeedbackContext:
    sys: ControlSystem
    plan: ReferencePlan
    basis: AlgebraBasis = None
    _ad_gens: np.ndarray = field(init=False, repr=False)
    _gens: np.ndarray = field(init=False, repr=False)
    _coef_tensor: np.ndarray = field(init=False, repr=False)
    _trace_tensor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.plan.sys is not self.sys and self.plan.spec != self.sys.spec:
            raise LieError("plan and system use different groups")
        basis = self.basis
        if basis is None:
            basis = self.sys.basis
            if check_semisimple(basis)[0]:
                basis = orthonormalize_killing(basis)
            object.__setattr__(self, "basis", basis)
        gens = self.sys.generator_stack()
        object.__setattr__(self, "_gens", gens)
        ad_gens = np.array([ad_matrix(g, basis) for g in self.sys.generators])
        object.__setattr__(self, "_ad_gens", ad_gens)
        # Ad(z)_ij = Re sum_pqrs conj(D_i)_pq z_pr (E_j)_rs conj(z)_qs with D the
        # dual basis, so tr(Ad(z) M) is a fixed quadratic form in (z, conj z).
        dual_c, stack = basis._dual_conj, basis.stack
        coef = np.einsum("kji,ipq,jrs->kpqrs", ad_gens, dual_c, stack)
        trace = np.einsum("ipq,irs->pqrs", dual_c, stack)
        d2 = self.sys.spec.d ** 2
        object.__setattr__(self, "_coef_tensor", coef.reshape(self.m, d2 * d2))
        object.__setattr__(self, "_trace_tensor", trace.reshape(d2 * d2))

    @property
    def m(self) -> int:
        return self.sys.m

    @staticmethod
    def _outer(z: np.ndarray) -> np.ndarray:
        # entries z_pr conj(z)_qs ordered as (p, q, r, s), flattened
        d = z.shape[-1]
        return np.einsum("...pr,...qs->...pqrs", z, z.conj()).reshape(z.shape[:-2] + (d**4,))

    def coefficients_raw(self, xr: np.ndarray, w: np.ndarray) -> np.ndarray:
        """a_k from the reference point xr and state w (plain matrices).

        Uses ad(Ad(x_r) X_k) = Ad(x_r) ad(X_k) Ad(x_r)^{-1}, so that
        a_k = tr(Ad(x_r^{-1} w x_r) ad(X_k)), evaluated as a precomputed
        contraction.  ``w`` may be a stack (B, d, d); the result is then (B, m).
        """
        z = xr.conj().T @ w @ xr
        return (self._outer(z) @ self._coef_tensor.T).real

    def trace_Ad_raw(self, w: np.ndarray) -> np.ndarray:
        """tr Ad(w) for a matrix or a stack of matrices."""
        return (self._outer(w) @ self._trace_tensor).real

    def velocity_raw(self, xr: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Body velocity sum_k a_k x_r X_k x_r^{-1}; ``a`` may be (B, m)."""
        return xr @ np.tensordot(a, self._gens, axes=1) @ xr.conj().T


def reference_generators(ctx: FeedbackContext, t: float) -> np.ndarray:
    """Y_k(t) = x_r(t) X_k x_r(t)^{-1} as an (m, d, d) stack."""
    xr = reference_raw(ctx.plan, t)
    return xr @ ctx._gens @ xr.conj().T


def feedback_a(ctx: FeedbackContext, t: float, w: GroupElement) -> np.ndarray:
    return ctx.coefficients_raw(reference_raw(ctx.plan, t), w.mat)


def body_velocity_W(ctx: FeedbackContext, t: float, w: GroupElement) -> AlgebraElement:
    xr = reference_raw(ctx.plan, t)
    a = ctx.coefficients_raw(xr, w.mat)
    return AlgebraElement(ctx.sys.spec, ctx.velocity_raw(xr, a))


def recover_tracking(ctx: FeedbackContext, w_trace) -> list:
    """Map samples (t, w, a) of the auxiliary system to (t, x, u) with
    x = w x_r and u = a + u^r."""
    out = []
    for t, w, a in w_trace:
        wm = w.mat if isinstance(w, GroupElement) else np.asarray(w)
        x = GroupElement(ctx.sys.spec, wm @ reference_raw(ctx.plan, t))
        out.append((t, x, np.asarray(a, dtype=float) + eval_controls(ctx.plan, t)))
    return out
