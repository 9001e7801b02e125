"""Numerical monitors for the closed loop: error decay, V monotonicity, decay
of the coefficients a_k, critical-point probes, the Hessian of V at central
points and a residual certificate for the recovered trajectory."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liecore import (
    AlgebraBasis,
    AlgebraElement,
    GroupElement,
    LieError,
    Ad_matrix,
    _ad_raw,
    expm_raw,
)
from .reference import ReferencePlan, eval_controls, reference_raw
from .systems import ControlSystem, check_semisimple

CENTER_TOL = 1e-8
HESSIAN_H = 1e-3
# 5-point first-derivative stencil, offsets -2..2
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class Thresholds:
    err_final: float = 1e-3
    tail_a: float = 1e-4
    dV_min: float = -1e-8
    probe: float = 1e-3
    residual: float = 1e-5

    def __post_init__(self):
        for name in ("err_final", "tail_a", "probe", "residual"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"threshold {name} must be positive and finite")
        if not np.isfinite(self.dV_min):
            raise ValueError("threshold dV_min must be finite")

    def as_dict(self) -> dict:
        return {"err_final": self.err_final, "tail_a": self.tail_a, "dV_min": self.dV_min,
                "probe": self.probe, "residual": self.residual}


@dataclass(frozen=True)
class MonitorReport:
    min_step_dV: float
    tail_sup_a: float
    final_error: float
    critical_probe_end: float
    residual_max: float
    center_end: bool
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def verdicts(self) -> dict:
        th = self.thresholds
        return {
            "dV_monotone": self.min_step_dV >= th.dV_min,
            "a_decay": self.tail_sup_a <= th.tail_a,
            "final_error": self.final_error <= th.err_final,
            "critical_probe": self.critical_probe_end <= th.probe,
            "residual": self.residual_max <= th.residual,
            "center": self.center_end,
        }

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def as_dict(self) -> dict:
        return {
            "min_step_dV": self.min_step_dV,
            "tail_sup_a": self.tail_sup_a,
            "final_error": self.final_error,
            "critical_probe_end": self.critical_probe_end,
            "residual_max": self.residual_max,
            "center_end": self.center_end,
            "thresholds": self.thresholds.as_dict(),
            "verdicts": self.verdicts,
            "ok": self.ok,
        }


def tracking_error(x: GroupElement, xr: GroupElement) -> float:
    """Frobenius distance of x xr^{-1} from the identity."""
    if x.spec != xr.spec:
        raise LieError("tracking_error: group mismatch")
    return _error_raw(x.mat, xr.mat)


def _error_raw(x: np.ndarray, xr: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    diff = x @ np.swapaxes(xr.conj(), -1, -2) - np.eye(d)
    return np.linalg.norm(diff, axis=(-2, -1))


def probe(x: GroupElement, X: AlgebraElement, basis: AlgebraBasis) -> float:
    """tr(Ad(x) ad(X)), the derivative of V at x in the body direction X."""
    return float(np.trace(Ad_matrix(x, basis) @ _ad_raw(basis, X.mat)))


def critical_probe(x: GroupElement, basis: AlgebraBasis) -> float:
    """max_i |tr(Ad(x) ad(E_i))|; zero exactly at critical points of V."""
    if x.spec != basis.spec:
        raise LieError("critical_probe: group mismatch")
    ad_x = Ad_matrix(x, basis)
    vals = np.einsum("ij,kji->k", ad_x, basis.ad_stack)
    return float(np.max(np.abs(vals)))


def lyapunov_value(x: GroupElement, basis: AlgebraBasis) -> float:
    return float(np.trace(Ad_matrix(x, basis)))


def center_check(x: GroupElement, basis: AlgebraBasis) -> bool:
    return abs(lyapunov_value(x, basis) - basis.n) <= CENTER_TOL


def _is_killing_orthonormal(basis: AlgebraBasis, tol: float = 1e-8) -> bool:
    return bool(np.max(np.abs(-basis.killing - np.eye(basis.n))) <= tol)


def second_kind_chart(x: GroupElement, basis: AlgebraBasis, s) -> np.ndarray:
    """x exp(s_1 Y_1) ... exp(s_n Y_n) as a raw matrix."""
    out = np.array(x.mat)
    for si, y in zip(np.asarray(s, dtype=float), basis.stack):
        if si != 0.0:
            out = out @ expm_raw(si * y)
    return out


def hessian_at_center(x: GroupElement, basis: AlgebraBasis, h: float = HESSIAN_H) -> np.ndarray:
    """Central-difference Hessian of V in second-kind coordinates around x."""
    if not check_semisimple(basis)[0]:
        raise LieError("Hessian check needs a semisimple algebra")
    if not _is_killing_orthonormal(basis):
        raise LieError("basis is not orthonormal for -B")
    if not center_check(x, basis) or critical_probe(x, basis) > 1e-8:
        raise LieError("point is not central")
    n = basis.n

    def V(s):
        g = GroupElement(basis.spec, second_kind_chart(x, basis, s))
        return lyapunov_value(g, basis)

    v0 = V(np.zeros(n))
    H = np.empty((n, n))
    eye = np.eye(n)
    for i in range(n):
        ei = h * eye[i]
        H[i, i] = (V(ei) - 2.0 * v0 + V(-ei)) / h**2
        for j in range(i):
            ej = h * eye[j]
            val = (V(ei + ej) - V(ei - ej) - V(-ei + ej) + V(-ei - ej)) / (4.0 * h**2)
            H[i, j] = H[j, i] = val
    return H


# ---------------------------------------------------------------- residuals


def _as_arrays(tracked):
    if isinstance(tracked, tuple) and len(tracked) == 3 and isinstance(tracked[0], np.ndarray):
        t, x, u = tracked
        return np.asarray(t, dtype=float), np.asarray(x), np.asarray(u, dtype=float)
    t = np.array([s[0] for s in tracked], dtype=float)
    x = np.array([s[1].mat if isinstance(s[1], GroupElement) else s[1] for s in tracked])
    u = np.array([s[2] for s in tracked], dtype=float)
    return t, x, u


def residual_original_system(tracked, sys: ControlSystem) -> float:
    """max over interior samples of |x'_fd - x sum_k u_k X_k|_F.

    ``tracked`` is either a list of (t, x, u) triples or a tuple of arrays
    (t (N,), x (N, d, d), u (N, m)) sampled on a uniform grid.
    """
    t, x, u = _as_arrays(tracked)
    if len(t) < 5:
        raise ValueError("need at least 5 samples")
    dt = np.diff(t)
    h = float(dt.mean())
    if not h > 0 or np.max(np.abs(dt - h)) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("residual needs a uniform, increasing time grid")
    n = len(t)
    deriv = sum(_D1[q] * x[q : n - 4 + q] for q in range(5)) / h
    gens = sys.generator_stack()
    field_ = x[2 : n - 2] @ np.tensordot(u[2 : n - 2], gens, axes=1)
    return float(np.max(np.linalg.norm(deriv - field_, axis=(-2, -1))))


def reference_samples(plan: ReferencePlan, t: np.ndarray):
    """x_r and u^r along a time grid, reusing values at repeated phases."""
    t = np.asarray(t, dtype=float)
    phases = np.round(np.mod(t, plan.T), 12)
    keys, inverse = np.unique(phases, return_inverse=True)
    # evaluate at the original times that realize each key (keeps exactness)
    first = np.zeros(len(keys), dtype=int)
    first[inverse[::-1]] = np.arange(len(t))[::-1]
    xr = np.array([reference_raw(plan, t[i]) for i in first])[inverse]
    ur = np.array([eval_controls(plan, t[i]) for i in first])[inverse]
    return xr, ur


def recover_arrays(plan: ReferencePlan, t, w, a):
    """Array form of the change of variables: x = w x_r, u = a + u^r."""
    xr, ur = reference_samples(plan, t)
    return np.asarray(t), np.asarray(w) @ xr, np.asarray(a) + ur, xr


def monitor_run(trace, plan: ReferencePlan, basis: AlgebraBasis | None = None,
                thresholds: Thresholds | None = None) -> MonitorReport:
    """Monitor a RunTrace: V monotonicity, a_k decay, final error, terminal
    critical probe, center check and the residual of the recovered (x, u)."""
    if len(trace.t) < 2 or trace.t[-1] - trace.t[0] < plan.T - 1e-12:
        raise ValueError("trace is shorter than one period")
    basis = basis if basis is not None else plan.sys.basis
    thresholds = thresholds or Thresholds()
    dv = np.diff(trace.V)
    tail = trace.t >= trace.t[-1] - plan.T
    t, x, u, xr = recover_arrays(plan, trace.t, trace.w, trace.a)
    final_error = float(_error_raw(x[-1], xr[-1]))
    w_end = GroupElement(plan.spec, trace.w[-1])
    return MonitorReport(
        min_step_dV=float(dv.min()),
        tail_sup_a=float(np.max(np.abs(trace.a[tail]))) if trace.a.size else 0.0,
        final_error=final_error,
        critical_probe_end=critical_probe(w_end, basis),
        residual_max=residual_original_system((t, x, u), plan.sys),
        center_end=center_check(w_end, basis),
        thresholds=thresholds,
    )
