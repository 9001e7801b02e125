"""Lie-group integration of w' = w xi(t, w) and the Lambda^n derivative stack."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Callable

import numpy as np

from .liecore import AlgebraElement, GroupElement, LieError, expm_raw, polar_project_raw
from .reference import ReferencePlan, eval_controls, reference_raw
from .tracking import FeedbackContext


class IntegrationError(RuntimeError):
    """Raised when the state leaves the group or becomes non-finite."""


class Method(str, Enum):
    LIE_EULER = "LieEuler"
    RKMK4 = "RKMK4"


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.RKMK4
    h: float = 1.0 / 2000
    t_end: float = 50.0
    project_every: int = 10

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"step size must be positive, got {self.h}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"horizon must be positive, got {self.t_end}")
        if int(self.project_every) != self.project_every or self.project_every < 1:
            raise ValueError("project_every must be a positive integer")

    @classmethod
    def for_period(cls, T: float, method=Method.RKMK4, periods: float = 50.0, steps_per_period: int = 2000,
                   project_every: int = 10) -> "IntegratorConfig":
        return cls(Method(method), T / steps_per_period, periods * T, project_every)

    def as_dict(self) -> dict:
        return {"method": self.method.value, "h": self.h, "t_end": self.t_end,
                "project_every": self.project_every}


@dataclass
class RunTrace:
    t: np.ndarray
    w: np.ndarray  # (N, d, d)
    a: np.ndarray  # (N, m)
    V: np.ndarray
    config: IntegratorConfig
    t0: float
    summary: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def samples(self):
        """Iterate (t, w, a) triples with raw matrices."""
        return zip(self.t, self.w, self.a)


def _dexpinv_body(u: np.ndarray, k: np.ndarray) -> np.ndarray:
    # inverse of the left-trivialized dexp, truncated after the ad^2 term
    c1 = u @ k - k @ u
    c2 = u @ c1 - c1 @ u
    return k + 0.5 * c1 + c2 / 12.0


def _check(mat: np.ndarray):
    if not np.all(np.isfinite(mat)):
        raise IntegrationError("non-finite value in the integration")


def step_raw(method: Method, t: float, w: np.ndarray, h: float,
             rhs: Callable[[float, np.ndarray], np.ndarray], k1: np.ndarray | None = None) -> np.ndarray:
    """One step on raw matrices; ``k1`` may carry an already computed rhs(t, w)."""
    if k1 is None:
        k1 = rhs(t, w)
    _check(k1)
    if method is Method.LIE_EULER:
        return w @ expm_raw(h * k1)
    u2 = 0.5 * h * k1
    k2 = _dexpinv_body(u2, rhs(t + 0.5 * h, w @ expm_raw(u2)))
    u3 = 0.5 * h * k2
    k3 = _dexpinv_body(u3, rhs(t + 0.5 * h, w @ expm_raw(u3)))
    u4 = h * k3
    k4 = _dexpinv_body(u4, rhs(t + h, w @ expm_raw(u4)))
    _check(k4)
    u = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return w @ expm_raw(u)


def step(method, t: float, w: GroupElement, h: float, rhs) -> GroupElement:
    """Advance w by one step of size h.

    ``rhs(t, w)`` receives a GroupElement and returns the body velocity as an
    AlgebraElement (or a plain matrix).
    """
    spec = w.spec

    def raw_rhs(s, wm):
        out = rhs(s, GroupElement(spec, wm))
        return out.mat if isinstance(out, AlgebraElement) else np.asarray(out, dtype=complex)

    out = step_raw(Method(method), t, w.mat, h, raw_rhs)
    _check(out)
    return GroupElement(spec, out)


class _ReferenceCache:
    """Memoizes x_r at the half-step grid t0 + k h/2 when h divides T."""

    def __init__(self, plan: ReferencePlan, t0: float, h: float):
        self.plan, self.t0, self.half = plan, t0, 0.5 * h
        ratio = plan.T / h
        self.period = 2 * int(round(ratio)) if abs(ratio - round(ratio)) < 1e-9 * max(1.0, ratio) else 0
        self.store = {}

    def __call__(self, t: float) -> np.ndarray:
        if self.period:
            k = (t - self.t0) / self.half
            kr = round(k)
            if abs(k - kr) < 1e-6:
                key = kr % self.period
                xr = self.store.get(key)
                if xr is None:
                    xr = reference_raw(self.plan, self.t0 + key * self.half)
                    self.store[key] = xr
                return xr
        return reference_raw(self.plan, t)


def integrate_many(ctx: FeedbackContext, w0s, t0: float, cfg: IntegratorConfig) -> list:
    """March several initial states through the same closed loop at once.

    All states share the time grid, so the reference and the matrix algebra
    are evaluated on stacks; each run gets its own RunTrace.
    """
    w0s = list(w0s)
    if not w0s:
        return []
    spec = ctx.sys.spec
    for w0 in w0s:
        if w0.spec != spec:
            raise LieError("initial state and system use different groups")
    h = cfg.h
    n_steps = int(round(cfg.t_end / h))
    ref = _ReferenceCache(ctx.plan, t0, h)
    d, B = spec.d, len(w0s)
    eye = np.eye(d)

    def rhs_and_a(t, wm):
        xr = ref(t)
        a = ctx.coefficients_raw(xr, wm)
        return ctx.velocity_raw(xr, a), a

    def rhs(t, wm):
        return rhs_and_a(t, wm)[0]

    ts = t0 + h * np.arange(n_steps + 1)
    ws = np.empty((n_steps + 1, B, d, d), dtype=complex)
    a_s = np.empty((n_steps + 1, B, ctx.m))
    w = np.array([w0.mat for w0 in w0s])
    for i in range(n_steps + 1):
        t = ts[i]
        k1, a = rhs_and_a(t, w)
        ws[i] = w
        a_s[i] = a
        if i == n_steps:
            break
        w = step_raw(cfg.method, t, w, h, rhs, k1=k1)
        if (i + 1) % cfg.project_every == 0:
            _check(w)
            drift = np.linalg.norm(np.swapaxes(w.conj(), -1, -2) @ w - eye, axis=(-2, -1)).max()
            if drift > 0.5:
                raise IntegrationError(f"state left the group (drift {drift:.3e}) at t = {t + h:.6g}")
            w = polar_project_raw(w, spec.family)
    V = ctx.trace_Ad_raw(ws)
    traces = []
    for b in range(B):
        trace = RunTrace(ts, np.ascontiguousarray(ws[:, b]), np.ascontiguousarray(a_s[:, b]),
                         np.ascontiguousarray(V[:, b]), cfg, float(t0))
        trace.summary = summarize(trace, ctx.plan)
        traces.append(trace)
    return traces


def integrate(ctx: FeedbackContext, w0: GroupElement, t0: float, cfg: IntegratorConfig) -> RunTrace:
    """Fixed-step march of the closed-loop auxiliary field from (t0, w0)."""
    return integrate_many(ctx, [w0], t0, cfg)[0]


def summarize(trace: RunTrace, plan: ReferencePlan) -> dict:
    d = trace.w.shape[-1]
    dv = np.diff(trace.V)
    tail = trace.t >= trace.t[-1] - plan.T
    return {
        "final_error": float(np.linalg.norm(trace.w[-1] - np.eye(d))),
        "tail_sup_a": float(np.max(np.abs(trace.a[tail]))) if trace.a.size else 0.0,
        "min_step_dV": float(dv.min()) if dv.size else 0.0,
        "samples": len(trace.t),
    }


# -------------------------------------------------------------- Lambda stack

_FD_H = 1e-4
# 5-point central stencils for derivative orders 1..4 (offsets -2..2)
_STENCILS = {
    1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
    3: np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0,
    4: np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
}


def _reference_field(plan: ReferencePlan, t: float) -> np.ndarray:
    """X_r(t) = sum_j u_j^r(t) X_j as a matrix."""
    return np.tensordot(eval_controls(plan, t), plan.sys.generator_stack(), axes=1)


def control_derivatives(plan: ReferencePlan, t: float, order: int, h: float = _FD_H) -> list:
    """[X_r, X_r', ..., X_r^(order)] at t by 5-point central differences."""
    offsets = np.arange(-2, 3) * h
    samples = np.array([_reference_field(plan, t + o) for o in offsets])
    out = [samples[2]]
    for q in range(1, order + 1):
        out.append(np.tensordot(_STENCILS[q], samples, axes=1) / h**q)
    return out


def _straddles_boundary(plan: ReferencePlan, t: float, radius: float) -> bool:
    if plan.is_constant:
        return False
    step_ = plan.T / plan.m
    tau = float(np.mod(t, plan.T))
    nearest = round(tau / step_) * step_
    return abs(tau - nearest) <= radius


def lambda_stack(plan: ReferencePlan, X: AlgebraElement, t: float, N: int) -> list:
    """Lambda^0..Lambda^N with Lambda^0 = X and
    Lambda^{n+1} = (Lambda^n)' + [X_r, Lambda^n]."""
    if not 0 <= N <= 4:
        raise ValueError("N must lie in 0..4")
    radius = 2 * _FD_H
    if _straddles_boundary(plan, t, radius):
        warnings.warn(f"t = {t} is within the stencil radius of a window boundary; shifting", stacklevel=2)
        t = t + 2 * radius
    xr_derivs = control_derivatives(plan, t, max(N - 1, 0)) if N > 0 else []
    # derivs[q] holds the q-th time derivative of the current Lambda^n
    derivs = [np.array(X.mat)] + [np.zeros_like(X.mat) for _ in range(N)]
    out = [AlgebraElement(X.spec, derivs[0])]
    for n in range(N):
        nxt = []
        for q in range(N - n):
            acc = np.array(derivs[q + 1])
            for i in range(q + 1):
                a, b = xr_derivs[i], derivs[q - i]
                acc = acc + comb(q, i) * (a @ b - b @ a)
            nxt.append(acc)
        derivs = nxt
        out.append(AlgebraElement(X.spec, 0.5 * (derivs[0] - derivs[0].conj().T)))
    return out
