"""Invariant suite behind ``geotrack verify``.

Each check returns a Check record: the worst observed value, the tolerance
it is compared against and the verdict.  Random inputs come from one seeded
generator so the report is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm as dense_expm

from .analysis import center_check, critical_probe, hessian_at_center, probe
from .integrate import Method, lambda_stack, step_raw
from .liecore import (
    Ad_matrix,
    AlgebraElement,
    GroupElement,
    ad_matrix,
    expm,
    expm_raw,
    orthonormalize_killing,
    random_algebra,
    random_group,
)
from .reference import (
    ReferencePlan,
    check_regular_rank,
    disjoint_support,
    eval_controls,
    eval_reference,
    eval_xi,
    reference_raw,
    reference_residual,
)
from .systems import ControlSystem, check_semisimple
from .tracking import dV_directional, lyapunov_V


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        out = {"name": self.name, "value": self.value, "tol": self.tol, "passed": self.passed}
        if self.note:
            out["note"] = self.note
        return out


def _le(name, value, tol, note="") -> Check:
    value = float(value)
    return Check(name, value, tol, bool(np.isfinite(value) and value <= tol), note)


def adjoint_checks(sys: ControlSystem, rng, samples: int) -> list:
    basis = sys.basis
    worst = dict(exp=0.0, hom=0.0, equiv=0.0, trace=0.0)
    for _ in range(samples):
        A = random_algebra(sys.spec, rng)
        x, y = random_group(sys.spec, rng), random_group(sys.spec, rng)
        X = random_algebra(sys.spec, rng)
        worst["exp"] = max(worst["exp"], np.linalg.norm(
            Ad_matrix(expm(A), basis) - dense_expm(ad_matrix(A, basis))))
        worst["hom"] = max(worst["hom"], np.linalg.norm(
            Ad_matrix(x @ y, basis) - Ad_matrix(x, basis) @ Ad_matrix(y, basis)))
        Adx = Ad_matrix(x, basis)
        conj = AlgebraElement(sys.spec, x.mat @ X.mat @ x.mat.conj().T)
        worst["equiv"] = max(worst["equiv"], np.linalg.norm(
            ad_matrix(conj, basis) - Adx @ ad_matrix(X, basis) @ np.linalg.inv(Adx)))
        worst["trace"] = max(worst["trace"], abs(np.trace(ad_matrix(A, basis))))
    return [
        _le("Ad(exp A) = exp(ad A)", worst["exp"], 1e-10),
        _le("Ad(xy) = Ad(x) Ad(y)", worst["hom"], 1e-10),
        _le("ad(Ad(x) X) = Ad(x) ad(X) Ad(x)^-1", worst["equiv"], 1e-10),
        _le("tr ad(X) = 0", worst["trace"], 1e-10),
    ]


def dV_check(sys: ControlSystem, rng, samples: int, h: float = 1e-5) -> Check:
    basis = sys.basis
    worst = 0.0
    for _ in range(samples):
        x = random_group(sys.spec, rng)
        v = random_algebra(sys.spec, rng)
        exact = dV_directional(x, v, basis)
        vp = lyapunov_V(GroupElement(sys.spec, x.mat @ expm_raw(h * v.mat)), basis)
        vm = lyapunov_V(GroupElement(sys.spec, x.mat @ expm_raw(-h * v.mat)), basis)
        fd = (vp - vm) / (2.0 * h)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    return _le("dV vs finite differences (relative)", worst, 1e-6)


def reference_checks(plan: ReferencePlan) -> list:
    from scipy import integrate

    out = []
    worst_int = 0.0
    for j, b in enumerate(plan.bumps):
        lo, hi = b.window
        val, _ = integrate.quad(lambda t, j=j: eval_controls(plan, t)[j], lo, hi, limit=400,
                                points=[b.unit_support[1], b.boost_interval[1]])
        worst_int = max(worst_int, abs(val), abs(eval_xi(plan, j, hi - 1e-12)))
    out.append(_le("zero integral per channel", worst_int, 1e-10))
    ts = np.linspace(0.0, plan.T, 97, endpoint=False)
    per = max(np.linalg.norm(reference_raw(plan, t + plan.T) - reference_raw(plan, t)) for t in ts)
    out.append(_le("x_r periodicity", per, 1e-13))
    out.append(_le("x_r(0) = x_infty", np.linalg.norm(eval_reference(plan, 0.0).mat - plan.x_infty.mat), 0.0))
    out.append(_le("reference solves the system", reference_residual(plan), 1e-6,
                   note="5-point central difference, h = 1e-5, at T/2000 grid points"))
    ok, rank = check_regular_rank(plan)
    out.append(Check("regular reference (rank)", float(rank), float(plan.spec.dim), ok))
    out.append(Check("disjoint control supports", 0.0, 0.0, disjoint_support(plan)))
    return out


def hessian_checks(sys: ControlSystem) -> list:
    if not check_semisimple(sys)[0]:
        return [Check("Hessian at e", float("nan"), 1e-4, True, note="skipped: algebra not semisimple")]
    basis = orthonormalize_killing(sys.basis)
    out = []
    centers = [("e", np.eye(sys.spec.d, dtype=complex))]
    if sys.spec.d % 2 == 0 and sys.spec.family.value == "SU":
        centers.append(("-I", -np.eye(sys.spec.d, dtype=complex)))
    for label, mat in centers:
        x = GroupElement(sys.spec, mat)
        H = hessian_at_center(x, basis)
        out.append(_le(f"Hessian at {label} = -I", np.max(np.abs(H + np.eye(basis.n))), 1e-4))
    return out


def _plateau_time(plan: ReferencePlan, j: int, frac: float) -> float:
    a, b = plan.bumps[j].plateau
    return a + frac * (b - a)


def lambda_checks(plan: ReferencePlan, rng, samples: int, h: float = 1e-4) -> list:
    sys = plan.sys
    worst_fd = 0.0
    for _ in range(samples):
        j = int(rng.integers(plan.m))
        a, b = plan.bumps[j].window
        t = a + (b - a) * (0.05 + 0.9 * rng.random())
        X = random_algebra(sys.spec, rng)
        lam = lambda_stack(plan, X, t, 2)
        xs = {o: reference_raw(plan, t + o * h) for o in (-2, -1, 0, 1, 2)}
        vals = {o: xs[o] @ X.mat @ xs[o].conj().T for o in xs}
        d1 = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * h)
        d2 = (-vals[-2] + 16 * vals[-1] - 30 * vals[0] + 16 * vals[1] - vals[2]) / (12 * h * h)
        xr = xs[0]
        for d, L in ((d1, lam[1]), (d2, lam[2])):
            worst_fd = max(worst_fd, np.linalg.norm(d - xr @ L.mat @ xr.conj().T))
    worst_plateau = 0.0
    gens = sys.generators
    for j in range(plan.m):
        t = _plateau_time(plan, j, 0.5)
        for X in gens:
            lam = lambda_stack(plan, X, t, 3)
            ref = X.mat
            for n, L in enumerate(lam):
                worst_plateau = max(worst_plateau, np.linalg.norm(L.mat - ref))
                ref = gens[j].mat @ ref - ref @ gens[j].mat
    return [
        _le("Lambda^n vs finite differences of Ad(x_r) X", worst_fd, 1e-5),
        _le("Lambda^n = ad(X_j)^n X on plateaus", worst_plateau, 1e-6),
    ]


def symmetry_checks(sys: ControlSystem, rng, samples: int) -> list:
    basis = sys.basis
    worst_inv = 0.0
    worst_conj = 0.0
    for _ in range(samples):
        x, y = random_group(sys.spec, rng), random_group(sys.spec, rng)
        X = random_algebra(sys.spec, rng)
        worst_inv = max(worst_inv, abs(probe(x.inv(), X, basis) + probe(x, X, basis)))
        Xr = AlgebraElement(sys.spec, y.mat.conj().T @ X.mat @ y.mat)
        worst_conj = max(worst_conj, abs(probe(y @ x @ y.inv(), X, basis) - probe(x, Xr, basis)))
    return [
        _le("probe(x^-1, X) = -probe(x, X)", worst_inv, 1e-10),
        _le("probe(y x y^-1, X) = probe(x, Ad(y)^-1 X)", worst_conj, 1e-10),
    ]


def center_checks(sys: ControlSystem) -> list:
    e = GroupElement.identity(sys.spec)
    return [
        Check("e is central (V = dim g)", lyapunov_V(e, sys.basis), float(sys.n), center_check(e, sys.basis)),
        _le("critical probe at e", critical_probe(e, sys.basis), 1e-12),
    ]


def frozen_step_check(sys: ControlSystem, rng) -> Check:
    xi = random_algebra(sys.spec, rng).mat
    w = random_group(sys.spec, rng).mat
    h = 0.05
    out = step_raw(Method.RKMK4, 0.0, w, h, lambda t, wm: xi)
    return _le("frozen-coefficient RKMK4 step = exact flow", np.linalg.norm(out - w @ expm_raw(h * xi)), 1e-13)


def run_suite(sys: ControlSystem, plan: ReferencePlan, seed: int = 0, samples: int = 20) -> list:
    rng = np.random.default_rng(seed)
    checks = []
    checks += adjoint_checks(sys, rng, samples)
    checks.append(dV_check(sys, rng, samples))
    checks += center_checks(sys)
    checks += symmetry_checks(sys, rng, samples)
    checks += hessian_checks(sys)
    checks += reference_checks(plan)
    checks += lambda_checks(plan, rng, samples)
    checks.append(frozen_step_check(sys, rng))
    return checks
