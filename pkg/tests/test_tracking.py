import math

import numpy as np
import pytest

from geotrack.liecore import AlgebraElement, GroupElement, expm, expm_raw, random_algebra, random_group, standard_basis
from geotrack.reference import build_reference_plan, eval_controls, reference_raw
from geotrack.systems import ControlSystem
from geotrack.tracking import (
    FeedbackContext,
    body_velocity_W,
    dV_directional,
    feedback_a,
    lyapunov_V,
    recover_tracking,
    reference_generators,
)

from conftest import SO3, SU2


def brute_V(x, basis):
    """tr Ad(x) by conjugating each basis element and reading its coordinate."""
    total = 0.0
    for j, e in enumerate(basis.stack):
        total += basis.coords(x @ e @ x.conj().T)[j]
    return total


class TestV:
    def test_identity(self, bases):
        for spec, basis in bases.items():
            assert lyapunov_V(GroupElement.identity(spec), basis) == pytest.approx(spec.dim, abs=1e-14)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.7, math.pi, 4.0])
    def test_so3_rotation(self, bases, rng, theta):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        x = expm(bases[SO3].element(theta * axis))
        assert lyapunov_V(x, bases[SO3]) == pytest.approx(1 + 2 * math.cos(theta), abs=1e-12)
        assert brute_V(x.mat, bases[SO3]) == pytest.approx(1 + 2 * math.cos(theta), abs=1e-12)

    def test_su2_minus_identity(self, bases):
        x = GroupElement(SU2, -np.eye(2))
        assert lyapunov_V(x, bases[SU2]) == pytest.approx(3.0, abs=1e-14)

    def test_bounded_by_dimension(self, bases, rng):
        for spec, basis in bases.items():
            for _ in range(20):
                assert lyapunov_V(random_group(spec, rng), basis) <= spec.dim + 1e-12


class TestDV:
    def test_zero_at_identity(self, bases, rng):
        for spec, basis in bases.items():
            v = random_algebra(spec, rng)
            assert abs(dV_directional(GroupElement.identity(spec), v, basis)) <= 1e-13

    def test_zero_at_minus_identity(self, bases, rng):
        v = random_algebra(SU2, rng)
        assert abs(dV_directional(GroupElement(SU2, -np.eye(2)), v, bases[SU2])) <= 1e-13

    def test_finite_difference_oracle(self, bases, rng):
        h = 1e-5
        for spec, basis in bases.items():
            for _ in range(10):
                x, v = random_group(spec, rng), random_algebra(spec, rng)
                fd = (brute_V(x.mat @ expm_raw(h * v.mat), basis) - brute_V(x.mat @ expm_raw(-h * v.mat), basis)) / (2 * h)
                exact = dV_directional(x, v, basis)
                assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


class TestFeedback:
    def test_zero_at_identity(self, contexts):
        ctx = contexts["su3-gellmann-2gen"]
        for t in np.linspace(0, 1, 11):
            assert np.max(np.abs(feedback_a(ctx, t, GroupElement.identity(ctx.sys.spec)))) <= 1e-13

    def test_zero_at_center(self, contexts):
        ctx = contexts["su2-f3f1"]
        for t in np.linspace(0, 1, 11):
            assert np.max(np.abs(feedback_a(ctx, t, GroupElement(SU2, -np.eye(2))))) <= 1e-13

    def test_matches_directional_derivative(self, contexts, rng):
        for ctx in contexts.values():
            for _ in range(10):
                t = rng.uniform(0, 1)
                w = random_group(ctx.sys.spec, rng)
                a = feedback_a(ctx, t, w)
                Y = reference_generators(ctx, t)
                direct = [dV_directional(w, AlgebraElement(ctx.sys.spec, y), ctx.basis) for y in Y]
                assert np.max(np.abs(a - direct)) <= 1e-12

    def test_periodic_in_time(self, contexts, rng):
        ctx = contexts["so3-e1e2"]
        for _ in range(20):
            t, w = rng.uniform(0, 1), random_group(SO3, rng)
            assert np.max(np.abs(feedback_a(ctx, t + 1.0, w) - feedback_a(ctx, t, w))) <= 1e-12

    def test_basis_independent(self, systems, plans, rng):
        sys, plan = systems["su3-gellmann-2gen"], plans["su3-gellmann-2gen"]
        ctx_ortho = FeedbackContext(sys, plan)
        ctx_std = FeedbackContext(sys, plan, basis=sys.basis)
        w = random_group(sys.spec, rng)
        assert np.allclose(feedback_a(ctx_ortho, 0.3, w), feedback_a(ctx_std, 0.3, w), atol=1e-12)

    def test_batched_coefficients(self, contexts, rng):
        ctx = contexts["so3-e1e2"]
        xr = reference_raw(ctx.plan, 0.37)
        ws = np.array([random_group(SO3, rng).mat for _ in range(4)])
        batch = ctx.coefficients_raw(xr, ws)
        for w, a in zip(ws, batch):
            assert np.allclose(a, ctx.coefficients_raw(xr, w), atol=1e-15)


class TestVelocity:
    def test_zero_at_identity(self, contexts):
        ctx = contexts["so3-e1e2"]
        xi = body_velocity_W(ctx, 0.4, GroupElement.identity(SO3))
        assert np.linalg.norm(xi.mat) <= 1e-13

    def test_dV_along_W_is_sum_of_squares(self, contexts, rng):
        for ctx in contexts.values():
            for _ in range(5):
                t, w = rng.uniform(0, 1), random_group(ctx.sys.spec, rng)
                a = feedback_a(ctx, t, w)
                xi = body_velocity_W(ctx, t, w)
                assert dV_directional(w, xi, ctx.basis) == pytest.approx(float(a @ a), rel=1e-10, abs=1e-13)

    def test_single_channel(self, rng):
        b = standard_basis(SU2)
        sys = ControlSystem(SU2, b, (b.stack[1],))
        plan = build_reference_plan(sys, GroupElement.identity(SU2), 1.0)
        ctx = FeedbackContext(sys, plan)
        w = random_group(SU2, rng)
        xi = body_velocity_W(ctx, 0.2, w).mat
        y1 = reference_generators(ctx, 0.2)[0]
        a = feedback_a(ctx, 0.2, w)
        assert np.allclose(xi, a[0] * y1)


class TestRecovery:
    def test_on_reference(self, contexts):
        ctx = contexts["so3-e1e2"]
        e = GroupElement.identity(SO3)
        samples = [(t, e, np.zeros(2)) for t in np.linspace(0, 1, 9)]
        for (t, x, u) in recover_tracking(ctx, samples):
            assert np.allclose(x.mat, reference_raw(ctx.plan, t))
            assert np.array_equal(u, eval_controls(ctx.plan, t))

    def test_initial_condition(self, systems, rng):
        sys = systems["su2-f3f1"]
        x_inf = random_group(SU2, rng)
        plan = build_reference_plan(sys, x_inf, 1.0)
        ctx = FeedbackContext(sys, plan)
        x0 = random_group(SU2, rng)
        w0 = GroupElement(SU2, x0.mat @ x_inf.mat.conj().T)
        (_, x, _), = recover_tracking(ctx, [(0.0, w0, np.zeros(2))])
        assert np.allclose(x.mat, x0.mat, atol=1e-14)

    def test_error_is_w(self, contexts, rng):
        ctx = contexts["su3-gellmann-2gen"]
        for t in rng.uniform(0, 3, 5):
            w = random_group(ctx.sys.spec, rng)
            (_, x, _), = recover_tracking(ctx, [(t, w, np.zeros(2))])
            xr = reference_raw(ctx.plan, t)
            assert np.allclose(x.mat @ xr.conj().T, w.mat, atol=1e-13)
