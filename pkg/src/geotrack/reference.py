"""Regular T-periodic reference trajectories through an arbitrary point.

Each channel j owns the window J_j = ((j-1)T/m, jT/m) of every period, split
into thirds.  Its control is a compactly supported smooth function that
equals 1 on a plateau in the first third, carries a positive boost hat of
amplitude ``boost`` in the middle third and a negative hat in the last third
scaled so that the control integrates to zero over the window.  The reference
is x_r(t) = x_inf * exp(xi_j(t) X_j) while channel j is active and x_inf
otherwise, with xi_j the running integral of channel j's control.

The boost makes the reference rotate by an O(1) angle during each window,
which is what drives the slow error modes of the closed loop to zero at a
useful rate; the unit plateau alone moves the reference by at most T/(6m).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .liecore import TOL_RANK, GroupElement, LieError, expm_raw
from .systems import ControlSystem, numerical_rank

N_XI_NODES = 512
DEFAULT_BOOST = 10.0
PLATEAU_FRACTION = 0.2  # of the unit bump's support
EDGE_MARGIN = 0.05  # of a third, kept free at both ends of the window
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _exp_neg_inv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(tau):
    """C-infinity step: 0 for tau <= 0, 1 for tau >= 1, S(tau) + S(1 - tau) = 1."""
    f0 = _exp_neg_inv(tau)
    f1 = _exp_neg_inv(1.0 - np.asarray(tau, dtype=float))
    return f0 / (f0 + f1)


def plateau_bump(t, lo: float, hi: float, ramp: float):
    """Smooth bump supported on [lo, hi], equal to 1 on [lo + ramp, hi - ramp].

    With ramp = (hi - lo)/2 it degenerates to a hat whose peak value is 1.
    Its integral is (hi - lo) - ramp.
    """
    t = np.asarray(t, dtype=float)
    return smooth_step((t - lo) / ramp) * smooth_step((hi - t) / ramp)


@dataclass(frozen=True)
class BumpDescriptor:
    """Control waveform of one channel within its window."""

    channel: int  # 1-based
    window: tuple  # open interval J_j^0
    plateau: tuple  # chi == 1 here
    ramp: float  # ramp width of the unit bump
    boost_interval: tuple
    boost: float
    lobe: tuple  # support of the negative hat
    lobe_scale: float

    @property
    def unit_support(self) -> tuple:
        return (self.plateau[0] - self.ramp, self.plateau[1] + self.ramp)

    def unit_part(self, t):
        lo, hi = self.unit_support
        return plateau_bump(t, lo, hi, self.ramp)

    def boost_part(self, t):
        lo, hi = self.boost_interval
        return self.boost * plateau_bump(t, lo, hi, 0.5 * (hi - lo))

    def lobe_shape(self, t):
        lo, hi = self.lobe
        return plateau_bump(t, lo, hi, 0.5 * (hi - lo))

    def positive_part(self, t):
        return self.unit_part(t) + self.boost_part(t)

    def chi(self, t):
        return self.positive_part(t) - self.lobe_scale * self.lobe_shape(t)

    @property
    def positive_area(self) -> float:
        lo, hi = self.unit_support
        b0, b1 = self.boost_interval
        return (hi - lo - self.ramp) + self.boost * 0.5 * (b1 - b0)

    def as_dict(self) -> dict:
        return {
            "channel": self.channel,
            "window": list(self.window),
            "plateau": list(self.plateau),
            "ramp": self.ramp,
            "boost_interval": list(self.boost_interval),
            "boost": self.boost,
            "lobe": list(self.lobe),
            "lobe_scale": self.lobe_scale,
        }


def make_bump(channel: int, T: float, m: int, boost: float = DEFAULT_BOOST) -> BumpDescriptor:
    if boost < 0 or not math.isfinite(boost):
        raise LieError(f"boost must be a finite non-negative number, got {boost}")
    a = (channel - 1) * T / m
    b = channel * T / m
    third = (b - a) / 3.0
    lo, hi = a + EDGE_MARGIN * third, a + third
    ramp = 0.5 * (1.0 - PLATEAU_FRACTION) * (hi - lo)
    plateau = (lo + ramp, hi - ramp)
    boost_interval = (a + third, a + 2 * third)
    lobe = (a + 2 * third, b - EDGE_MARGIN * third)
    proto = BumpDescriptor(channel, (a, b), plateau, ramp, boost_interval, float(boost), lobe, 1.0)
    pos = 0.0
    for (p, q) in (proto.unit_support, boost_interval):
        pos += integrate.quad(proto.positive_part, p, q, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    neg, _ = integrate.quad(proto.lobe_shape, lobe[0], lobe[1], epsabs=1e-14, epsrel=1e-12, limit=200)
    return BumpDescriptor(channel, (a, b), plateau, ramp, boost_interval, float(boost), lobe, pos / neg)


@dataclass(frozen=True, eq=False)
class ReferencePlan:
    T: float
    m: int
    x_infty: GroupElement
    bumps: tuple
    sys: ControlSystem
    xi_nodes: np.ndarray = field(repr=False)  # (m, N) node times per window
    xi_table: np.ndarray = field(repr=False)  # (m, N) running integral at the nodes

    @property
    def spec(self):
        return self.sys.spec

    @property
    def is_constant(self) -> bool:
        return len(self.bumps) == 0

    def as_dict(self) -> dict:
        from .io import matrix_to_json

        return {
            "T": self.T,
            "m": self.m,
            "group": {"family": self.spec.family.value, "d": self.spec.d},
            "x_infty": matrix_to_json(self.x_infty.mat),
            "windows": [list(b.window) for b in self.bumps],
            "bumps": [b.as_dict() for b in self.bumps],
        }


def build_reference_plan(sys: ControlSystem, x_infty: GroupElement, T: float,
                         boost: float = DEFAULT_BOOST) -> ReferencePlan:
    if not T > 0 or not math.isfinite(T):
        raise LieError(f"period must be positive, got {T}")
    if sys.m < 1:
        raise LieError("need at least one channel")
    if x_infty.spec != sys.spec:
        raise LieError("x_infty and system use different groups")
    m = sys.m
    bumps = tuple(make_bump(j, float(T), m, boost) for j in range(1, m + 1))
    nodes = np.empty((m, N_XI_NODES))
    table = np.empty((m, N_XI_NODES))
    for i, bump in enumerate(bumps):
        a, b = bump.window
        ts = np.linspace(a, b, N_XI_NODES)
        acc = [0.0]
        for lo, hi in zip(ts[:-1], ts[1:]):
            piece, _ = integrate.quad(bump.chi, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=100)
            acc.append(acc[-1] + piece)
        nodes[i] = ts
        table[i] = acc
    return ReferencePlan(float(T), m, x_infty, bumps, sys, nodes, table)


def constant_plan(sys: ControlSystem, x_infty: GroupElement, T: float) -> ReferencePlan:
    """Degenerate plan with all controls zero, so x_r == x_infty."""
    m = sys.m
    return ReferencePlan(float(T), m, x_infty, (), sys, np.zeros((m, 0)), np.zeros((m, 0)))


def _phase(plan: ReferencePlan, t: float) -> float:
    return float(np.mod(t, plan.T))


def active_channel(plan: ReferencePlan, t: float) -> int | None:
    """0-based index j with (t mod T) in the open window J_j, else None."""
    tau = _phase(plan, t)
    j = int(tau * plan.m / plan.T)
    if j >= plan.m:
        return None
    if plan.is_constant:
        return None
    a, b = plan.bumps[j].window
    if a < tau < b:
        return j
    return None


def eval_controls(plan: ReferencePlan, t: float) -> np.ndarray:
    u = np.zeros(plan.m)
    j = active_channel(plan, t)
    if j is not None:
        u[j] = float(plan.bumps[j].chi(_phase(plan, t)))
    return u


def _xi_phase(plan: ReferencePlan, j: int, tau: float) -> float:
    bump = plan.bumps[j]
    a, b = bump.window
    if not a < tau < b:
        return 0.0
    nodes = plan.xi_nodes[j]
    i = min(int((tau - a) / (nodes[1] - nodes[0])), len(nodes) - 2)
    lo = nodes[i]
    if tau == lo:
        return float(plan.xi_table[j, i])
    half = 0.5 * (tau - lo)
    pts = lo + half * (_GL_X + 1.0)
    return float(plan.xi_table[j, i] + half * np.dot(_GL_W, bump.chi(pts)))


def eval_xi(plan: ReferencePlan, j: int, t: float) -> float:
    """Running integral of channel j (0-based) from the start of the period."""
    if plan.is_constant:
        return 0.0
    return _xi_phase(plan, j, _phase(plan, t))


def reference_raw(plan: ReferencePlan, t: float) -> np.ndarray:
    j = active_channel(plan, t)
    x_inf = plan.x_infty.mat
    if j is None:
        return np.array(x_inf)
    xi = _xi_phase(plan, j, _phase(plan, t))
    return x_inf @ expm_raw(xi * plan.sys.generators[j].mat)


def eval_reference(plan: ReferencePlan, t: float) -> GroupElement:
    return GroupElement(plan.spec, reference_raw(plan, t))


def check_regular_rank(plan: ReferencePlan, grid_size: int = 0) -> tuple[bool, int]:
    """SVD rank of {Ad(x_r(t)) X_k} over a uniform grid on [0, T)."""
    n = plan.spec.dim
    if grid_size <= 0:
        grid_size = 64 * plan.m * n
    if grid_size < plan.m * n:
        raise LieError(f"grid_size must be at least m*n = {plan.m * n}")
    basis = plan.sys.basis
    gens = plan.sys.generator_stack()
    rows = []
    for t in np.arange(grid_size) * (plan.T / grid_size):
        x = reference_raw(plan, t)
        rows.append(basis.coords(x @ gens @ x.conj().T))
    rank = numerical_rank(np.vstack(rows), TOL_RANK)
    return rank == n, rank


def controls_csv(plan: ReferencePlan, samples: int = 2000) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"u{k + 1}" for k in range(plan.m)])
    for t in np.arange(samples) * (plan.T / samples):
        u = eval_controls(plan, t)
        writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in u])
    return buf.getvalue()


def reference_residual(plan: ReferencePlan, grid_size: int = 2000, h: float = 1e-5) -> float:
    """max over t = kT/grid_size of |x_r'(t) - x_r(t) sum_k u_k^r(t) X_k|_F,
    with x_r' from a 5-point central difference of step h."""
    gens = plan.sys.generator_stack()
    worst = 0.0
    for t in np.arange(grid_size) * (plan.T / grid_size):
        xs = [reference_raw(plan, t + o * h) for o in (-2, -1, 1, 2)]
        deriv = (xs[0] - 8.0 * xs[1] + 8.0 * xs[2] - xs[3]) / (12.0 * h)
        field_ = reference_raw(plan, t) @ np.tensordot(eval_controls(plan, t), gens, axes=1)
        worst = max(worst, float(np.linalg.norm(deriv - field_)))
    return worst


def disjoint_support(plan: ReferencePlan, grid_size: int = 2000) -> bool:
    """At most one channel's waveform is nonzero at every grid time.

    Every chi_j is evaluated on its own (not through the window dispatch of
    eval_controls), so overlapping supports would be caught.
    """
    taus = np.arange(grid_size) * (plan.T / grid_size)
    if plan.is_constant:
        return True
    active = np.array([np.asarray(b.chi(taus)) != 0.0 for b in plan.bumps])
    return bool(np.all(active.sum(axis=0) <= 1))
