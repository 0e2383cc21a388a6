"""One-step maps for the splitting and successive-approximation schemes.

Six schemes advance ``du/dt = A u + B(t, u) u`` over one step ``dt``:

``ab``
    B-subflow (Magnus kernel, first order by default) followed by the
    A-flow: ``u -> exp(A dt) exp(Omega_B(dt, u)) u``.
``ba``
    A-flow first, then the B-subflow anchored at the propagated state
    (second-order trapezoid kernel by default).
``strang``
    Symmetric composition of the two half-step kernels.  Both halves use
    a second-order Magnus kernel by default; selecting kernel ``"1"``
    reproduces the plain first-order composition with an Euler first
    half, which drops the overall order to one.
``successive_standard``
    Picard iteration on the variation-of-constants form, nonlinear term
    frozen at the previous iterate, correction integrals by quadrature.
``multiscale_a``
    Perturbation hierarchy around the A-flow with the nonlinearity
    Taylor-expanded (B' terms) and corrections scaled by ``epsilon``.
``multiscale_b``
    Perturbation around the frozen B-subflow with a single correction
    that transports ``A u_0`` along the frozen linearization
    ``L = B(u) + B'(u)[u]``.

When a problem carries time-dependent Dirichlet data, its affine
contribution enters every genuine A-flow through a variation-of-constants
term (Simpson rule); the exponential weights inside correction
quadratures stay homogeneous because corrections satisfy zero boundary
data.

A single trajectory is advanced sequentially; distinct trajectories share
no mutable state and may run concurrently.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expaction import ActionOperator, exp_action
from .magnus import MAGNUS_KERNELS, build_omega, magnus_propagate
from .operators import StateVector, apply_linear

__all__ = [
    "SCHEMES",
    "QUADRATURES",
    "SchemeConfig",
    "Trajectory",
    "BlowUpError",
    "step_ab",
    "step_ba",
    "step_strang",
    "step_successive_standard",
    "step_successive_multi_a",
    "step_successive_multi_b",
    "integrate",
]

SCHEMES = (
    "ab",
    "ba",
    "strang",
    "successive_standard",
    "multiscale_a",
    "multiscale_b",
)
QUADRATURES = ("trapezoid", "midpoint", "simpson")

_DEFAULT_J = {"successive_standard": 1, "multiscale_a": 2, "multiscale_b": 1}


class BlowUpError(RuntimeError):
    """The integrator produced a non-finite state."""

    def __init__(self, step, t):
        super().__init__(f"non-finite state after step {step} (t = {t:g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SchemeConfig:
    """Stepper selection plus the knobs shared by all schemes.

    ``magnus_order`` picks the B-subflow kernel (``None`` resolves to the
    per-scheme default: ``"1"`` for ab, ``"2-trapezoid"`` for ba and for
    both strang halves).  ``J`` is the correction/iteration depth
    (defaults: 1 standard, 2 multiscale-A, 1 multiscale-B).  ``epsilon``
    scales the multiscale corrections.  ``correction_ic`` fixes the
    left-endpoint values of multiscale corrections (``"zero"`` for the
    expansion-consistent hierarchy, ``"restart"`` to re-anchor them at
    the step's initial state).  ``reconstruction`` selects between the
    final Picard iterate and the plain sum of corrections for the
    standard scheme (the sum re-counts the first correction and is kept
    for benchmarking only).
    """

    scheme: str = "strang"
    magnus_order: Optional[str] = None
    quadrature: str = "trapezoid"
    J: Optional[int] = None
    epsilon: float = 1.0
    correction_ic: str = "zero"
    reconstruction: str = "final-iterate"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.magnus_order is not None and self.magnus_order not in MAGNUS_KERNELS:
            raise ValueError(
                f"unknown magnus_order {self.magnus_order!r}; expected one of {MAGNUS_KERNELS}"
            )
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if self.J is not None and self.J < 1:
            raise ValueError(f"iteration depth J must be >= 1, got {self.J}")
        if self.scheme == "multiscale_a" and self.J is not None and self.J > 2:
            raise ValueError("multiscale_a defines corrections up to J = 2 only")
        if self.scheme == "multiscale_b" and self.J not in (None, 1):
            raise ValueError("multiscale_b defines a single correction (J = 1)")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.correction_ic not in ("zero", "restart"):
            raise ValueError(f"unknown correction_ic {self.correction_ic!r}")
        if self.reconstruction not in ("final-iterate", "correction-sum"):
            raise ValueError(f"unknown reconstruction {self.reconstruction!r}")

    # -- kernel/J resolution ------------------------------------------
    def ab_kernel(self):
        return self.magnus_order or "1"

    def ba_kernel(self):
        return self.magnus_order or "2-trapezoid"

    def strang_kernels(self):
        mo = self.magnus_order
        if mo is None:
            return ("2-trapezoid", "2-trapezoid")
        if mo == "1":
            return ("1", "2-trapezoid")
        if mo == "2-midpoint-literal":
            return ("1", "2-midpoint-literal")
        return (mo, mo)

    def resolved_J(self):
        if self.J is not None:
            return self.J
        return _DEFAULT_J.get(self.scheme, 1)

    def labels(self):
        """Resolved mode strings for result rows (magnus, quad, recon, ic)."""
        if self.scheme == "ab":
            magnus = self.ab_kernel()
        elif self.scheme == "ba":
            magnus = self.ba_kernel()
        elif self.scheme == "strang":
            magnus = "+".join(self.strang_kernels())
        else:
            magnus = ""
        return {
            "magnus": magnus,
            "quadrature": self.quadrature if self.scheme.startswith(("successive", "multiscale")) else "",
            "reconstruction": self.reconstruction if self.scheme == "successive_standard" else "",
            "correction_ic": self.correction_ic if self.scheme == "multiscale_a" else "",
        }


@dataclass
class Trajectory:
    """Recorded states of one integration run (uniform time steps)."""

    times: np.ndarray
    states: list
    scheme: str
    step_seconds: list = field(default_factory=list)

    @property
    def final(self):
        return self.states[-1]

    def total_seconds(self):
        return float(sum(self.step_seconds))


# ----------------------------------------------------------------------
# shared sub-flows
# ----------------------------------------------------------------------

def _values_of(u):
    return u.values if isinstance(u, StateVector) else np.asarray(u, dtype=float)


def _wrap_like(u, values, t_new):
    if isinstance(u, StateVector):
        return StateVector(values, u.grid, t_new)
    return values


def _flow_A(problem, values, t, dt, backend):
    """Affine A-subflow over [t, t+dt] including Dirichlet boundary data.

    The inhomogeneous term is integrated with Simpson's rule, which keeps
    the boundary contribution well below every scheme's own splitting
    error.
    """
    A = problem.A
    w = exp_action(A, dt, values, backend)
    bfun = problem.boundary
    if bfun is not None:
        b_right = bfun(t + dt)
        b_mid = bfun(t + 0.5 * dt)
        b_left = bfun(t)
        w = w + (dt / 6.0) * (
            b_right
            + 4.0 * exp_action(A, 0.5 * dt, b_mid, backend)
            + exp_action(A, dt, b_left, backend)
        )
    return w


def _b_subflow(problem, values, t, dt, kernel, backend):
    om = build_omega(problem.B, kernel, t, dt, values, backend)
    return magnus_propagate(om, values, backend)


def _check_dt(dt):
    if not dt > 0:
        raise ValueError(f"step size must be positive, got {dt}")


# ----------------------------------------------------------------------
# splitting steppers
# ----------------------------------------------------------------------

def step_ab(problem, u, t, dt, cfg=None, backend=None):
    """B-subflow then A-flow over one step."""
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="ab")
    v = _b_subflow(problem, _values_of(u), t, dt, cfg.ab_kernel(), backend)
    out = _flow_A(problem, v, t, dt, backend)
    return _wrap_like(u, out, t + dt)


def step_ba(problem, u, t, dt, cfg=None, backend=None):
    """A-flow then B-subflow anchored at the propagated state."""
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="ba")
    w = _flow_A(problem, _values_of(u), t, dt, backend)
    out = _b_subflow(problem, w, t, dt, cfg.ba_kernel(), backend)
    return _wrap_like(u, out, t + dt)


def step_strang(problem, u, t, dt, cfg=None, backend=None):
    """Symmetric half-step composition: B-A over [t, t+dt/2], A-B after."""
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="strang")
    k_first, k_second = cfg.strang_kernels()
    h = 0.5 * dt
    v = _b_subflow(problem, _values_of(u), t, h, k_first, backend)
    v = _flow_A(problem, v, t, h, backend)
    v = _flow_A(problem, v, t + h, h, backend)
    out = _b_subflow(problem, v, t + h, h, k_second, backend)
    return _wrap_like(u, out, t + dt)


# ----------------------------------------------------------------------
# successive-approximation steppers
# ----------------------------------------------------------------------

class _StepQuadrature:
    """Quadrature of correction integrals over one step.

    Evaluates ``int_t^{t+dt} exp(A (t+dt-s)) k(s) ds`` from node values of
    ``k`` at (left, mid, right); the half-interval variant (plain
    trapezoid) supplies mid-node iterate values when the midpoint or
    Simpson rule asks for them.
    """

    def __init__(self, problem, t, dt, rule, backend):
        self.problem = problem
        self.t = t
        self.dt = dt
        self.rule = rule
        self.backend = backend
        self.needs_mid = rule in ("midpoint", "simpson")

    def weight_full(self, x):
        return exp_action(self.problem.A, self.dt, x, self.backend)

    def weight_half(self, x):
        return exp_action(self.problem.A, 0.5 * self.dt, x, self.backend)

    def full(self, k_left, k_mid, k_right):
        dt = self.dt
        if self.rule == "trapezoid":
            return 0.5 * dt * (k_right + self.weight_full(k_left))
        if self.rule == "midpoint":
            return dt * self.weight_half(k_mid)
        return (dt / 6.0) * (
            k_right + 4.0 * self.weight_half(k_mid) + self.weight_full(k_left)
        )

    def half(self, k_left, k_mid):
        return 0.25 * self.dt * (k_mid + self.weight_half(k_left))


def step_successive_standard(problem, u, t, dt, cfg=None, backend=None):
    """Picard iteration with the nonlinear term frozen at the previous iterate.

    ``u_0 = exp(A dt) u``; each correction integrates
    ``k_j(s) = B(u_{j-1}(s)) u_{j-1}(s)`` against the homogeneous A-weight,
    with all iterates pinned to the step's initial state at the left
    endpoint.  Returns ``u_0 + utilde_J`` (final iterate) or the plain sum
    of corrections when ``reconstruction="correction-sum"``.
    """
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="successive_standard")
    values = _values_of(u)
    F = problem.B
    J = cfg.resolved_J()
    quad = _StepQuadrature(problem, t, dt, cfg.quadrature, backend)
    tl, tm, tr = t, t + 0.5 * dt, t + dt

    u0_right = _flow_A(problem, values, t, dt, backend)
    u0_mid = _flow_A(problem, values, t, 0.5 * dt, backend) if quad.needs_mid else None

    prev_left, prev_mid, prev_right = values, u0_mid, u0_right
    corrections = []
    for j in range(1, J + 1):
        k_left = F.apply(tl, prev_left, prev_left)
        k_right = F.apply(tr, prev_right, prev_right)
        k_mid = F.apply(tm, prev_mid, prev_mid) if quad.needs_mid else None
        tilde = quad.full(k_left, k_mid, k_right)
        corrections.append(tilde)
        if j < J:
            prev_left = values
            prev_right = u0_right + tilde
            if quad.needs_mid:
                prev_mid = u0_mid + quad.half(k_left, k_mid)

    if cfg.reconstruction == "correction-sum":
        out = u0_right + sum(corrections)
    else:
        out = u0_right + corrections[-1]
    return _wrap_like(u, out, t + dt)


def step_successive_multi_a(problem, u, t, dt, cfg=None, backend=None):
    """Multiscale hierarchy around the A-flow (corrections scaled by epsilon).

    First correction: ``k_1(s) = B(u_0(s)) u_0(s)``.  Second correction
    adds the Taylor term of the expanded nonlinearity,
    ``k_2(s) = B(u_0(s)) u_1(s) + (B'(u_0(s))[u_1(s)]) u_0(s)``, where the
    correction state ``u_1`` starts from zero (``correction_ic="zero"``)
    or from the step's initial state (``"restart"``).
    """
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="multiscale_a")
    values = _values_of(u)
    F = problem.B
    J = cfg.resolved_J() if cfg.scheme == "multiscale_a" else (cfg.J or 2)
    if J > 2:
        raise ValueError("multiscale_a defines corrections up to J = 2 only")
    eps = cfg.epsilon
    quad = _StepQuadrature(problem, t, dt, cfg.quadrature, backend)
    tl, tm, tr = t, t + 0.5 * dt, t + dt

    u0_left = values
    u0_right = _flow_A(problem, values, t, dt, backend)
    u0_mid = _flow_A(problem, values, t, 0.5 * dt, backend) if quad.needs_mid else None

    k1_left = F.apply(tl, u0_left, u0_left)
    k1_right = F.apply(tr, u0_right, u0_right)
    k1_mid = F.apply(tm, u0_mid, u0_mid) if quad.needs_mid else None
    tilde1 = eps * quad.full(k1_left, k1_mid, k1_right)
    out = u0_right + tilde1

    if J >= 2:
        if not F.has_derivative:
            raise ValueError(
                f"family {F.name!r} lacks the first derivative required by "
                "the second multiscale correction"
            )
        if cfg.correction_ic == "zero":
            u1_left = np.zeros_like(values)
            u1_right = tilde1
            u1_mid = eps * quad.half(k1_left, k1_mid) if quad.needs_mid else None
        else:
            u1_left = values
            u1_right = u0_right + tilde1
            u1_mid = (u0_mid + eps * quad.half(k1_left, k1_mid)) if quad.needs_mid else None

        def k2(tt, u0_node, u1_node):
            return F.apply(tt, u0_node, u1_node) + F.derivative_apply(
                tt, u0_node, u1_node, u0_node
            )

        k2_left = k2(tl, u0_left, u1_left)
        k2_right = k2(tr, u0_right, u1_right)
        k2_mid = k2(tm, u0_mid, u1_mid) if quad.needs_mid else None
        out = out + eps * quad.full(k2_left, k2_mid, k2_right)

    return _wrap_like(u, out, t + dt)


def step_successive_multi_b(problem, u, t, dt, cfg=None, backend=None):
    """Multiscale correction around the frozen B-subflow.

    ``u_0(s) = exp(s B(t, u)) u``; the single correction transports the
    linear source ``A u_0(s)`` (plus boundary data) with the frozen
    linearization ``L = B(t, u) + B'(t, u)[u]``:
    trapezoid form ``(eps dt/2) (A u_0(t+dt) + exp(dt L) A u)``.
    """
    _check_dt(dt)
    cfg = cfg or SchemeConfig(scheme="multiscale_b")
    values = _values_of(u)
    F = problem.B
    if not F.has_derivative:
        raise ValueError(
            f"family {F.name!r} lacks the first derivative required by the "
            "frozen linearization of the B-centered hierarchy"
        )
    eps = cfg.epsilon
    rule = cfg.quadrature

    if F.structure == "diagonal":
        b_diag = F.diag_values(t, values)
        l_diag = b_diag + F.derivative_diag_values(t, values, values)

        def u0_of(s):
            return np.exp(s * b_diag) * values

        def expL(s, x):
            return np.exp(s * l_diag) * x

    else:
        b_op = ActionOperator(lambda x: F.apply(t, values, x), values.size)
        l_op = ActionOperator(
            lambda x: F.apply(t, values, x) + F.derivative_apply(t, values, values, x),
            values.size,
        )

        def u0_of(s):
            return exp_action(b_op, s, values, backend)

        def expL(s, x):
            return exp_action(l_op, s, x, backend)

    bfun = problem.boundary

    def source(t_abs, w):
        s = apply_linear(problem.A, w)
        if bfun is not None:
            s = s + bfun(t_abs)
        return s

    u0_right = u0_of(dt)
    src_left = source(t, values)
    src_right = source(t + dt, u0_right)
    if rule == "trapezoid":
        corr = 0.5 * dt * (src_right + expL(dt, src_left))
    else:
        src_mid = source(t + 0.5 * dt, u0_of(0.5 * dt))
        if rule == "midpoint":
            corr = dt * expL(0.5 * dt, src_mid)
        else:
            corr = (dt / 6.0) * (
                src_right + 4.0 * expL(0.5 * dt, src_mid) + expL(dt, src_left)
            )
    return _wrap_like(u, u0_right + eps * corr, t + dt)


_STEPPERS = {
    "ab": step_ab,
    "ba": step_ba,
    "strang": step_strang,
    "successive_standard": step_successive_standard,
    "multiscale_a": step_successive_multi_a,
    "multiscale_b": step_successive_multi_b,
}


def stepper_for(scheme):
    return _STEPPERS[scheme]


def integrate(problem, u0, t0, T, dt, cfg, observer=None, backend=None,
              keep_states=True):
    """Advance from ``t0`` to ``T`` in uniform steps of ``dt``.

    ``(T - t0)/dt`` must be a nonnegative integer to within a relative
    1e-9.  The observer, when given, is called as
    ``observer(step_index, t_new, state_values)`` after every step.  A
    non-finite state aborts with :class:`BlowUpError` carrying the
    offending step index.  With ``keep_states=False`` only the initial
    and final states are retained (long trajectories on large grids).
    """
    _check_dt(dt)
    ratio = (T - t0) / dt
    n_steps = int(round(ratio))
    if n_steps < 0 or abs(ratio - n_steps) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(
            f"(T - t0)/dt = {ratio} is not an integer step count"
        )
    step = stepper_for(cfg.scheme)
    values = _values_of(u0)
    start = StateVector(values, problem.grid, t0)
    times = [t0]
    states = [start]
    step_seconds = []
    v = values
    for n in range(n_steps):
        t_n = t0 + n * dt
        tic = time.perf_counter()
        v = step(problem, v, t_n, dt, cfg, backend)
        step_seconds.append(time.perf_counter() - tic)
        if not np.all(np.isfinite(v)):
            raise BlowUpError(n, t_n)
        t_new = t0 + (n + 1) * dt
        times.append(t_new)
        state = StateVector(v, problem.grid, t_new)
        if keep_states or len(states) == 1:
            states.append(state)
        else:
            states[-1] = state
        if observer is not None:
            observer(n + 1, t_new, v)
    return Trajectory(np.asarray(times), states, cfg.scheme, step_seconds)
