"""First- and second-order nonlinear Magnus operators for the B-subflow.

Within a step ``[t0, t0 + dt]`` the nonlinear subflow ``du/dt = B(t, u) u``
is advanced as ``u -> exp(Omega) u`` where ``Omega`` collapses the operator
integral to a quadrature anchored at the step's left endpoint:

* order 1 (Euler):       ``Omega = dt * B(t0, u0)``
* order 2, midpoint:     ``Omega = dt * B(t0 + dt/2, u_mid)`` with
  ``u_mid = exp(Omega_1(dt/2, u0)) u0``
* order 2, trapezoid:    ``Omega = dt/2 * (B(t0, u0) + B(t0 + dt, w))`` with
  ``w = exp(dt * B(t0, u0)) u0``

A further "literal" midpoint variant replaces the midpoint state by the
raw half-step operator diagonal ``(dt/2) * diag B(t0, u0)`` instead of a
propagated state.  It is dimensionally inconsistent and effectively
switches the nonlinear subflow off at O(dt^2); it exists as an opt-in
diagnostic because exactly this degeneracy reproduces the stagnating
error plateaus seen for the splitting rows of the reference benchmark
tables.  Never use it for production runs.

Diagonal families keep ``Omega`` as a plain diagonal so propagation is an
elementwise exponential; other families are handled through matvec
closures and the iterative exponential backend.
"""

import numpy as np

from .expaction import ActionOperator, exp_action
from .operators import StateVector

__all__ = [
    "MagnusOperator",
    "MAGNUS_KERNELS",
    "omega1",
    "omega2_midpoint",
    "omega2_trapezoid",
    "omega2_midpoint_literal",
    "build_omega",
    "magnus_propagate",
]

MAGNUS_KERNELS = ("1", "2-midpoint", "2-trapezoid", "2-midpoint-literal")


class MagnusOperator:
    """Assembled subflow generator ``Omega`` plus its construction context."""

    def __init__(self, order, dt, t0, dim, diag=None, matvec=None):
        if diag is None and matvec is None:
            raise ValueError("MagnusOperator needs a diagonal or a matvec payload")
        self.order = order
        self.dt = float(dt)
        self.t0 = float(t0)
        self.dim = int(dim)
        self.diag = None if diag is None else np.asarray(diag, dtype=float)
        self._matvec = matvec

    @property
    def is_diagonal(self):
        return self.diag is not None

    def matvec(self, v):
        if self.diag is not None:
            return self.diag * v
        return self._matvec(v)

    def __repr__(self):
        kind = "diag" if self.is_diagonal else "matvec"
        return f"MagnusOperator(order={self.order}, dt={self.dt}, {kind}, n={self.dim})"


def _state_values(u0):
    if isinstance(u0, StateVector):
        return u0.values
    return np.asarray(u0, dtype=float)


def _check_dt(dt):
    if not dt > 0:
        raise ValueError(f"Magnus construction needs dt > 0, got {dt}")


def _from_family(F, t, u, dt, order, t0):
    """Package ``dt * B(t, u)`` (already scaled) as a MagnusOperator."""
    if F.structure == "diagonal":
        return MagnusOperator(order, dt, t0, u.size, diag=dt * F.diag_values(t, u))
    return MagnusOperator(
        order, dt, t0, u.size, matvec=lambda v, _t=t, _u=u: dt * F.apply(_t, _u, v)
    )


def omega1(F, t0, dt, u0):
    """First-order (Euler) operator ``Omega = dt * B(t0, u0)``."""
    _check_dt(dt)
    u = _state_values(u0)
    return _from_family(F, t0, u, dt, "1", t0)


def omega2_midpoint(F, t0, dt, u0, backend=None):
    """Second-order operator from the midpoint rule.

    The midpoint state is produced by a half step of the first-order
    subflow: ``u_mid = exp(Omega_1(dt/2, u0)) u0``.
    """
    _check_dt(dt)
    u = _state_values(u0)
    u_mid = magnus_propagate(omega1(F, t0, dt / 2.0, u), u, backend)
    return _from_family(F, t0 + dt / 2.0, u_mid, dt, "2-midpoint", t0)


def omega2_trapezoid(F, t0, dt, u0, backend=None):
    """Second-order operator from the trapezoidal rule.

    ``Omega = dt/2 * (B(t0, u0) + B(t0 + dt, exp(dt*B(t0, u0)) u0))``.
    """
    _check_dt(dt)
    u = _state_values(u0)
    w = magnus_propagate(omega1(F, t0, dt, u), u, backend)
    left = _from_family(F, t0, u, 0.5 * dt, "2-trapezoid", t0)
    if left.is_diagonal:
        right_diag = 0.5 * dt * F.diag_values(t0 + dt, w)
        return MagnusOperator("2-trapezoid", dt, t0, u.size, diag=left.diag + right_diag)

    def matvec(v):
        return left.matvec(v) + 0.5 * dt * F.apply(t0 + dt, w, v)

    return MagnusOperator("2-trapezoid", dt, t0, u.size, matvec=matvec)


def omega2_midpoint_literal(F, t0, dt, u0, backend=None):
    """Diagnostic variant: midpoint state replaced by ``(dt/2) diag B(t0, u0)``.

    Only defined for diagonal families, whose operator diagonal can be
    coerced into a state vector.  See the module docstring for why this
    exists; it is not a consistent integrator kernel.
    """
    _check_dt(dt)
    u = _state_values(u0)
    if F.structure != "diagonal":
        raise ValueError(
            "the literal midpoint variant is only defined for diagonal families"
        )
    pseudo_state = 0.5 * dt * F.diag_values(t0, u)
    return _from_family(F, t0 + dt / 2.0, pseudo_state, dt, "2-midpoint-literal", t0)


_BUILDERS = {
    "1": omega1,
    "2-midpoint": omega2_midpoint,
    "2-trapezoid": omega2_trapezoid,
    "2-midpoint-literal": omega2_midpoint_literal,
}


def build_omega(F, kernel, t0, dt, u0, backend=None):
    """Construct the Magnus operator for a named kernel."""
    try:
        builder = _BUILDERS[kernel]
    except KeyError:
        raise ValueError(f"unknown Magnus kernel {kernel!r}; use one of {MAGNUS_KERNELS}")
    if kernel == "1":
        return builder(F, t0, dt, u0)
    return builder(F, t0, dt, u0, backend)


def magnus_propagate(omega, u, backend=None):
    """Apply ``exp(Omega)`` to a state.

    Diagonal operators use the elementwise exponential; everything else
    goes through :func:`magsplit.expaction.exp_action` with ``tau = 1``
    (the step size is already folded into ``Omega``).
    """
    values = _state_values(u)
    if values.shape != (omega.dim,):
        raise ValueError(
            f"Magnus operator of dimension {omega.dim} cannot act on a state "
            f"of length {values.size}"
        )
    if omega.is_diagonal:
        out = np.exp(omega.diag) * values
    else:
        op = ActionOperator(omega.matvec, omega.dim)
        out = exp_action(op, 1.0, values, backend)
    if isinstance(u, StateVector):
        return u.with_values(out)
    return out
