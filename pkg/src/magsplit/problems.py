"""Built-in test problems: a scalar Bernoulli ODE and Fisher's equation in 1/2/3-d.

Each constructor returns an immutable :class:`Problem` bundling the grid,
the stiff linear operator ``A``, the nonlinear family ``B``, the sampled
initial state, closed-form reference solutions where available, and the
time-dependent Dirichlet boundary contribution for problems with nonzero
boundary data (the 1-d Fisher problem; the 2-d/3-d problems use
homogeneous Dirichlet walls).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .operators import Grid, LinearOperator, NonlinearFamily, StateVector, diagonal_family

__all__ = [
    "Problem",
    "bernoulli_problem",
    "bernoulli_exact",
    "fisher_problem_1d",
    "fisher_problem_2d",
    "fisher_problem_3d",
    "heat_kernel_tilde",
    "linear_dr_exact",
    "fisher_reference",
]


@dataclass(frozen=True)
class Problem:
    """A semilinear evolution problem du/dt = A u + B(t, u) u + boundary data.

    ``reference(t)`` samples the comparison solution on the grid (None when
    only refined-grid references apply).  ``reference_point(points, t)``
    is the underlying pointwise map.  ``boundary(t)`` returns the affine
    contribution of the Dirichlet data to the semidiscrete right-hand side.
    """

    name: str
    grid: Grid
    A: LinearOperator
    B: NonlinearFamily
    initial: np.ndarray
    params: dict = field(default_factory=dict)
    reference: Optional[Callable[[float], np.ndarray]] = None
    reference_point: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    boundary: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        if self.A.dim != self.grid.n:
            raise ValueError(
                f"operator dimension {self.A.dim} does not match grid size {self.grid.n}"
            )
        if self.initial.shape != (self.grid.n,):
            raise ValueError("initial state does not match the grid")

    def initial_state(self, t0=0.0):
        return StateVector(self.initial, self.grid, t0)

    def label(self):
        inner = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})" if inner else self.name


# ----------------------------------------------------------------------
# Bernoulli equation  u' = lam1 u + lam2 u^m,  u(0) = 1
# ----------------------------------------------------------------------

def _bernoulli_family(lam2, m):
    def diag(t, u):
        return lam2 * u ** (m - 1)

    def ddiag(t, u0, d):
        return lam2 * (m - 1) * u0 ** (m - 2) * d

    def d2diag(t, u0, d1, d2):
        if m <= 2:
            return np.zeros_like(u0)
        return lam2 * (m - 1) * (m - 2) * u0 ** (m - 3) * d1 * d2

    return diagonal_family(diag, ddiag, d2diag, name=f"power(m={m})")


def bernoulli_problem(lam1, lam2, m=2):
    """Scalar Bernoulli problem split as ``A u = lam1 u``, ``B(u)u = lam2 u^(m-1) u``."""
    if m < 2:
        raise ValueError(f"Bernoulli exponent must satisfy m >= 2, got {m}")
    grid = Grid.ode(1)
    A = LinearOperator(sp.csr_matrix(np.array([[float(lam1)]])), symmetric=True)
    B = _bernoulli_family(float(lam2), int(m))
    params = {"lambda1": float(lam1), "lambda2": float(lam2), "m": int(m)}

    def reference(t):
        return np.array([bernoulli_exact(t, lam1, lam2, m)])

    return Problem(
        name="bernoulli",
        grid=grid,
        A=A,
        B=B,
        initial=np.array([1.0]),
        params=params,
        reference=reference,
    )


def bernoulli_exact(t, lam1, lam2, m):
    """Closed-form Bernoulli solution with u(0) = 1.

    ``u(t) = [(1 + lam2/lam1) exp(lam1 t (1 - m)) - lam2/lam1]^(1/(1-m))``.
    Raises for the finite-time blow-up regime where the bracket is
    nonpositive anywhere on the queried times.
    """
    if lam1 == 0:
        raise ValueError("the closed form requires lam1 != 0")
    t = np.asarray(t, dtype=float)
    ratio = lam2 / lam1
    bracket = (1.0 + ratio) * np.exp(lam1 * t * (1 - m)) - ratio
    if np.any(bracket <= 0):
        raise ValueError(
            f"closed-form bracket nonpositive at t={t[bracket <= 0] if t.ndim else t}"
            " (finite-time blow-up regime)"
        )
    out = bracket ** (1.0 / (1 - m))
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------
# Fisher's equation  u_t = D Lap u + r (1 - u/K) u
# ----------------------------------------------------------------------

def _fisher_family(r, K):
    coef = -r / K

    def diag(t, u):
        return coef * u

    def ddiag(t, u0, d):
        return coef * d

    def d2diag(t, u0, d1, d2):
        return np.zeros_like(u0)

    return diagonal_family(diag, ddiag, d2diag, name=f"logistic(r={r},K={K})")


def _tridiag_1m2_1(n):
    return sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1],
                    format="csr")


def heat_kernel_tilde(x, t, D):
    """Heat-flow image of the Gaussian bump ``exp(-x^2)`` (one axis)."""
    s = 1.0 + 4.0 * D * t
    if np.any(np.asarray(s) <= 0):
        raise ValueError(f"heat kernel undefined: 1 + 4*D*t = {s} <= 0")
    x = np.asarray(x, dtype=float)
    out = np.exp(-(x ** 2) / s) / np.sqrt(s)
    return float(out) if out.ndim == 0 else out


def linear_dr_exact(x, t, D, r):
    """Exact solution of the linear diffusion-reaction part, ``exp(r t) * tilde``."""
    return np.exp(r * t) * heat_kernel_tilde(x, t, D)


def fisher_reference(x, t, D, r, K):
    """Closed-form 1-d comparison solution built on the heat-flow image.

    ``u(x,t) = exp(rt) tilde / (1 + (exp(rt) tilde - g)/K)`` with
    ``g(x) = exp(-x^2)``.  Exact for D = 0 (pointwise logistic growth);
    for D > 0 it carries a small defect quantified separately by the
    fine-step numerical oracle in the benchmark suite.
    """
    x = np.asarray(x, dtype=float)
    w = linear_dr_exact(x, t, D, r)
    g = np.exp(-(x ** 2))
    den = 1.0 + (w - g) / K
    if np.any(den <= 0):
        raise ValueError("reference denominator nonpositive; outside the valid regime")
    out = w / den
    return float(out) if out.ndim == 0 else out


def fisher_problem_1d(D=0.01, r=1.0, K=1.0, domain=(0.0, 10.0), dx=0.05,
                      boundary="reference"):
    """1-d Fisher problem on interior points with reference Dirichlet data.

    ``A = D/dx^2 tridiag(1,-2,1) + r I`` on the interior unknowns;
    ``B(u) = -(r/K) diag(u)``.  With ``boundary="reference"`` the Dirichlet
    values at both domain ends follow :func:`fisher_reference` and enter
    the semidiscrete system as a time-dependent affine term;
    ``boundary="zero"`` clamps the walls to zero instead (diagnostics).
    """
    if D < 0 or K <= 0:
        raise ValueError(f"need D >= 0 and K > 0, got D={D}, K={K}")
    grid = Grid.interior([domain], dx)
    n = grid.n
    h = grid.spacings[0]
    A = LinearOperator(
        (D / h ** 2) * _tridiag_1m2_1(n) + r * sp.identity(n, format="csr"),
        symmetric=True,
    )
    B = _fisher_family(r, K)
    x = grid.axis_points(0)
    initial = np.exp(-(x ** 2))
    params = {"D": float(D), "r": float(r), "K": float(K), "dx": float(h)}

    def reference_point(points, t):
        return fisher_reference(points[..., 0] if points.ndim > 1 else points, t, D, r, K)

    def reference(t):
        return fisher_reference(x, t, D, r, K)

    boundary_fn = None
    if boundary == "reference":
        coef = D / h ** 2
        lo, hi = domain

        def boundary_fn(t):
            b = np.zeros(n)
            b[0] = coef * fisher_reference(lo, t, D, r, K)
            b[-1] = coef * fisher_reference(hi, t, D, r, K)
            return b

    elif boundary != "zero":
        raise ValueError(f"unknown boundary mode {boundary!r}")

    return Problem(
        name="fisher1d",
        grid=grid,
        A=A,
        B=B,
        initial=initial,
        params=params,
        reference=reference,
        reference_point=reference_point,
        boundary=boundary_fn,
    )


def _laplacian_nd(counts, scales):
    """Sum over axes of (scale_axis * 1-d stencil), x index fastest."""
    n_total = int(np.prod(counts))
    out = sp.csr_matrix((n_total, n_total))
    dim = len(counts)
    for axis in range(dim):
        t1 = scales[axis] * _tridiag_1m2_1(counts[axis])
        left = int(np.prod(counts[axis + 1:])) if axis + 1 < dim else 1
        right = int(np.prod(counts[:axis])) if axis > 0 else 1
        term = sp.identity(left, format="csr")
        term = sp.kron(term, t1, format="csr")
        term = sp.kron(term, sp.identity(right, format="csr"), format="csr")
        out = out + term
    return out


def _fisher_problem_nd(name, Ds, r, K, domain, dx):
    if any(d < 0 for d in Ds) or K <= 0:
        raise ValueError(f"need D >= 0 per axis and K > 0, got D={Ds}, K={K}")
    dim = len(Ds)
    grid = Grid.interior([domain] * dim, dx)
    h = grid.spacings[0]
    scales = [d / h ** 2 for d in Ds]
    A = LinearOperator(
        _laplacian_nd(grid.counts, scales) + r * sp.identity(grid.n, format="csr"),
        symmetric=True,
    )
    pts = grid.points()
    initial = np.exp(-np.sum(pts ** 2, axis=1))
    params = {"r": float(r), "K": float(K), "dx": float(h)}
    params.update({f"D{ax}": float(d) for ax, d in zip("xyz", Ds)})
    return Problem(
        name=name,
        grid=grid,
        A=A,
        B=_fisher_family(r, K),
        initial=initial,
        params=params,
    )


def fisher_problem_2d(Dx=0.01, Dy=0.01, r=1.0, K=1.0, domain=(-2.0, 2.0), dx=0.05):
    """2-d Fisher problem: 5-point Laplacian, homogeneous Dirichlet walls."""
    return _fisher_problem_nd("fisher2d", (Dx, Dy), r, K, domain, dx)


def fisher_problem_3d(Dx=0.01, Dy=0.01, Dz=0.01, r=1.0, K=1.0,
                      domain=(-0.5, 0.5), dx=0.05):
    """3-d Fisher problem: 7-point Laplacian, homogeneous Dirichlet walls."""
    return _fisher_problem_nd("fisher3d", (Dx, Dy, Dz), r, K, domain, dx)
