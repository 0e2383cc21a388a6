"""Grids, state vectors, and the linear/nonlinear operator pair.

The evolution problems handled by this package have the semilinear form

    du/dt = A u + B(t, u) u,

with a stiff linear part ``A`` (a sparse matrix acting on the vector of
grid unknowns) and a state-dependent family ``B(t, u)`` that is applied
through action maps rather than assembled matrices.  All objects here are
immutable after construction and safe to share between worker threads;
the module-level operations are pure functions.
"""

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid",
    "StateVector",
    "LinearOperator",
    "NonlinearFamily",
    "diagonal_family",
    "zero_family",
    "apply_linear",
    "eval_B",
    "eval_B_prime",
    "eval_B_second",
]


class Grid:
    """Uniform tensor-product grid of interior Dirichlet unknowns.

    Boundary points are excluded from the unknown vector: a grid with
    ``I`` points per axis on ``[lo, hi]`` has spacing ``(hi - lo)/(I + 1)``
    and nodes ``lo + i*dx`` for ``i = 1..I``.  ``dimension == 0`` denotes a
    plain ODE system of a given size with no spatial structure.

    Unknowns are flattened lexicographically with the x index fastest:
    ``i = (k-1)*I + j`` in 2-d and ``i = (l-1)*I**2 + (k-1)*I + j`` in 3-d
    (1-based j/k/l along x/y/z).
    """

    def __init__(self, dimension, bounds=(), counts=(), size=None):
        if dimension not in (0, 1, 2, 3):
            raise ValueError(f"grid dimension must be 0..3, got {dimension}")
        self.dimension = int(dimension)
        if dimension == 0:
            if not size or size < 1:
                raise ValueError("dimension-0 grid needs a positive system size")
            self.bounds = ()
            self.counts = ()
            self.spacings = ()
            self._n = int(size)
            return
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        counts = tuple(int(c) for c in counts)
        if len(bounds) != dimension or len(counts) != dimension:
            raise ValueError(
                f"need {dimension} bounds/counts, got {len(bounds)}/{len(counts)}"
            )
        if any(c < 1 for c in counts):
            raise ValueError(f"per-axis counts must be >= 1, got {counts}")
        if any(hi <= lo for lo, hi in bounds):
            raise ValueError(f"empty axis interval in {bounds}")
        self.bounds = bounds
        self.counts = counts
        self.spacings = tuple(
            (hi - lo) / (c + 1) for (lo, hi), c in zip(bounds, counts)
        )
        self._n = int(np.prod(counts))

    @classmethod
    def ode(cls, size):
        """Grid standing in for an ODE system of ``size`` unknowns."""
        return cls(0, size=size)

    @classmethod
    def interior(cls, bounds, dx):
        """Interior-point grid with spacing ``dx`` on each axis.

        ``dx`` must divide every axis length to within a relative 1e-9.
        """
        bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        counts = []
        for lo, hi in bounds:
            ratio = (hi - lo) / dx
            m = round(ratio)
            if m < 2 or abs(ratio - m) > 1e-9 * max(1.0, abs(ratio)):
                raise ValueError(
                    f"dx={dx} does not divide the interval [{lo}, {hi}]"
                )
            counts.append(m - 1)
        return cls(len(bounds), bounds, counts)

    @property
    def n(self):
        """Total number of unknowns."""
        return self._n

    def axis_points(self, axis):
        lo, _ = self.bounds[axis]
        dx = self.spacings[axis]
        return lo + dx * np.arange(1, self.counts[axis] + 1)

    def points(self):
        """Coordinates of all unknowns, shape ``(n, dimension)``, flattening order."""
        if self.dimension == 0:
            raise ValueError("a dimension-0 grid has no spatial points")
        axes = [self.axis_points(a) for a in range(self.dimension)]
        # x fastest: mesh in (z, y, x) order and C-ravel.
        mesh = np.meshgrid(*axes[::-1], indexing="ij")
        cols = [m.ravel() for m in mesh[::-1]]
        return np.column_stack(cols)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.dimension == other.dimension
            and self.bounds == other.bounds
            and self.counts == other.counts
            and self._n == other._n
        )

    def __hash__(self):
        return hash((self.dimension, self.bounds, self.counts, self._n))

    def __repr__(self):
        if self.dimension == 0:
            return f"Grid(ode, n={self._n})"
        return f"Grid(dim={self.dimension}, counts={self.counts}, dx={self.spacings})"


class StateVector:
    """Grid-sampled solution values at one time instant (immutable)."""

    def __init__(self, values, grid, time=0.0):
        values = np.array(values, dtype=float, copy=True).ravel()
        if values.size != grid.n:
            raise ValueError(
                f"state has {values.size} entries but grid has {grid.n} unknowns"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("state entries must be finite")
        values.setflags(write=False)
        self.values = values
        self.grid = grid
        self.time = float(time)

    @property
    def n(self):
        return self.values.size

    def with_values(self, values, time=None):
        return StateVector(values, self.grid, self.time if time is None else time)

    def __repr__(self):
        return f"StateVector(n={self.n}, t={self.time})"


def _values(u):
    """Accept a StateVector or a bare array and return the raw values."""
    if isinstance(u, StateVector):
        return u.values
    return np.asarray(u, dtype=float)


class LinearOperator:
    """Sparse linear operator with an optional spectral-interval hint.

    The hint (a pair bounding the real spectrum) enables the polynomial
    exponential-action backend; for symmetric operators a Gershgorin
    interval is derived on demand when no hint is supplied.
    """

    def __init__(self, matrix, symmetric=False, spectral_hint=None):
        matrix = sp.csr_matrix(matrix, dtype=float)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"operator must be square, got shape {matrix.shape}")
        self.matrix = matrix
        self.symmetric = bool(symmetric)
        self.spectral_hint = (
            None if spectral_hint is None else (float(spectral_hint[0]), float(spectral_hint[1]))
        )
        self._gershgorin = None
        self._expm_cache = {}

    @property
    def dim(self):
        return self.matrix.shape[0]

    def matvec(self, v):
        return self.matrix.dot(v)

    def __matmul__(self, v):
        return self.matrix.dot(v)

    def toarray(self):
        return self.matrix.toarray()

    def spectral_interval(self):
        """Interval containing the (real) spectrum, or None if unknown."""
        if self.spectral_hint is not None:
            return self.spectral_hint
        if not self.symmetric:
            return None
        if self._gershgorin is None:
            m = self.matrix
            diag = m.diagonal()
            radius = np.abs(m).sum(axis=1).A1 - np.abs(diag)
            self._gershgorin = (float(np.min(diag - radius)), float(np.max(diag + radius)))
        return self._gershgorin

    def __repr__(self):
        return f"LinearOperator(n={self.dim}, symmetric={self.symmetric})"


class NonlinearFamily:
    """State-dependent operator family ``B(t, u)`` given through action maps.

    ``apply(t, u, v)`` returns ``B(t, u) v``.  The optional maps
    ``derivative(t, u0, d, v) = (B'(u0)[d]) v`` and
    ``second(t, u0, d1, d2, v) = (B''(u0)[d1, d2]) v`` supply the first and
    second directional derivatives of ``u -> B(u)`` needed by the
    multiscale correction hierarchies.  ``structure`` is one of
    ``{"diagonal", "dense", "general"}``; the diagonal tag additionally
    requires ``diag(t, u)`` returning the diagonal of ``B(t, u)`` so that
    applications and matrix exponentials stay linear in the system size.
    """

    def __init__(self, apply, structure="general", diag=None, derivative=None,
                 second=None, derivative_diag=None, second_diag=None, name=""):
        if structure not in ("diagonal", "dense", "general"):
            raise ValueError(f"unknown structure tag {structure!r}")
        if structure == "diagonal" and diag is None:
            raise ValueError("diagonal families must supply the diag map")
        self._apply = apply
        self._diag = diag
        self._derivative = derivative
        self._second = second
        self._derivative_diag = derivative_diag
        self._second_diag = second_diag
        self.structure = structure
        self.name = name or "family"

    # -- capabilities ------------------------------------------------
    @property
    def has_derivative(self):
        return self._derivative is not None or self._derivative_diag is not None

    @property
    def has_second_derivative(self):
        return self._second is not None or self._second_diag is not None

    # -- actions -----------------------------------------------------
    def apply(self, t, u, v):
        return self._apply(t, np.asarray(u, float), np.asarray(v, float))

    def diag_values(self, t, u):
        if self._diag is None:
            raise ValueError(f"family {self.name!r} has no diagonal representation")
        return np.asarray(self._diag(t, np.asarray(u, float)), dtype=float)

    def derivative_apply(self, t, u0, d, v):
        if self._derivative is not None:
            return self._derivative(t, u0, d, v)
        if self._derivative_diag is not None:
            return self.derivative_diag_values(t, u0, d) * np.asarray(v, float)
        raise ValueError(
            f"family {self.name!r} does not define a first derivative B'"
        )

    def derivative_diag_values(self, t, u0, d):
        """Diagonal of ``B'(u0)[d]`` for diagonal families."""
        if self._derivative_diag is None:
            raise ValueError(
                f"family {self.name!r} has no diagonal first-derivative map"
            )
        return np.asarray(self._derivative_diag(t, np.asarray(u0, float), np.asarray(d, float)), float)

    def second_apply(self, t, u0, d1, d2, v):
        if self._second is not None:
            return self._second(t, u0, d1, d2, v)
        if self._second_diag is not None:
            diag = self._second_diag(t, np.asarray(u0, float), np.asarray(d1, float), np.asarray(d2, float))
            return np.asarray(diag, float) * np.asarray(v, float)
        raise ValueError(
            f"family {self.name!r} does not define a second derivative B''"
        )

    def __repr__(self):
        return f"NonlinearFamily({self.name!r}, structure={self.structure!r})"


def diagonal_family(diag, derivative_diag=None, second_diag=None, name=""):
    """Family whose ``B(t, u)`` is the diagonal matrix ``diag(t, u)``.

    The derivative maps, when given, return the diagonal of the
    corresponding derivative operator, e.g. ``derivative_diag(t, u0, d)``
    is the diagonal of ``B'(u0)[d]``.
    """

    def apply(t, u, v):
        return np.asarray(diag(t, u), dtype=float) * v

    return NonlinearFamily(
        apply,
        structure="diagonal",
        diag=diag,
        derivative_diag=derivative_diag,
        second_diag=second_diag,
        name=name or "diagonal",
    )


def zero_family():
    """The identically-zero family (B == 0) with vanishing derivatives."""
    return diagonal_family(
        lambda t, u: np.zeros_like(u),
        derivative_diag=lambda t, u0, d: np.zeros_like(u0),
        second_diag=lambda t, u0, d1, d2: np.zeros_like(u0),
        name="zero",
    )


# ----------------------------------------------------------------------
# Module-level operations (validated entry points)
# ----------------------------------------------------------------------

def apply_linear(A, v):
    """Sparse matrix-vector product ``A v`` with an explicit size check."""
    v = np.asarray(v, dtype=float)
    if v.shape != (A.dim,):
        raise ValueError(
            f"operator of dimension {A.dim} cannot act on a vector of "
            f"length {v.size}"
        )
    return A.matvec(v)


def _check_compatible(F, t, u, vectors):
    u = _values(u)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite state entries passed to a nonlinear family")
    n = u.size
    out = [u]
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if v.size != n:
            raise ValueError(
                f"vector of length {v.size} incompatible with state of length {n}"
            )
        out.append(v)
    return out


def eval_B(F, t, u, v):
    """Evaluate ``B(t, u) v``."""
    u, v = _check_compatible(F, t, u, [v])
    return F.apply(t, u, v)


def eval_B_prime(F, t, u0, d, v):
    """Evaluate the directional derivative ``(B'(u0)[d]) v``."""
    u0, d, v = _check_compatible(F, t, u0, [d, v])
    return F.derivative_apply(t, u0, d, v)


def eval_B_second(F, t, u0, d1, d2, v):
    """Evaluate the second directional derivative ``(B''(u0)[d1, d2]) v``."""
    u0, d1, d2, v = _check_compatible(F, t, u0, [d1, d2, v])
    return F.second_apply(t, u0, d1, d2, v)
