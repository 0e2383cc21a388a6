"""Action of the matrix exponential, ``w = exp(tau*M) v``.

Two backends are provided.  The dense backend forms ``exp(tau*M)`` by
scaling-and-squaring (and memoizes the propagator per operator and step,
since time loops reuse the same ``tau``).  The iterative backend never
assembles the exponential: symmetric operators with a known spectral
interval use a Chebyshev polynomial expansion whose truncation tail is
bounded rigorously through scaled modified Bessel coefficients, and all
other operators fall back to an Arnoldi/Krylov projection with adaptive
sub-stepping and an a-posteriori error estimate.

All computations are pure per call; the only shared state is the dense
propagator memo, which is guarded by a lock.
"""

import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import ive

from .operators import LinearOperator

__all__ = [
    "ExpBackend",
    "ActionOperator",
    "ExpActionError",
    "ExpConvergenceError",
    "ExpOverflowError",
    "exp_action",
    "exp_dense",
]

DENSE_CAP = 2000

_cache_lock = threading.Lock()


class ExpActionError(RuntimeError):
    """Base error for exponential-action failures."""


class ExpConvergenceError(ExpActionError):
    """Iterative backend did not reach the tolerance within its budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class ExpOverflowError(ExpActionError):
    """The exponential overflowed for the requested ``tau * M``."""


@dataclass(frozen=True)
class ExpBackend:
    """Backend selection and accuracy knobs for :func:`exp_action`.

    ``kind`` is ``"dense"``, ``"iterative"``, or ``"auto"`` (dense up to
    ``dense_cap`` unknowns, iterative above).  ``tol`` is the relative
    accuracy target; ``max_terms`` caps polynomial degree respectively the
    Krylov matrix-vector budget.
    """

    kind: str = "auto"
    tol: float = 1e-10
    max_terms: int = 5000
    dense_cap: int = DENSE_CAP
    spectral_hint: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("auto", "dense", "iterative"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.tol <= 0:
            raise ValueError("backend tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_BACKEND = ExpBackend()


class ActionOperator:
    """Matrix-free operator defined by a matvec closure."""

    def __init__(self, matvec, dim, symmetric=False, spectral_hint=None):
        self._matvec = matvec
        self.dim = int(dim)
        self.symmetric = bool(symmetric)
        self.spectral_hint = spectral_hint

    def matvec(self, v):
        return self._matvec(v)

    def spectral_interval(self):
        return self.spectral_hint


def _as_operator(M):
    """Normalize supported operator inputs to a common protocol."""
    if isinstance(M, (LinearOperator, ActionOperator)):
        return M
    if sp.issparse(M) or isinstance(M, np.ndarray):
        return LinearOperator(M)
    if hasattr(M, "matvec") and hasattr(M, "dim"):
        return M
    raise TypeError(f"unsupported operator type {type(M)!r}")


def exp_dense(M, tau):
    """Full matrix exponential ``exp(tau*M)`` by scaling-and-squaring."""
    if isinstance(M, LinearOperator):
        M = M.toarray()
    elif sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if n > DENSE_CAP:
        raise ValueError(f"dense exponential limited to n <= {DENSE_CAP}, got {n}")
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    E = scipy.linalg.expm(tau * M)
    if not np.all(np.isfinite(E)):
        raise ExpOverflowError(
            f"exp(tau*M) overflowed for n={n}, tau={tau}, ||tau*M||_1="
            f"{abs(tau) * np.max(np.abs(M).sum(axis=0)):.3e}"
        )
    return E


def _dense_propagator(op, tau, dense_cap):
    """Memoized dense ``exp(tau*M)`` for assembled operators."""
    cache = getattr(op, "_expm_cache", None)
    if cache is None:
        return exp_dense(op.toarray(), tau)
    with _cache_lock:
        hit = cache.get(tau)
    if hit is not None:
        return hit
    E = exp_dense(op.toarray(), tau)
    with _cache_lock:
        if len(cache) >= 12:
            cache.pop(next(iter(cache)))
        cache[tau] = E
    return E


def exp_action(M, tau, v, backend=None):
    """Compute ``w = exp(tau*M) v`` to the backend's relative tolerance."""
    op = _as_operator(M)
    v = np.asarray(v, dtype=float)
    if v.shape != (op.dim,):
        raise ValueError(
            f"operator of dimension {op.dim} cannot act on a vector of length {v.size}"
        )
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    backend = backend or DEFAULT_BACKEND
    if tau == 0.0:
        return v.copy()

    kind = backend.kind
    if kind == "auto":
        kind = "dense" if (op.dim <= backend.dense_cap and hasattr(op, "toarray")) else "iterative"
    if kind == "dense":
        if op.dim > backend.dense_cap:
            raise ValueError(
                f"dense backend limited to n <= {backend.dense_cap}, got {op.dim}"
            )
        if not hasattr(op, "toarray"):
            raise ValueError("dense backend needs an assembled operator")
        return _dense_propagator(op, tau, backend.dense_cap).dot(v)

    interval = backend.spectral_hint
    if interval is None and hasattr(op, "spectral_interval"):
        interval = op.spectral_interval()
    if getattr(op, "symmetric", False) and interval is not None:
        return _chebyshev_exp_action(op, tau, v, interval, backend)
    return _arnoldi_exp_action(op, tau, v, backend)


# ----------------------------------------------------------------------
# Chebyshev backend (symmetric operators, spectrum inside a known interval)
# ----------------------------------------------------------------------

_CHEB_RHO_MAX = 8.0  # per-sweep scaled step; larger values lose digits to
                     # cancellation against the exp(|rho|) prefactor


def _chebyshev_exp_action(op, tau, v, interval, backend):
    a, b = float(interval[0]), float(interval[1])
    if b < a:
        a, b = b, a
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    if tau * center + abs(tau) * half > 700.0:
        raise ExpOverflowError(
            f"exp(tau*M) overflows: spectral abscissa bound tau*b = {tau * b:.3e}"
        )
    if half == 0.0:
        return np.exp(tau * center) * v
    n_sub = max(1, int(np.ceil(abs(tau) * half / _CHEB_RHO_MAX)))
    tau_s = tau / n_sub
    w = v
    for _ in range(n_sub):
        w = _chebyshev_sweep(op, tau_s, w, center, half, backend, n_sub)
    return w


def _chebyshev_sweep(op, tau, v, center, half, backend, n_sub):
    rho = tau * half
    log_pref = tau * center + abs(rho)
    # Scaled expansion coefficients exp(rho*x) = sum_k c_k T_k(x) on [-1, 1];
    # the tail must undercut tol even for the worst-aligned vector, whose
    # result norm can be as small as exp(min(tau*a, tau*b)) * ||v||.
    threshold = 0.5 * backend.tol * np.exp(-2.0 * abs(rho)) / n_sub
    kmax = min(backend.max_terms, int(abs(rho) + 14.0 * np.sqrt(abs(rho) + 4.0) + 120))
    ks = np.arange(kmax + 1)
    coef = ive(ks, rho)
    coef[1:] *= 2.0
    mags = np.abs(coef)
    tail = np.cumsum(mags[::-1])[::-1]
    ok = np.nonzero(tail <= threshold)[0]
    if ok.size == 0:
        if kmax >= backend.max_terms:
            raise ExpConvergenceError(
                f"Chebyshev expansion needs more than max_terms={backend.max_terms} terms",
                residual=float(tail[-1] * np.exp(2.0 * abs(rho))),
            )
        degree = kmax
    else:
        degree = max(int(ok[0]) - 1, 1)

    inv_half = 1.0 / half

    def smul(x):
        return (op.matvec(x) - center * x) * inv_half

    t_prev = v
    t_cur = smul(v)
    w = coef[0] * t_prev + coef[1] * t_cur
    for k in range(2, degree + 1):
        t_next = 2.0 * smul(t_cur) - t_prev
        w += coef[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return np.exp(log_pref) * w


# ----------------------------------------------------------------------
# Arnoldi/Krylov backend with adaptive sub-stepping
# ----------------------------------------------------------------------

def _arnoldi_basis(op, w, m):
    """Arnoldi decomposition of size up to ``m`` started from ``w``.

    Returns (V, H, j, breakdown) with V of shape (n, j+1) columns built and
    H of shape (j+1, j); ``breakdown`` marks an invariant subspace.
    """
    n = w.size
    m = min(m, n)
    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    beta = np.linalg.norm(w)
    V[:, 0] = w / beta
    for j in range(m):
        p = op.matvec(V[:, j])
        # modified Gram-Schmidt with one reorthogonalization pass
        for _ in range(2):
            for i in range(j + 1):
                hij = np.dot(V[:, i], p)
                H[i, j] += hij
                p -= hij * V[:, i]
        hnext = np.linalg.norm(p)
        H[j + 1, j] = hnext
        if hnext < 1e-14 * max(1.0, np.abs(H[: j + 1, j]).max()):
            return V, H, j + 1, True
        V[:, j + 1] = p / hnext
    return V, H, m, False


def _arnoldi_exp_action(op, tau, v, backend):
    tol = backend.tol
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return np.zeros_like(v)
    m = min(op.dim, 36, max(2, backend.max_terms))
    w = v.copy()
    done = 0.0  # completed fraction of tau
    theta = 1.0
    matvecs = 0
    last_err = 0.0
    while done < 1.0:
        beta = np.linalg.norm(w)
        if beta == 0.0:
            return w
        if matvecs + m > backend.max_terms and matvecs > 0:
            raise ExpConvergenceError(
                f"Krylov backend exceeded max_terms={backend.max_terms} matvecs",
                residual=float(last_err),
            )
        V, H, j, breakdown = _arnoldi_basis(op, w, m)
        matvecs += j
        Hj = H[:j, :j]
        av_norm = 0.0 if breakdown else np.linalg.norm(op.matvec(V[:, j]))
        theta = min(theta, 1.0 - done)
        while True:
            dt = theta * tau
            if breakdown:
                F = scipy.linalg.expm(dt * Hj)
                err = 0.0
            else:
                # augmented exponential returns exp(dt*H) e1 together with
                # the phi1/phi2 columns of the truncation-error series
                aug = np.zeros((j + 2, j + 2))
                aug[:j, :j] = dt * Hj
                aug[0, j] = dt
                aug[j, j + 1] = dt
                F = scipy.linalg.expm(aug)
                err1 = beta * H[j, j - 1] * abs(F[j - 1, j])
                err2 = beta * H[j, j - 1] * abs(F[j - 1, j + 1]) * av_norm
                if err1 > 10.0 * err2:
                    err = err2
                elif err2 > err1:
                    err = err1
                else:
                    err = err1 * err2 / (err1 - err2) if err1 > err2 else err1
            w_try = beta * V[:, :j].dot(F[:j, 0])
            finite = bool(np.all(np.isfinite(w_try)))
            target = 0.5 * tol * max(theta, 0.1) * max(np.linalg.norm(w_try), 1e-300)
            if finite and (breakdown or err <= target):
                break
            last_err = err if finite else last_err
            theta *= 0.5
            if theta < 1e-8:
                if not finite:
                    raise ExpOverflowError(
                        f"exp(tau*M) overflowed in the Krylov backend at tau={tau}"
                    )
                raise ExpConvergenceError(
                    "Krylov sub-stepping stalled below the minimum step fraction",
                    residual=float(err),
                )
        w = w_try
        last_err = err
        done += theta
        theta = min(theta * 1.5, 1.0)
    return w
