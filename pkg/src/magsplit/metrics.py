"""Error norms, in-time aggregation, refined-grid comparison, convergence rates."""

from dataclasses import dataclass, field

import numpy as np

from .operators import Grid, StateVector

__all__ = [
    "NORMS",
    "TIME_MODES",
    "ErrorReport",
    "spatial_error",
    "time_aggregate",
    "restrict_to_coarse",
    "refined_reference_error",
    "convergence_rate",
]

NORMS = ("l1", "l2", "linf")
TIME_MODES = ("linf", "l2", "l2_weighted")


@dataclass
class ErrorReport:
    """Per-time spatial errors plus their in-time aggregate for one run."""

    norm: str
    relative: bool
    times: np.ndarray
    values: np.ndarray
    aggregate: float
    metadata: dict = field(default_factory=dict)


def _as_values_and_grid(u, grid):
    if isinstance(u, StateVector):
        return u.values, u.grid
    if grid is None:
        raise ValueError("bare arrays need an explicit grid for weighted norms")
    return np.asarray(u, dtype=float), grid


def _cell_measure(grid):
    if grid.dimension == 0:
        return 1.0
    return float(np.prod(grid.spacings))


def _norm_of(e, norm, measure):
    if norm == "l1":
        return measure * float(np.sum(np.abs(e)))
    if norm == "l2":
        return float(np.sqrt(measure * np.sum(e ** 2)))
    if norm == "linf":
        return float(np.max(np.abs(e))) if e.size else 0.0
    raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")


def spatial_error(u_num, u_ref, norm="l2", relative=False, grid=None):
    """Grid-weighted error norm between two fields on the same grid.

    ``l1 = h^d sum|e|``, ``l2 = sqrt(h^d sum e^2)``, ``linf = max|e|``
    with ``h^d`` the cell measure (1 for ODE systems).  Relative variants
    divide by the same norm of the reference field.
    """
    num, g1 = _as_values_and_grid(u_num, grid)
    ref, g2 = _as_values_and_grid(u_ref, grid)
    if g1 != g2:
        raise ValueError("fields live on different grids")
    if num.shape != ref.shape:
        raise ValueError(f"field lengths differ: {num.size} vs {ref.size}")
    measure = _cell_measure(g1)
    err = _norm_of(num - ref, norm, measure)
    if not relative:
        return err
    denom = _norm_of(ref, norm, measure)
    if denom == 0.0:
        raise ValueError("relative error undefined: reference norm is zero")
    return err / denom


def time_aggregate(errors, mode="l2", dt=None):
    """Collapse a per-step error sequence to a single in-time value.

    ``"linf"`` takes the maximum, ``"l2"`` the unweighted root sum of
    squares (the convention of the scalar benchmark tables, where the
    aggregate of a step-count-independent error grows by sqrt(2) per step
    halving), and ``"l2_weighted"`` scales by ``sqrt(dt)``.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("cannot aggregate an empty error sequence")
    if mode == "linf":
        return float(np.max(errors))
    if mode == "l2":
        return float(np.sqrt(np.sum(errors ** 2)))
    if mode == "l2_weighted":
        if dt is None:
            raise ValueError("l2_weighted aggregation needs dt")
        return float(np.sqrt(dt * np.sum(errors ** 2)))
    raise ValueError(f"unknown time mode {mode!r}; expected one of {TIME_MODES}")


def restrict_to_coarse(u_fine, coarse_grid):
    """Sample a fine-grid field at the nodes of a nested coarser grid.

    Requires equal bounds and an integer spacing ratio per axis so that
    every coarse node coincides with a fine node (no interpolation).
    """
    if not isinstance(u_fine, StateVector):
        raise ValueError("restriction needs a StateVector (grid metadata)")
    fine = u_fine.grid
    if fine.dimension != coarse_grid.dimension or fine.dimension == 0:
        raise ValueError("restriction needs matching spatial grids")
    ratios = []
    for ax in range(fine.dimension):
        if fine.bounds[ax] != coarse_grid.bounds[ax]:
            raise ValueError(
                f"grids are not nested: bounds differ on axis {ax}: "
                f"{fine.bounds[ax]} vs {coarse_grid.bounds[ax]}"
            )
        ratio = coarse_grid.spacings[ax] / fine.spacings[ax]
        r = round(ratio)
        if r < 1 or abs(ratio - r) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"grids are not nested: spacing ratio {ratio} on axis {ax}"
            )
        ratios.append(r)
    shape = tuple(reversed(fine.counts))  # (z, y, x) storage order
    arr = u_fine.values.reshape(shape)
    slices = tuple(slice(r - 1, None, r) for r in reversed(ratios))
    coarse_values = arr[slices].ravel()
    return StateVector(coarse_values, coarse_grid, u_fine.time)


def refined_reference_error(u_coarse, u_fine, norm="l2", relative=False):
    """Error of a coarse solution against a refined-grid reference.

    The fine solution is restricted to the coarse nodes by exact index
    mapping first; the norm is then evaluated on the coarse grid.
    """
    if not isinstance(u_coarse, StateVector):
        raise ValueError("refined comparison needs StateVector inputs")
    restricted = restrict_to_coarse(u_fine, u_coarse.grid)
    return spatial_error(u_coarse, restricted, norm=norm, relative=relative)


def convergence_rate(e_coarse, e_fine):
    """Observed order from one step halving: ``log(e_fine/e_coarse)/log(1/2)``."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError(
            f"convergence rate needs positive errors, got ({e_coarse}, {e_fine})"
        )
    return float(np.log(e_fine / e_coarse) / np.log(0.5))
