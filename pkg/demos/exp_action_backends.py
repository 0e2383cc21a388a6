"""Accuracy and cost of the exponential-action backends.

Compares the memoized dense propagator, the Chebyshev polynomial backend
(symmetric operators with a spectral interval), and the Arnoldi/Krylov
backend on discrete diffusion-reaction operators of growing size.  The
dense path wins for small repeated steps; the polynomial backends never
assemble exp(tau*A) and scale to the 2-d/3-d grids.
"""

import time

import numpy as np

from magsplit import ExpBackend, exp_action, exp_dense
from magsplit.problems import fisher_problem_1d, fisher_problem_2d

ITER = ExpBackend(kind="iterative")


def bench(op, tau, v):
    rows = []
    reference = None
    if op.dim <= 1500:
        tic = time.perf_counter()
        reference = exp_dense(op.toarray(), tau) @ v
        rows.append(("dense expm (cold)", time.perf_counter() - tic, "rel err 0"))
        tic = time.perf_counter()
        exp_action(op, tau, v)  # memoized propagator path
        rows.append(("dense memoized", time.perf_counter() - tic, "rel err 0"))
    tic = time.perf_counter()
    it = exp_action(op, tau, v, ITER)
    t_iter = time.perf_counter() - tic
    if reference is not None:
        quality = (f"rel err vs dense "
                   f"{np.linalg.norm(it - reference) / np.linalg.norm(reference):.2e}")
    else:
        half = exp_action(op, tau / 2, exp_action(op, tau / 2, v, ITER), ITER)
        quality = (f"semigroup defect "
                   f"{np.linalg.norm(it - half) / np.linalg.norm(it):.2e}")
    kind = "chebyshev" if op.symmetric and op.spectral_interval() else "krylov"
    rows.append((f"iterative ({kind})", t_iter, quality))
    return rows


def main():
    rng = np.random.default_rng(0)

    print("1-d diffusion-reaction operator (n = 199), tau = 0.01")
    prob = fisher_problem_1d()
    v = rng.standard_normal(prob.grid.n)
    for name, seconds, quality in bench(prob.A, 0.01, v):
        print(f"  {name:<22} {seconds * 1e3:9.2f} ms   {quality}")

    print("\n2-d operator at the benchmark grid (n = 6241), tau = 0.01")
    prob2 = fisher_problem_2d()
    v2 = rng.standard_normal(prob2.grid.n)
    for name, seconds, quality in bench(prob2.A, 0.01, v2):
        print(f"  {name:<22} {seconds * 1e3:9.2f} ms   {quality}")

    print("\n2-d operator on a refined grid (n = 101761), tau = 0.01")
    prob2f = fisher_problem_2d(dx=0.0125)
    v2f = rng.standard_normal(prob2f.grid.n)
    tic = time.perf_counter()
    w1 = exp_action(prob2f.A, 0.01, v2f, ITER)
    t1 = time.perf_counter() - tic
    # semigroup check in place of the (infeasible) dense reference
    w2 = exp_action(prob2f.A, 0.005, exp_action(prob2f.A, 0.005, v2f, ITER), ITER)
    print(f"  chebyshev              {t1 * 1e3:9.2f} ms   semigroup defect "
          f"{np.linalg.norm(w1 - w2) / np.linalg.norm(w1):.2e}")
    print(f"  spectral interval used: {prob2f.A.spectral_interval()}")


if __name__ == "__main__":
    main()
