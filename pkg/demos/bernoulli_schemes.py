"""Solve the scalar Bernoulli benchmark with every scheme and compare.

The problem is u' = lam1*u + lam2*u^2 with u(0) = 1, split into the
linear part A u = lam1*u and the nonlinear family B(u)u = lam2*u*u.
Each scheme integrates to T = 1 and is measured against the closed-form
solution, both pointwise at the endpoint and through the in-time error
aggregates used by the benchmark tables.
"""

import numpy as np

from magsplit import bernoulli_exact, bernoulli_problem
from magsplit.harness import benchmark_schemes
from magsplit.integrators import integrate
from magsplit.metrics import time_aggregate

LAM1, LAM2, T, DT = -1.0, -10.0, 1.0, 0.01


def main():
    prob = bernoulli_problem(LAM1, LAM2, 2)
    print(f"Bernoulli benchmark: lam1={LAM1}, lam2={LAM2}, T={T}, dt={DT}")
    print(f"exact endpoint value u(T) = {bernoulli_exact(T, LAM1, LAM2, 2):.6f}\n")
    header = f"{'scheme':<28}{'endpoint err':>14}{'l2 in time':>14}{'linf in time':>14}"
    print(header)
    print("-" * len(header))

    curves = {}
    for cfg in benchmark_schemes():
        errs = []
        integrate(
            prob, prob.initial, 0.0, T, DT, cfg,
            observer=lambda n, t, v, errs=errs: errs.append(
                abs(v[0] - bernoulli_exact(t, LAM1, LAM2, 2))
            ),
        )
        label = cfg.scheme + (f" [{cfg.magnus_order}]" if cfg.magnus_order else "")
        curves[label] = errs
        print(f"{label:<28}{errs[-1]:>14.3e}"
              f"{time_aggregate(errs, 'l2'):>14.3e}"
              f"{time_aggregate(errs, 'linf'):>14.3e}")

    print(
        "\nThe [2-midpoint-literal] rows use the degenerate midpoint kernel "
        "that effectively\nskips the nonlinear subflow: their pointwise error "
        "never shrinks with dt, which is\nexactly the stagnation signature of "
        "the non-convergent splitting benchmark rows."
    )

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return
    ts = np.arange(1, int(T / DT) + 1) * DT
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, errs in curves.items():
        ax.semilogy(ts, errs, label=label, lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("|u_num - u_exact|")
    ax.set_title(f"pointwise error, lam2={LAM2}, dt={DT}")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig("bernoulli_scheme_errors.png", dpi=130)
    print("\nwrote bernoulli_scheme_errors.png")


if __name__ == "__main__":
    main()
