"""Command-line entry point.

Subcommands:

* ``run <config.toml>`` -- execute the experiments in a config file and
  write one CSV per experiment into the output directory.
* ``tables``            -- built-in scalar benchmark sweep (table1/2/3.csv).
* ``figures``           -- built-in plot-data files for the benchmark figures.
* ``selftest``          -- quick numerical property checks (desk scale).

Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.
The output directory comes from ``--out``, else the ``MAGSPLIT_OUT``
environment variable, else ``./out``.
"""

import argparse
import sys

import numpy as np

from . import harness
from .expaction import ExpActionError, ExpBackend
from .harness import ConfigError, resolve_out_dir
from .integrators import BlowUpError


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser():
    parser = _Parser(prog="magsplit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")
    for name, help_text in (
        ("run", "run experiments from a TOML config file"),
        ("tables", "run the built-in benchmark table sweep"),
        ("figures", "emit the built-in benchmark figure data"),
        ("selftest", "run quick numerical property checks"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None, help="worker thread count")
        p.add_argument("--tol", type=float, default=None,
                       help="exponential-action relative tolerance")
        if name == "run":
            p.add_argument("config", help="path to the TOML experiment file")
    return parser


def _cmd_run(args):
    configs = harness.load_config(args.config)
    out_dir = resolve_out_dir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for cfg in configs:
        if args.workers is not None:
            cfg.workers = args.workers
        if args.tol is not None:
            cfg.tol = args.tol
        result = harness.run_experiment(cfg)
        target = out_dir if cfg.out is None else resolve_out_dir(cfg.out)
        target.mkdir(parents=True, exist_ok=True)
        path = harness.emit_csv(result, target / f"{harness._slug(cfg.name)}.csv")
        print(f"wrote {path} ({len(result.rows)} rows)")
    return 0


def _cmd_tables(args):
    out_dir = resolve_out_dir(args.out)
    paths = harness.run_tables(out_dir, workers=args.workers or 1,
                               tol=args.tol or 1e-10)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_figures(args):
    out_dir = resolve_out_dir(args.out)
    paths = harness.run_figures(out_dir, workers=args.workers or 1,
                                tol=args.tol or 1e-10)
    print(f"wrote {len(paths)} files under {out_dir}")
    return 0


# ----------------------------------------------------------------------
# selftest
# ----------------------------------------------------------------------

def _selftest_checks(tol):
    from scipy.integrate import solve_ivp

    from .expaction import exp_action, exp_dense
    from .integrators import SchemeConfig, integrate, stepper_for
    from .magnus import omega1, omega2_trapezoid, magnus_propagate
    from .metrics import convergence_rate, spatial_error
    from .operators import LinearOperator, zero_family
    from .problems import Problem, bernoulli_problem, fisher_problem_1d
    import scipy.sparse as sp

    backend = ExpBackend(tol=tol)

    def check_metric_rates():
        std = [0.260, 0.160, 0.106, 0.073]
        multi = [0.087, 0.026, 0.008, 0.003]
        r_std = [convergence_rate(a, b) for a, b in zip(std, std[1:])]
        r_multi = [convergence_rate(a, b) for a, b in zip(multi, multi[1:])]
        ok = np.allclose(r_std, [0.700, 0.594, 0.538], atol=2e-3)
        ok &= np.allclose(r_multi, [1.74, 1.70, 1.42], atol=2e-2)
        return ok, f"std {np.round(r_std, 3)}, multi {np.round(r_multi, 3)}"

    def check_exp_action():
        rng = np.random.default_rng(7)
        worst = 0.0
        for k in range(20):
            n = int(rng.integers(20, 120))
            dens = sp.random(n, n, density=0.1, random_state=np.random.RandomState(k))
            mat = dens + dens.T if k % 2 == 0 else dens
            op = LinearOperator(mat * 3.0, symmetric=(k % 2 == 0))
            v = rng.standard_normal(n)
            ref = exp_dense(op.toarray(), 0.37) @ v
            it = exp_action(op, 0.37, v, ExpBackend(kind="iterative", tol=tol))
            worst = max(worst, np.linalg.norm(it - ref) / np.linalg.norm(ref))
        return worst < 1e-9, f"worst dense-oracle mismatch {worst:.2e}"

    def check_magnus_orders():
        from .operators import diagonal_family
        fam = diagonal_family(lambda t, u: -u, lambda t, u0, d: -d, name="neg")
        errs1, errs2 = [], []
        for dt in (0.02, 0.01, 0.005, 0.0025):
            exact = 1.0 / (1.0 + dt)
            u0 = np.array([1.0])
            errs1.append(abs(magnus_propagate(omega1(fam, 0, dt, u0), u0)[0] - exact))
            errs2.append(abs(magnus_propagate(omega2_trapezoid(fam, 0, dt, u0), u0)[0] - exact))
        p1 = np.log(errs1[0] / errs1[-1]) / np.log(8)
        p2 = np.log(errs2[0] / errs2[-1]) / np.log(8)
        return (abs(p1 - 2) < 0.3 and abs(p2 - 3) < 0.3), f"local orders {p1:.2f}, {p2:.2f}"

    def check_reductions():
        fisher = fisher_problem_1d()
        bare = Problem(name="lin", grid=fisher.grid, A=fisher.A, B=zero_family(),
                       initial=fisher.initial)
        dt = 0.01
        ref = exp_dense(fisher.A.toarray(), dt) @ fisher.initial
        worst = 0.0
        for scheme in ("ab", "ba", "strang", "successive_standard", "multiscale_a"):
            out = stepper_for(scheme)(bare, bare.initial, 0.0, dt,
                                      SchemeConfig(scheme=scheme), backend)
            worst = max(worst, np.linalg.norm(out - ref) / np.linalg.norm(ref))
        return worst < 1e-9, f"worst A-flow reduction error {worst:.2e}"

    def check_global_orders():
        prob = bernoulli_problem(-1.0, -2.0, 2)
        sol = solve_ivp(lambda t, y: -y - 2 * y ** 2, [0, 1], [1.0], method="DOP853",
                        rtol=1e-12, atol=1e-14)
        u_T = sol.y[0, -1]
        orders = {}
        for scheme in ("ab", "ba", "strang"):
            errs = []
            for dt in (0.02, 0.01, 0.005):
                traj = integrate(prob, prob.initial, 0.0, 1.0, dt,
                                 SchemeConfig(scheme=scheme), backend=backend)
                errs.append(abs(traj.final.values[0] - u_T))
            orders[scheme] = np.log(errs[0] / errs[-1]) / np.log(4)
        ok = (abs(orders["ab"] - 1) < 0.3 and abs(orders["ba"] - 1) < 0.3
              and abs(orders["strang"] - 2) < 0.3)
        return ok, ", ".join(f"{k}={v:.2f}" for k, v in orders.items())

    def check_derivatives():
        prob = bernoulli_problem(-1.0, -2.0, 4)
        F = prob.B
        u0 = np.array([0.8])
        d = np.array([0.7])
        v = np.array([1.3])
        errs = []
        for h in (1e-3, 1e-4):
            fd = (F.apply(0, u0 + h * d, v) - F.apply(0, u0 - h * d, v)) / (2 * h)
            errs.append(abs(fd[0] - F.derivative_apply(0, u0, d, v)[0]))
        order = np.log(errs[0] / errs[1]) / np.log(10)
        return order > 1.9, f"central-difference order {order:.2f}"

    def check_fisher_quick():
        prob = fisher_problem_1d()
        fine = integrate(prob, prob.initial, 0.0, 0.2, 0.01 / 16,
                         SchemeConfig(scheme="strang"), backend=backend, keep_states=False)
        worst = 0.0
        for scheme in ("ab", "ba", "strang", "successive_standard",
                       "multiscale_a", "multiscale_b"):
            traj = integrate(prob, prob.initial, 0.0, 0.2, 0.01,
                             SchemeConfig(scheme=scheme), backend=backend, keep_states=False)
            worst = max(worst, spatial_error(traj.final, fine.final, "l2"))
        return worst < 5e-3, f"worst distance to fine oracle {worst:.2e}"

    return [
        ("metric-rates", check_metric_rates),
        ("exp-action-oracle", check_exp_action),
        ("magnus-local-orders", check_magnus_orders),
        ("scheme-reductions", check_reductions),
        ("scheme-global-orders", check_global_orders),
        ("derivative-consistency", check_derivatives),
        ("fisher1d-quick", check_fisher_quick),
    ]


def _cmd_selftest(args):
    failures = 0
    for name, check in _selftest_checks(args.tol or 1e-10):
        try:
            ok, detail = check()
        except Exception as exc:  # a crashed check is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 2
    print("selftest: all checks passed")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handlers = {
        "run": _cmd_run,
        "tables": _cmd_tables,
        "figures": _cmd_figures,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except (BlowUpError, ExpActionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
