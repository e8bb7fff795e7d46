"""Command-line entry points.

Subcommands: ``run`` (grid experiment from a JSON config), ``calibrate-g``
(gradient-scale measurement), ``verify-theory`` (constants and bound checks
on synthetic problems), ``convert`` (dense CSV to LIBSVM text).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np


def _cmd_run(args) -> int:
    from .harness import load_config, run_grid, summarize_best

    config = load_config(args.config)
    results = run_grid(config)
    best = max(results, key=lambda r: r.mean_metric) if config.model != "mlp_regressor" \
        else min(results, key=lambda r: r.mean_metric)
    print(f"ran {len(results)} cells x {config.reps} reps ({config.algorithm})")
    print(f"best cell: alpha={best.alpha:.4g} gamma1={best.gamma1:.4g} "
          f"gamma2={best.gamma2:.4g} mean_metric={best.mean_metric:.6g} "
          f"mean_final_batch={best.mean_final_batch:.1f}")
    if config.output_dir:
        print(f"artifacts written under {config.output_dir}")
    return 0


def _cmd_calibrate_g(args) -> int:
    from .harness import ExperimentConfig, compute_G, load_problem

    kwargs = dict(model=args.model, algorithm="sg", seed=args.seed)
    if args.model == "mlp_regressor":
        kwargs.update(data_path=args.dataset, normalize=args.normalize,
                      train_fraction=args.train_fraction)
    else:
        kwargs.update(train_path=args.dataset, test_path=args.dataset,
                      positive_label=args.positive_label)
    problem, _, _ = load_problem(ExperimentConfig(**kwargs))
    G = compute_G(problem, np.random.default_rng(args.seed))
    print(f"G = {G:.6g}  (N={problem.N}, n={problem.n}, seed={args.seed})")
    return 0


def _verify_lemma1(seed: int) -> bool:
    from .optimizer import HyperParams
    from .theory import SyntheticQuadratic, stepsize_bounds, verify_lemma1

    rng = np.random.default_rng(seed)
    problem = SyntheticQuadratic(diag=[0.5, 1.0, 2.0],
                                 offsets=rng.normal(size=(6, 3)))
    violations = 0
    trials = 200
    for _ in range(trials):
        x = rng.normal(scale=2.0, size=3)
        g1 = rng.uniform(1.0, 5.0)
        g2 = g1 * rng.uniform(0.2, 0.9)
        alpha = 0.9 * stepsize_bounds(g1, g2, problem.lipschitz).base
        params = HyperParams(alpha=alpha, gamma1=g1, gamma2=g2)
        report = verify_lemma1(problem, x, params, batch_size=2,
                               L=problem.lipschitz)
        if not report.holds:
            violations += 1
    ok = violations == 0
    print(f"expected-decrease check: {trials} random points/parameters, "
          f"{violations} violations -> {'PASS' if ok else 'FAIL'}")
    return ok


def _verify_thm2(seed: int) -> bool:
    from .optimizer import HyperParams
    from .theory import SyntheticQuadratic, verify_theorem_gap

    rng = np.random.default_rng(seed)
    problem = SyntheticQuadratic(
        diag=[0.5, 1.0],
        offsets=0.1 * np.random.default_rng(7).normal(size=(8, 2)))
    params = HyperParams(alpha=0.1, gamma1=2.0, gamma2=1.0)
    report = verify_theorem_gap(problem, params, batch_size=2,
                                horizon_iters=2000, reps=50, rng=rng)
    print(f"plateau check: mean gap {report.mean_gap:.3e} "
          f"(+/- {report.std_error:.1e}) vs bound {report.bound:.3e} "
          f"-> {'PASS' if report.satisfied else 'FAIL'}")
    return report.satisfied


def _verify_thm3(seed: int) -> bool:
    from .optimizer import HyperParams, run_trish
    from .theory import SyntheticQuadratic, gradient_moments, stepsize_bounds

    rng = np.random.default_rng(seed)
    problem = SyntheticQuadratic(diag=[0.5, 1.0],
                                 scales=1.0 + 0.1 * np.linspace(-1, 1, 8))
    moments = gradient_moments(problem, np.ones(2), batch_size=2)
    M2 = moments.e_g_sq / float(moments.grad @ moments.grad)
    bounds = stepsize_bounds(1.1, 1.0, problem.lipschitz,
                             mu=problem.pl_constant, M2=M2)
    params = HyperParams(alpha=0.9 * bounds.zero_noise_pl, gamma1=1.1, gamma2=1.0)
    x_final, _ = run_trish(problem, np.ones(2), params, batch_size=2,
                           budget_epochs=2000 * 2 / 8, rng=rng)
    gap = problem.loss(x_final)
    ok = bool(bounds.ratio_ok) and gap < 1e-8
    print(f"vanishing-gap check: gamma ratio ok={bounds.ratio_ok}, "
          f"final gap {gap:.3e} -> {'PASS' if ok else 'FAIL'}")
    return ok


def _cmd_verify_theory(args) -> int:
    checks = {"lemma1": _verify_lemma1, "thm2": _verify_thm2, "thm3": _verify_thm3}
    selected = [args.module] if args.module else list(checks)
    ok = all(checks[name](args.seed) for name in selected)
    return 0 if ok else 1


def _cmd_convert(args) -> int:
    from .data import csv_to_libsvm

    with open(args.csv) as src, open(args.libsvm, "w") as dst:
        rows = csv_to_libsvm(src, dst, label_col=args.label_col,
                             missing_value=args.missing_value,
                             has_header=args.header, delimiter=args.delimiter)
    print(f"wrote {rows} rows to {args.libsvm}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trish",
        description="Step-normalized stochastic optimization with adaptive batch sizing")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a grid experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_run)

    p_cal = sub.add_parser("calibrate-g", help="measure the SG gradient scale G")
    p_cal.add_argument("--dataset", required=True)
    p_cal.add_argument("--model", default="logistic",
                       choices=("logistic", "mlp_classifier", "mlp_regressor"))
    p_cal.add_argument("--seed", type=int, default=0)
    p_cal.add_argument("--positive-label", type=float, default=None)
    p_cal.add_argument("--normalize", action="store_true")
    p_cal.add_argument("--train-fraction", type=float, default=0.7)
    p_cal.set_defaults(func=_cmd_calibrate_g)

    p_ver = sub.add_parser("verify-theory", help="check constants and bounds empirically")
    p_ver.add_argument("--module", choices=("lemma1", "thm2", "thm3"), default=None)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(func=_cmd_verify_theory)

    p_conv = sub.add_parser("convert", help="convert dense CSV to LIBSVM text")
    p_conv.add_argument("--csv", required=True)
    p_conv.add_argument("--libsvm", required=True)
    p_conv.add_argument("--label-col", type=int, default=0)
    p_conv.add_argument("--missing-value", type=float, default=None)
    p_conv.add_argument("--header", action="store_true")
    p_conv.add_argument("--delimiter", default=",")
    p_conv.set_defaults(func=_cmd_convert)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
