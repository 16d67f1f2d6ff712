"""Command-line interface: threshold, verify, experiment, sweep.

``threshold`` prints the derived constants and measurement threshold for a
parameter triple.  ``verify`` runs one of the named property suites and
exits nonzero on failure.  ``experiment`` and ``sweep`` produce
machine-readable result files; a run is reproducible from its flags and
seed alone.  Flags override values from an optional JSON config file
passed with ``--config``; nothing is read from the environment.
"""

import argparse
import json
import math
import sys

import numpy as np

from .bounds import gram_exp_check, measurement_budget, measurement_threshold
from .divergence import (GaussianMixture, StandardNormal, chi2_mixture_exact,
                         chi2_monte_carlo, log1p_chi2_mixture,
                         mixture_from_sketch, tv_monte_carlo,
                         tv_upper_from_log1p_chi2)
from .experiment import (ExperimentConfig, result_to_csv, result_to_json,
                         run_experiment, write_result)
from .hard_instance import (TruncationFailure, derive_params,
                            event_probability_mc)
from .rng import substream
from .sketch_linalg import (gram_frobenius_total, make_orthonormal_sketch,
                            small_column_set)

VERIFY_KINDS = ("frobenius", "chi2", "events", "gram-exp", "dpi")


def cmd_threshold(args) -> int:
    params = derive_params(args.n, args.p, args.eps)
    budget = measurement_budget(params.n, params.p, params.eps)
    print(f"n                    = {params.n}")
    print(f"p                    = {params.p}")
    print(f"eps                  = {params.eps}")
    print(f"gaussian abs moment  = {params.abs_moment!r}")
    print(f"cutoff               = {params.cutoff!r}")
    print(f"spike coefficient    = {params.spike_coeff!r}")
    print(f"spike                = {params.spike!r}")
    print(f"measurement budget   = {budget!r}")
    print(f"measurement threshold= {measurement_threshold(params.n, params.p, params.eps)}")
    return 0


def _report(checks) -> int:
    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    total = len(checks)
    print(f"{total - failures}/{total} checks passed")
    return 0 if failures == 0 else 1


def _verify_frobenius(args):
    checks = []
    rng = substream(args.seed, "verify-frobenius")
    for i in range(20):
        n = int(2 ** rng.uniform(4, math.log2(min(args.n, 4096))))
        m = int(2 ** rng.uniform(0, math.log2(n)))
        sketch = make_orthonormal_sketch(m, n, args.seed + i)
        total = gram_frobenius_total(sketch)
        err = abs(total - m)
        checks.append((f"frobenius m={m} n={n}", err <= 1e-6 * m,
                       f"|sum of squared gram entries - m| = {err:.3e}"))
        cset = small_column_set(sketch)
        checks.append((f"column-set m={m} n={n}", 100 * cset.complement_size < n,
                       f"complement size {cset.complement_size} < n/100"))
    return checks


def _verify_chi2(args):
    checks = []
    rng = substream(args.seed, "verify-chi2")
    for q in (0.25, 1.0, 4.0):
        mu = np.zeros((1, 3))
        mu[0, 0] = math.sqrt(q)
        got = chi2_mixture_exact(GaussianMixture(mu))
        want = math.expm1(q)
        rel = abs(got - want) / want
        checks.append((f"single-mean |mu|^2={q}", rel <= 1e-10,
                       f"relative error {rel:.3e} against expm1"))
    for i in range(10):
        dim = int(rng.integers(1, 9))
        k = int(rng.integers(1, 33))
        means = rng.standard_normal((k, dim))
        norms = np.linalg.norm(means, axis=1)
        means[norms > 2.0] *= (2.0 / norms[norms > 2.0])[:, None]
        mix = GaussianMixture(means)
        exact = chi2_mixture_exact(mix)
        mc, se = chi2_monte_carlo(mix, max(args.trials, 1000), rng)
        ok = abs(exact - mc) <= 3.0 * se + 1e-12
        checks.append((f"mc-oracle dim={dim} k={k}", ok,
                       f"exact {exact:.5f} vs mc {mc:.5f} (3se = {3 * se:.5f})"))
    return checks


def _verify_events(args):
    params = derive_params(args.n, args.p, args.eps)
    rng = substream(args.seed, "verify-events")
    checks = []
    for event in TruncationFailure:
        est, se = event_probability_mc(params, event, args.trials, rng)
        checks.append((f"event {event.value}", est <= 0.01,
                       f"failure rate {est:.5f} (se {se:.5f}) <= 1/100"))
    return checks


def _verify_gram_exp(args):
    checks = []
    # log-domain evaluation against direct summation at small n
    rng = substream(args.seed, "verify-gram-exp")
    for i in range(5):
        n = int(rng.integers(16, 65))
        m = int(rng.integers(1, 4))
        params = derive_params(n, 16.0)
        sketch = make_orthonormal_sketch(m, n, args.seed + 100 + i)
        cset = small_column_set(sketch)
        cols = sketch.entries[:, cset.indices]
        scale = params.spike_coeff ** 2 * float(n) ** (2.0 / params.p)
        naive = float(np.exp(scale * (cols.T @ cols)).mean())
        got = gram_exp_check(sketch, params)
        rel = abs(got.lhs - naive) / naive
        checks.append((f"naive-oracle n={n} m={m}", rel <= 1e-9,
                       f"log-domain vs direct summation relative error {rel:.3e}"))
    # inequality in its stated regime
    for p, n in ((32.0, 2 ** 14), (64.0, 2 ** 14)):
        params = derive_params(n, p, 0.9 * (1 - 2 / p))
        sketch = make_orthonormal_sketch(1, n, args.seed + 7)
        got = gram_exp_check(sketch, params)
        checks.append(
            (f"inequality p={p} n={n} m=1", got.preconditions_met and got.holds,
             f"lhs {got.lhs:.6f} <= rhs {got.rhs:.6f}, preconditions {got.preconditions_met}"))
    return checks


def _verify_dpi(args):
    checks = []
    rng = substream(args.seed, "verify-dpi")
    trials = max(args.trials // 4, 500)
    for i, (n, m) in enumerate(((256, 1), (256, 4), (512, 2), (512, 8), (512, 16))):
        params = derive_params(n, args.p)
        sketch = make_orthonormal_sketch(m, n, args.seed + i)
        cset = small_column_set(sketch)
        input_means = np.zeros((len(cset), n))
        input_means[np.arange(len(cset)), cset.indices] = params.spike
        tv_in, se_in = tv_monte_carlo(StandardNormal(n), GaussianMixture(input_means),
                                      trials, rng)
        sk_mix = mixture_from_sketch(sketch, cset, params)
        tv_sk, se_sk = tv_monte_carlo(StandardNormal(m), sk_mix, trials, rng)
        slack = 3.0 * math.hypot(se_in, se_sk)
        checks.append((f"dpi n={n} m={m}", tv_in >= tv_sk - slack,
                       f"input tv {tv_in:.4f} >= sketch tv {tv_sk:.4f} - {slack:.4f}"))
    return checks


def cmd_verify(args) -> int:
    suites = {
        "frobenius": _verify_frobenius,
        "chi2": _verify_chi2,
        "events": _verify_events,
        "gram-exp": _verify_gram_exp,
        "dpi": _verify_dpi,
    }
    return _report(suites[args.kind](args))


def _config_from_args(args) -> ExperimentConfig:
    if args.m is None or args.m == "auto":
        m_list = "auto"
    else:
        m_list = [int(tok) for tok in str(args.m).split(",") if tok]
    conditioning = "monte_carlo" if args.conditioning == "mc" else args.conditioning
    return ExperimentConfig(
        n=args.n, p=args.p, eps=args.eps, seed=args.seed, trials=args.trials,
        m_list=m_list, conditioning=conditioning, out=args.out,
        fmt=args.format)


def cmd_experiment(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    if config.out:
        write_result(result, config.out, config.fmt)
        print(f"wrote {config.fmt} result for {len(result['results'])} sketch sizes "
              f"to {config.out}")
    else:
        text = result_to_json(result) if config.fmt == "json" else result_to_csv(result)
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    return 0


def _add_common(parser, with_trials=True):
    parser.add_argument("--n", type=int, default=4096, help="input dimension")
    parser.add_argument("--p", type=float, default=4.0, help="moment order (> 2)")
    parser.add_argument("--eps", type=float, default=None,
                        help="slack exponent in (0, 1 - 2/p); default half the range")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    if with_trials:
        parser.add_argument("--trials", type=int, default=10_000,
                            help="Monte Carlo trials")


def _add_output(parser):
    parser.add_argument("--conditioning", choices=("analytic", "mc"),
                        default="analytic",
                        help="truncation terms: fixed 1/100 or Monte Carlo estimates")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", type=str, default=None,
                        help="output path (stdout when omitted)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sketchlab",
        description="Verification lab for linear sketches of frequency moments.")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with default values for the flags")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p_thr = sub.add_parser("threshold", help="print constants and the measurement threshold")
    _add_common(p_thr, with_trials=False)
    p_thr.set_defaults(func=cmd_threshold)
    subparsers["threshold"] = p_thr

    p_ver = sub.add_parser("verify", help="run a named property suite")
    p_ver.add_argument("kind", choices=VERIFY_KINDS)
    _add_common(p_ver)
    p_ver.set_defaults(func=cmd_verify)
    subparsers["verify"] = p_ver

    p_exp = sub.add_parser("experiment", help="run a sweep over explicit sketch sizes")
    _add_common(p_exp)
    p_exp.add_argument("--m", type=str, default="auto",
                       help="comma-separated sketch sizes, or 'auto'")
    _add_output(p_exp)
    p_exp.set_defaults(func=cmd_experiment)
    subparsers["experiment"] = p_exp

    p_sweep = sub.add_parser("sweep", help="experiment over the automatic doubling sweep")
    _add_common(p_sweep)
    _add_output(p_sweep)
    p_sweep.set_defaults(func=cmd_experiment, m="auto")
    subparsers["sweep"] = p_sweep

    return parser, subparsers


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=str, default=None)
    pre_args, _ = pre.parse_known_args(argv)
    if pre_args.config:
        with open(pre_args.config, "r", encoding="utf-8") as fh:
            defaults = json.load(fh)
        for sp in subparsers.values():
            known = {action.dest for action in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
