"""``pricechain`` command line: check, solve, sweep, curve, robustness."""

import argparse
from dataclasses import replace
import json
import os
import platform
import sys

import numpy as np

from . import __version__
from .dual_pricing import (
    DualScenario,
    QuasiDualScenario,
    qd_oracle_allocate,
    solve_chain_dual,
    solve_chain_qd,
)
from .dynamic_pricing import best_response, find_equilibrium
from .exceptions import PriceChainError
from .io import (
    SOLUTION_COLUMNS,
    parse_scenario,
    rows_for,
    solution_rows,
    svg_from_csv,
    write_csv,
)
from .market import allocate, oracle_allocate
from .oracle_suite import ScenarioGenerator, assert_paper_properties, check_allocation_against_oracle, continuity_check
from .robustness import empirical_perturbation_test
from .static_pricing import optimize_costs, revenue_curve, solve_chain, state_before

SEED_ENV = "PRICECHAIN_SEED"

ROBUSTNESS_COLUMNS = (
    "trial", "model", "offset", "dev_lo", "dev_hi", "dev_revenue",
    "bound_lo", "bound_hi", "bound_revenue", "within",
)


class InvariantFailure(PriceChainError):
    pass


def resolve_seed(flag, file_seed):
    """Command-line flag, then ``PRICECHAIN_SEED``, then the file's seed."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise PriceChainError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return int(file_seed)


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _write_svg(csv_text, path, support):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg_from_csv(csv_text, *support))


def _metadata(args, seed, settings):
    return {
        "pricechain": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "command": args.command,
        "mode": getattr(args, "mode", None),
        "seed": seed,
        "solver": {
            "case_grid": settings.case_grid,
            "price_tol": settings.price_tol,
            "root_tol": settings.root_tol,
            "oracle_grid": settings.oracle_grid,
            "separable_candidates": settings.separable_candidates,
        },
    }


def _write_report(path, meta, checks):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"metadata": meta, "checks": checks}, fh, indent=2, sort_keys=True)
            fh.write("\n")


# --- invariant suites ------------------------------------------------------------------


def primal_invariants(sol, grid_n):
    """Ordering, oracle connectivity and oracle revenues for a primal solution."""
    scn = sol.scenario
    out = {}
    try:
        sol.allocation.validate(scn.accuracies)
        out["ordering"] = "pass"
    except PriceChainError as exc:
        out["ordering"] = f"fail: {exc}"
    orc = oracle_allocate(sol.prices, scn.family, scn.accuracies, scn.dist, grid_n, list(sol.active))
    mism = check_allocation_against_oracle(sol, orc)
    ok = orc.connected() and orc.ordered() and not mism
    out["connectivity"] = "pass" if ok else "fail: " + ("; ".join(mism) or "oracle sets split or unordered")
    lam = scn.dist.sup_density
    bad = [
        i + 1 for i in range(scn.n)
        if abs(sol.revenues[i] - orc.revenues[i]) > sol.prices[i] * lam * 2 * orc.spacing + 1e-12
    ]
    out["oracle-revenue"] = "pass" if not bad else f"fail: models {bad}"
    return out


def qd_invariants(sol, grid_n):
    scn = sol.scenario
    out = {}
    try:
        sol.allocation.validate()
        out["ordering"] = "pass"
    except PriceChainError as exc:
        out["ordering"] = f"fail: {exc}"
    orc = qd_oracle_allocate(sol.prices, scn.family, scn.dist, grid_n, list(sol.active))
    out["connectivity"] = "pass" if orc.connected() and orc.ordered() else "fail: oracle sets split or unordered"
    lam = scn.dist.sup_density
    bad = [
        i + 1 for i in range(scn.n)
        if abs(sol.revenues[i] - orc.revenues[i]) > sol.prices[i] * lam * 2 * orc.spacing + 1e-12
    ]
    out["oracle-revenue"] = "pass" if not bad else f"fail: models {bad}"
    return out


def _raise_on_failure(checks):
    bad = {k: v for k, v in checks.items() if v != "pass"}
    if bad:
        raise InvariantFailure("; ".join(f"{k}: {v}" for k, v in bad.items()))


# --- subcommands -----------------------------------------------------------------------


def _load(args):
    sf = parse_scenario(args.scenario)
    mode = getattr(args, "mode", None) or sf.mode
    if mode == "ultra-dual":
        raise PriceChainError("mode ultra-dual is not supported: its pricing problem is left undefined")
    scn = sf.scenario
    if getattr(args, "no_separable_candidates", False) or getattr(args, "oracle_grid", None):
        settings = scn.solver
        if args.no_separable_candidates:
            settings = replace(settings, separable_candidates=False)
        if args.oracle_grid:
            settings = replace(settings, oracle_grid=args.oracle_grid)
        scn = replace(scn, solver=settings)
    sf.scenario = scn
    return sf, mode


def _check_mode(sf, mode):
    allowed = {
        "static": ("static", "dynamic"),
        "dynamic": ("static", "dynamic"),
        "quasi-dual": ("quasi-dual",),
        "dual": ("dual",),
    }[mode]
    if sf.mode not in allowed:
        raise PriceChainError(f"scenario file is written for mode {sf.mode!r}, cannot run --mode {mode}")


def cmd_check(args):
    if args.random is not None:
        seed = resolve_seed(args.seed, 0)
        scns = ScenarioGenerator(seed).generate(args.random)
        failed = 0
        for scn in scns:
            rep = assert_paper_properties(scn, oracle_grid=args.oracle_grid or 10_000)
            status = "pass" if rep.passed else "FAIL " + ",".join(rep.failures())
            print(f"{scn.name}\tn={scn.n}\t{status}")
            if not rep.passed:
                failed += 1
                print(json.dumps(rep.replay, sort_keys=True))
        print(f"{len(scns) - failed}/{len(scns)} scenarios passed")
        return 1 if failed else 0
    if not args.scenario:
        raise PriceChainError("check needs a scenario file or --random N")
    sf = parse_scenario(args.scenario)
    ok = True
    for name, rep in sf.checks.items():
        print(f"{name}: {'pass' if rep.passed else 'fail'}")
        for v in rep.violations[:10]:
            print(f"  {v}")
        ok &= rep.passed
    if sf.mode in ("static", "dynamic"):
        rep = assert_paper_properties(sf.scenario, oracle_grid=args.oracle_grid or 10_000)
        for name, passed in rep.results.items():
            detail = rep.details.get(name, "")
            print(f"{name}: {'pass' if passed else 'fail'}" + (f" ({detail})" if detail else ""))
        ok &= rep.passed
    return 0 if ok else 1


def cmd_solve(args):
    sf, mode = _load(args)
    _check_mode(sf, mode)
    scn = sf.scenario
    seed = resolve_seed(args.seed, sf.seed)
    grid_n = scn.solver.oracle_grid
    if mode == "static":
        sol = solve_chain(scn)
        checks = primal_invariants(sol, grid_n)
        text = write_csv(SOLUTION_COLUMNS, rows_for(sol))
        support = scn.dist.support
    elif mode == "dual":
        sol = solve_chain_dual(scn)
        checks = primal_invariants(sol.primal, grid_n)
        text = write_csv(SOLUTION_COLUMNS, rows_for(sol))
        support = scn.dist.support
    elif mode == "quasi-dual":
        sol = solve_chain_qd(scn)
        checks = qd_invariants(sol, grid_n)
        text = write_csv(SOLUTION_COLUMNS, rows_for(sol))
        support = scn.dist.support
    else:
        text, checks = _solve_dynamic(args, sf, grid_n)
        support = scn.dist.support
    _write_report(args.report, _metadata(args, seed, scn.solver), checks)
    _raise_on_failure(checks)
    _emit(text, args.out)
    _write_svg(text, args.svg, support)
    return 0


def _solve_dynamic(args, sf, grid_n):
    scn = sf.scenario
    dyn = sf.dynamic
    init = args.init if args.init is not None else dyn.get("init")
    max_iter = args.max_iter if args.max_iter is not None else dyn.get("max_iter", 200)
    tol = args.tol if args.tol is not None else dyn.get("tol", 1e-6)
    res = find_equilibrium(scn, init, max_iter, tol)
    if args.trace:
        rows = [[str(k)] + ["%.10g" % p for p in ps] for k, ps in enumerate(res.trace)]
        cols = ["iteration"] + [f"price_{i + 1}" for i in range(scn.n)]
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            write_csv(cols, rows, fh)
    if not res.converged:
        gaps = ", ".join("%.3g" % g for g in res.gaps)
        raise InvariantFailure(f"no equilibrium after {res.iterations} iterations (revenue gaps {gaps})")
    prices = list(res.prices)
    al = allocate(prices, scn.family, scn.accuracies, [True] * scn.n)
    revs = [p * scn.dist.interval_mass(*iv) if iv else 0.0 for p, iv in zip(prices, al.allocation.intervals)]
    profits = [max(r - c, 0.0) for r, c in zip(revs, scn.costs)]
    labels = ["/".join(best_response(i, prices, scn).branch) for i in range(scn.n)]
    rows = solution_rows(scn.costs, scn.accuracies, prices, al.allocation.intervals, revs, profits, labels)
    checks = {}
    try:
        al.allocation.validate(scn.accuracies)
        checks["ordering"] = "pass"
    except PriceChainError as exc:
        checks["ordering"] = f"fail: {exc}"
    orc = oracle_allocate(prices, scn.family, scn.accuracies, scn.dist, grid_n)
    checks["connectivity"] = "pass" if orc.connected() and orc.ordered() else "fail: oracle sets split or unordered"
    checks["equilibrium"] = "pass"
    return write_csv(SOLUTION_COLUMNS, rows), checks


def cmd_sweep(args):
    sf, _ = _load(args)
    scn = sf.scenario
    if isinstance(scn, (DualScenario, QuasiDualScenario)):
        raise PriceChainError("sweep runs on static scenarios")
    grid = args.cost_grid or scn.cost_grid
    if not grid:
        raise PriceChainError("sweep needs cost_grid in the file or --cost-grid")
    res = optimize_costs(scn, grid)
    checks = primal_invariants(res.best, scn.solver.oracle_grid)
    _raise_on_failure(checks)
    if args.evaluated:
        rows = [[";".join("%.6g" % c for c in costs), "%.6g" % obj] for costs, obj in res.evaluated]
        with open(args.evaluated, "w", encoding="utf-8", newline="") as fh:
            write_csv(("costs", "objective"), rows, fh)
    text = write_csv(SOLUTION_COLUMNS, rows_for(res.best))
    _emit(text, args.out)
    _write_svg(text, args.svg, scn.dist.support)
    return 0


def cmd_curve(args):
    sf, _ = _load(args)
    scn = sf.scenario
    if not 1 <= args.model <= scn.n:
        raise PriceChainError(f"--model must be between 1 and {scn.n}")
    state = state_before(scn, args.model - 1)
    chk = continuity_check(state, args.step)
    if args.out:
        n = max(int(round(scn.price_cap / args.step)), 1)
        curve = revenue_curve(state, np.linspace(0.0, scn.price_cap, n + 1))
        rows = [["%.10g" % p, "%.10g" % r] for p, r in zip(curve.prices, curve.revenues)]
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(("price", "revenue"), rows, fh)
    print(f"model: {args.model}")
    print(f"step: {chk.step:.6g}")
    print(f"max_jump: {chk.max_jump:.6g}")
    print(f"slope_bound: {chk.slope:.6g}")
    print(f"jump_limit: {10 * chk.step * chk.slope:.6g}")
    print(f"half_step_jump: {chk.half_jump:.6g}")
    print(f"half_step_ratio: {chk.ratio:.6g}")
    print(f"continuous: {'yes' if chk.passed else 'no'}")
    return 0 if chk.passed else 1


def cmd_robustness(args):
    sf, _ = _load(args)
    scn = sf.scenario
    rob = sf.robustness
    eps = args.epsilon if args.epsilon is not None else rob.get("epsilon", 0.01)
    if isinstance(eps, list) and len(eps) == 1:
        eps = eps[0]
    trials = args.trials if args.trials is not None else rob.get("trials", 100)
    seed = resolve_seed(args.seed, rob.get("seed", sf.seed))
    sol = solve_chain(scn)
    res = empirical_perturbation_test(sol, eps, trials, seed, scn.solver.oracle_grid, kind=args.perturbation)

    def g(v):
        return "" if v is None else "%.6g" % v

    rows = [
        [str(t), str(i + 1), g(d), g(lo), g(hi), g(rv), g(lb), g(ub), g(rb), "yes" if ok else "no"]
        for t, i, d, lo, hi, rv, lb, ub, rb, ok in res.rows
    ]
    _emit(write_csv(ROBUSTNESS_COLUMNS, rows), args.out)
    summary = (
        f"max endpoint deviation {res.max_endpoint_deviation:.6g}, "
        f"max revenue deviation {res.max_revenue_deviation:.6g}, "
        f"within bounds: {'yes' if res.satisfied else 'no'}"
    )
    print(summary, file=sys.stderr)
    for note in res.report.notes:
        print(f"note: {note}", file=sys.stderr)
    return 0 if res.satisfied else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="pricechain", description=__doc__)
    ap.add_argument("--version", action="version", version=f"pricechain {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--no-separable-candidates", action="store_true",
                       help="skip closed-form stationary candidates in case maximization")
        p.add_argument("--oracle-grid", type=int, default=None, help="buyer grid for oracle checks")
        if seed:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("check", help="axiom/compatibility checks, or the random property suite")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--random", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--oracle-grid", type=int, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="price the chain")
    common(p)
    p.add_argument("--mode", choices=("static", "quasi-dual", "dual", "dynamic", "ultra-dual"), default=None)
    p.add_argument("--out", default=None, help="solution CSV (default stdout)")
    p.add_argument("--svg", default=None, help="allocation chart")
    p.add_argument("--report", default=None, help="JSON invariant report with run metadata")
    p.add_argument("--init", type=float, nargs="+", default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--trace", default=None, help="per-iteration price CSV (dynamic mode)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="search a cost grid")
    common(p)
    p.add_argument("--cost-grid", type=float, nargs="+", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--evaluated", default=None, help="CSV of every cost tuple and its objective")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("curve", help="revenue continuity of one model")
    common(p, seed=False)
    p.add_argument("--model", type=int, required=True)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--out", default=None, help="sampled curve CSV")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("robustness", help="utility misspecification trials")
    common(p)
    p.add_argument("--epsilon", type=float, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--perturbation", choices=("offset", "slope"), default="offset")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_robustness)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "mode", None) == "ultra-dual":
        print("pricechain: mode ultra-dual is not supported: its pricing problem is left undefined",
              file=sys.stderr)
        return 2
    if getattr(args, "step", 1.0) is not None and getattr(args, "step", 1.0) <= 0:
        print("pricechain: --step must be positive", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except InvariantFailure as exc:
        print(f"pricechain: invariant check failed: {exc}", file=sys.stderr)
        return 3
    except (PriceChainError, OSError) as exc:
        print(f"pricechain: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
