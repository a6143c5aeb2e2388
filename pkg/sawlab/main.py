import argparse
import json
import logging
import sys
from dataclasses import asdict
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import sawlab
from sawlab import cache as result_cache
from sawlab import hexobs, hwbounds, laceexp, series, superint, walks
from sawlab.config import (
    OUTPUT_FORMATS,
    ZC_TOKEN,
    RunConfig,
    load_config,
    parse_lambda,
    parse_rational,
    parse_z,
    with_overrides,
)
from sawlab.errors import BudgetExceeded, CacheError, CapExceeded, ConfigError, GeometryError
from sawlab.lattice import ZD_NEAREST, LatticeSpec, lattice_from_string, origin, strip_domain
from sawlab.report import (
    EXIT_BUDGET,
    EXIT_USAGE,
    PASS,
    FAIL,
    CheckReport,
    decimal_string,
    exit_code,
    make_report,
    render_csv,
    render_human,
    render_json,
    report_rows,
    stopwatch,
    summarize,
    with_timing,
)

logger = logging.getLogger(__name__)

SERIES_CHECKS = ("ode", "bubble", "fourier", "simon-lieb", "diagrammatic", "torus", "chi")
HEX_CHECKS = ("vertex", "strip", "recursion", "boundary")
GRASSMANN_CHECKS = ("norm", "wick", "ibp", "repsaw", "loops", "determinant", "tau")


class _Run:
    """Collects the reports of one invocation together with their timings."""

    def __init__(self, run_config: RunConfig, options: walks.EngineOptions):
        self.config = run_config
        self.options = options
        self.reports: List[CheckReport] = []
        self.results: Dict[str, Any] = {}
        self.inputs: Dict[str, Any] = {}

    def check(self, function: Callable[..., Union[CheckReport, Sequence[CheckReport]]], *args, **kwargs) -> None:
        with stopwatch() as timing:
            produced = function(*args, **kwargs)
        reports = [produced] if isinstance(produced, CheckReport) else list(produced)
        share = {"seconds": round(timing["seconds"] / max(1, len(reports)), 6)}
        self.reports.extend(with_timing(report, share) for report in reports)


def _strings(values: Sequence[Any]) -> List[str]:
    return [decimal_string(value) for value in values]


def _lattice(text: str) -> LatticeSpec:
    return lattice_from_string(text)


# ---------------------------------------------------------------------------
# Subcommands


def _count(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    lam = parse_lambda(args.lam)
    run.inputs.update(lattice=spec.name, n=args.n, **{"lambda": decimal_string(lam)})
    counts = walks.count_walks(spec, args.n, lam, run.options)
    run.results["cN"] = _strings(counts.totals.totals())
    if args.by_endpoint:
        run.results["cNx"] = [
            [index[0], list(index[1]), decimal_string(value)] for index, value in counts.by_endpoint.sorted_items()
        ]
    if args.oracle:
        run.check(_oracle_report, spec, args.n, lam, counts.by_endpoint)
    if args.invariants:
        run.check(hwbounds.verify_walk_invariants, spec, args.n, lam, run.options)


def _oracle_report(spec: LatticeSpec, n: int, lam: Fraction, table: walks.CountTable) -> CheckReport:
    rows = []
    for k in range(n + 1):
        oracle = walks.naive_count_walks(spec, k, lam)
        engine = table.at(k)
        mismatch = sorted(x for x in set(oracle) | set(engine) if oracle.get(x, 0) != engine.get(x, 0))
        rows.append(dict(n=k, engine=sum(engine.values()), oracle=sum(oracle.values()),
                         first_mismatch=str(mismatch[0]) if mismatch else "", holds=not mismatch))
    inputs = {"lattice": spec.name, "n": n, "lambda": lam}
    failed = [row for row in rows if not row["holds"]]
    return make_report("walks.oracle", inputs, FAIL if failed else PASS, failed[:1] or rows)


def _bridge(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    run.inputs.update(lattice=spec.name, n=args.n)
    bridges = walks.count_bridges(spec, args.n, run.options)
    run.results["bN"] = _strings(bridges.totals.totals())
    run.results["bNA"] = [[n, span, decimal_string(value)] for (n, span), value in bridges.by_span.sorted_items()]
    run.results["hN"] = _strings(walks.count_half_space(spec, args.n, run.options).totals())


def _polygon(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    run.inputs.update(lattice=spec.name, n=args.n)
    if spec.kind == ZD_NEAREST:
        q = hwbounds.polygon_counts(spec, args.n, run.options)
        q.pop(2)
    else:
        q = {m: walks.count_polygons(spec, m, run.options) for m in range(3, args.n + 1)}
    run.results["qN"] = {str(m): decimal_string(value) for m, value in sorted(q.items())}
    if spec.kind == ZD_NEAREST and spec.d >= 2:
        run.check(hwbounds.verify_polygon_supermultiplicativity, spec, args.n, run.options)


def _hw(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    n = args.n
    run.inputs.update(lattice=spec.name, n=n)
    options = run.options
    run.check(hwbounds.verify_hw_chain, spec, n, options)
    run.check(hwbounds.verify_unfolding, spec, min(n, args.unfold_max), options)
    run.check(hwbounds.verify_bridge_product_bound, spec, n, options)
    run.check(hwbounds.verify_chi_bridge_bound, spec, n, options)
    run.check(hwbounds.mu_bracket_report, spec, n, options)
    if spec.kind == ZD_NEAREST:
        run.check(hwbounds.verify_polygon_inequality, spec, min(n, args.polygon_max), options)
        ratios, report = hwbounds.kesten_ratios(spec, n, options)
        run.reports.append(report)
        run.results["kesten_ratios"] = _strings(ratios)
    if spec.kind == ZD_NEAREST and spec.d == 2 and n >= 7:
        run.check(hwbounds.square_lattice_strict_bounds, n, options)
    bracket = hwbounds.mu_bracket(spec, n, options)
    run.results["mu_bracket"] = _strings([bracket.lower, bracket.upper])
    threshold = hwbounds.hw_threshold_scan(spec, n, options=options)
    run.results["threshold"] = "none" if threshold is None else str(threshold)


def _lace(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    run.inputs.update(lattice=spec.name, m_max=args.m_max, n_max=args.n_max if args.n_max else "all")
    table = laceexp.pi_via_laces(spec, args.m_max, args.n_max)
    run.results["pi_hat"] = _strings(table.hat().coeffs)
    orders = sorted({key[1] for key in table.by_lace})
    run.results["pi_hat_by_lace_size"] = {str(n): _strings(table.hat(n).coeffs) for n in orders}
    if args.check_recursion:
        run.check(laceexp.check_pi_paths, spec, args.m_max, run.options)
    if args.m_max >= 5 and spec.kind == ZD_NEAREST:
        run.check(laceexp.one_over_d_coefficients, spec, args.m_max)
    if args.graph_b_max:
        run.check(laceexp.graph_identity_check, spec, args.graph_b_max)
    if args.cosines:
        cosines = [parse_rational(c) for c in args.cosines.split(",")]
        run.check(laceexp.ghat_identity_check, spec, args.m_max, cosines, run.options)
    if args.zc:
        estimate = laceexp.zc_fixed_point(spec, args.m_max, precision_bits=run.config.precision_bits,
                                          options=run.options)
        run.results["zc"] = decimal_string(estimate.z)
        run.results["mu"] = decimal_string(estimate.mu)
        run.check(laceexp.zc_report, spec, args.m_max, run.options)


def _rational_z(text: str) -> Fraction:
    z = parse_z(text)
    if z == ZC_TOKEN:
        raise ConfigError("The token zc is only meaningful on the hexagonal lattice", text)
    return z


def _series(args, run: _Run) -> None:
    spec = _lattice(args.lattice)
    lam = parse_lambda(args.lam)
    n_max = args.n_max
    bits = run.config.precision_bits
    options = run.options
    run.inputs.update(lattice=spec.name, n_max=n_max, **{"lambda": decimal_string(lam)})
    run.results["chi"] = _strings(series.susceptibility_series(spec, lam, n_max, options).coeffs)
    for check in args.check or []:
        if check == "ode":
            run.check(series.susceptibility_ode_check, spec, n_max, options)
        elif check == "bubble":
            run.results["bubble"] = _strings(series.bubble_series(spec, n_max, options).coeffs)
            run.check(series.bubble_parity_check, spec, n_max, options)
        elif check == "fourier":
            z = _rational_z(args.z)
            k = [parse_rational(c) for c in args.k.split(",")] if args.k else [0] * spec.d
            evaluation = series.fourier_two_point(spec, z, k, n_max, bits, options)
            run.results["ghat"] = decimal_string(evaluation.value)
            run.results["ghat_tail"] = decimal_string(evaluation.tail)
            run.check(series.fourier_tail_check, spec, z, k, n_max, bits, options)
            if spec.d == 1 and spec.kind == ZD_NEAREST:
                run.check(series.onedim_check, z, k[0], n_max, bits, options)
        elif check == "simon-lieb":
            x = origin(spec.d)
            run.check(series.simon_lieb_check, spec, lam, args.radius, x, x, n_max, options)
        elif check == "diagrammatic":
            k = [parse_rational(c) for c in args.k.split(",")] if args.k else None
            run.check(series.diagrammatic_bound_check, spec, _rational_z(args.z), n_max,
                      k=k, precision_bits=bits, options=options)
        elif check == "torus":
            run.check(series.torus_domination_check, spec, args.R, lam, n_max, options)
        elif check == "chi":
            run.check(series.chi_lower_bound_check, spec, n_max, options)


def _hex(args, run: _Run) -> None:
    bits = run.config.precision_bits
    budget = run.config.node_budget
    threads = run.config.threads
    z = parse_z(args.z)
    sigma = parse_rational(args.sigma)
    run.inputs.update(T=args.T, L=args.L, z=decimal_string(z), sigma=decimal_string(sigma))
    sums = hexobs.strip_sums(args.T, args.L, z, bits, budget, threads)
    run.results["strip_sums"] = {"A": decimal_string(sums.A), "B": decimal_string(sums.B), "E": decimal_string(sums.E)}
    domain = strip_domain(args.T, args.L)
    for check in args.check or ["strip"]:
        if check == "vertex":
            run.check(hexobs.vertex_identity_check, domain, domain.start, z, sigma, bits, budget)
        elif check == "boundary":
            run.check(hexobs.boundary_sum_check, domain, domain.start, z, sigma, bits, budget)
        elif check == "strip":
            run.check(hexobs.strip_identity_check, args.T, args.L, bits, budget, threads)
        elif check == "recursion":
            run.check(hexobs.strip_recursion_check, max(2, args.T), args.L, bits, budget, threads)


def _load_matrix(path: str) -> List[List[complex]]:
    with open(path, "r") as matrix_file:
        rows = json.load(matrix_file)
    return [[complex(*entry) if isinstance(entry, list) else complex(entry) for entry in row] for row in rows]


def _grassmann(args, run: _Run) -> None:
    cap = run.config.superint_cap
    if args.matrix:
        cov = superint.covariance_from(_load_matrix(args.matrix), cap)
    else:
        cov = superint.random_covariance(args.M, args.seed, cap)
    M = cov.M
    run.inputs.update(M=M, seed=args.seed if not args.matrix else "file")
    for check in args.check or ["norm"]:
        if check == "norm":
            run.check(superint.norm_check, cov)
        elif check == "wick":
            run.check(superint.wick_check, cov)
        elif check == "ibp":
            F = superint.Form.phi(M, M - 1) * superint.Form.tau(M, 0)
            run.check(superint.integration_by_parts_check, cov, 0, F)
        elif check in ("repsaw", "loops") and M < 2:
            raise ConfigError("Walk representations need at least two sites", M)
        elif check == "repsaw":
            run.check(superint.saw_representation_check, cov, 0, M - 1)
        elif check == "loops":
            run.check(superint.loop_model_check, cov, 0, M - 1, list(range(1, M - 1)))
        elif check == "determinant":
            run.check(superint.determinant_identity_check, cov)
        elif check == "tau":
            first = tuple(1 if x < 2 else 0 for x in range(M))
            run.check(superint.tau_localisation_check, cov, {first: 1, (0,) * M: 2})


def _srw(args, run: _Run) -> None:
    run.inputs.update(d=args.d, task=args.task)
    value = series.srw_reference(args.d, args.task, run.config.precision_bits)
    run.results.update(classification=value.classification)
    if value.value is not None:
        run.results.update(value=decimal_string(value.value), error=decimal_string(value.error))
    if value.escape_probability is not None:
        run.results["escape_probability"] = decimal_string(value.escape_probability)
    run.check(series.srw_check, args.d, run.config.precision_bits)


def _cache_gc(args, run: _Run) -> None:
    if run.config.cache_dir is None:
        raise ConfigError("No cache directory configured", None)
    max_bytes = args.max_bytes if args.max_bytes is not None else run.config.cache_max_bytes
    summary = result_cache.cache_gc(run.config.cache_dir, max_bytes)
    run.inputs.update(max_bytes=max_bytes)
    run.results.update({key: str(value) for key, value in asdict(summary).items()})


def _config(args, run: _Run) -> None:
    run.results.update({key: str(value) for key, value in asdict(run.config).items()})


_HANDLERS = {
    "count": _count,
    "bridge": _bridge,
    "polygon": _polygon,
    "hw": _hw,
    "lace": _lace,
    "series": _series,
    "hex": _hex,
    "grassmann": _grassmann,
    "srw": _srw,
    "cache-gc": _cache_gc,
    "config": _config,
}


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    help_str = """ sawlab -- exact enumeration and identity checks for self-avoiding walks """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Path to a toml file with a [sawlab] table", type=str)
    common.add_argument("--threads", default=None, help="Worker processes for enumerations", type=int)
    common.add_argument("--node-budget", default=None, help="Abort enumerations beyond this many nodes", type=int)
    common.add_argument("--precision-bits", default=None, help="Working precision for real quantities", type=int)
    common.add_argument("--cache-dir", default=None, help="Directory of the result cache", type=str)
    common.add_argument("--no-cache", action="store_true", help="Do not read or write the result cache")
    common.add_argument("--format", default=None, choices=OUTPUT_FORMATS, help="Output format, json by default")
    common.add_argument("--no-timing", action="store_true", help="Leave timings and cache statistics out of the output")
    common.add_argument("-v", "--verbose", action="count", default=0, help="Log progress to stderr (repeat for debug)")

    ap = argparse.ArgumentParser(prog="sawlab", description=help_str)
    ap.add_argument("--version", action="version", version=sawlab.__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    count = sub.add_parser("count", parents=[common], help="Count walks c_n and c_n(x)")
    count.add_argument("--lattice", default="z2", type=str)
    count.add_argument("--n", required=True, type=int)
    count.add_argument("--lambda", dest="lam", default="1", type=str, help="Weak self-avoidance strength p/q in [0, 1]")
    count.add_argument("--oracle", action="store_true", help="Cross-check against brute force")
    count.add_argument("--by-endpoint", action="store_true", help="Also print c_n(x)")
    count.add_argument("--invariants", action="store_true", help="Check submultiplicativity and friends")

    bridge = sub.add_parser("bridge", parents=[common], help="Count bridges and half-space walks")
    bridge.add_argument("--lattice", default="z2", type=str)
    bridge.add_argument("--n", required=True, type=int)

    polygon = sub.add_parser("polygon", parents=[common], help="Count self-avoiding polygons")
    polygon.add_argument("--lattice", default="z2", type=str)
    polygon.add_argument("--n", required=True, type=int)

    hw = sub.add_parser("hw", parents=[common], help="Bridge and unfolding inequalities")
    hw.add_argument("--lattice", default="z2", type=str)
    hw.add_argument("--n", required=True, type=int)
    hw.add_argument("--unfold-max", default=10, type=int, help="Longest walk unfolded one by one")
    hw.add_argument("--polygon-max", default=5, type=int, help="Largest n in the bridge endpoint inequality")

    lace = sub.add_parser("lace", parents=[common], help="Lace expansion coefficients")
    lace.add_argument("--lattice", default="z2", type=str)
    lace.add_argument("--m-max", required=True, type=int)
    lace.add_argument("--n-max", default=None, type=int, help="Largest lace size")
    lace.add_argument("--check-recursion", action="store_true", help="Compare laces with the convolution recursion")
    lace.add_argument("--graph-b-max", default=0, type=int, help="Check the graph identities up to this length")
    lace.add_argument("--cosines", default=None, type=str,
                      help="Comma separated rational cos k_j for the Fourier identity")
    lace.add_argument("--zc", action="store_true", help="Estimate z_c from the truncated expansion")

    ser = sub.add_parser("series", parents=[common], help="Generating functions and their identities")
    ser.add_argument("--lattice", default="z2", type=str)
    ser.add_argument("--n-max", required=True, type=int)
    ser.add_argument("--lambda", dest="lam", default="1", type=str)
    ser.add_argument("--check", action="append", choices=SERIES_CHECKS)
    ser.add_argument("--z", default="1/10", type=str)
    ser.add_argument("--k", default=None, type=str, help="Comma separated k_j in units of pi")
    ser.add_argument("--radius", default=1, type=int, help="Half width of the Simon-Lieb box")
    ser.add_argument("--R", default=1, type=int, help="Torus period is 2R + 1")

    hx = sub.add_parser("hex", parents=[common], help="Hexagonal lattice observable")
    hx.add_argument("--T", default=1, type=int)
    hx.add_argument("--L", default=1, type=int)
    hx.add_argument("--z", default=ZC_TOKEN, type=str)
    hx.add_argument("--sigma", default="5/8", type=str)
    hx.add_argument("--check", action="append", choices=HEX_CHECKS)

    gr = sub.add_parser("grassmann", parents=[common], help="Gaussian superintegrals")
    gr.add_argument("--M", default=3, type=int)
    gr.add_argument("--seed", default=0, type=int)
    gr.add_argument("--check", action="append", choices=GRASSMANN_CHECKS)
    gr.add_argument("--matrix", default=None, type=str, help="JSON file holding the covariance C")

    srw = sub.add_parser("srw", parents=[common], help="Simple random walk reference integrals")
    srw.add_argument("--d", required=True, type=int)
    srw.add_argument("--task", default=series.RETURN_INTEGRAL, choices=series.SRW_TASKS)

    gc = sub.add_parser("cache-gc", parents=[common], help="Evict least recently used cache entries")
    gc.add_argument("--max-bytes", default=None, type=int)

    sub.add_parser("config", parents=[common], help="Print the effective configuration")
    return ap


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    root = logging.getLogger("sawlab")
    root.handlers[:] = [handler]
    root.setLevel(level)


def _document(args, run: _Run, cache: Optional[result_cache.ResultCache]) -> Dict[str, Any]:
    checks = []
    timing: Dict[str, Any] = {"checks": []}
    for report in run.reports:
        entry = report.to_dict()
        timing["checks"].append({"check_id": report.check_id, **entry.pop("timing")})
        checks.append(entry)
    timing["cache"] = {"hits": cache.hits if cache else 0, "misses": cache.misses if cache else 0}
    document: Dict[str, Any] = {
        "command": args.command,
        "inputs": run.inputs,
        "results": run.results,
        "checks": checks,
        "summary": summarize(run.reports),
    }
    if not args.no_timing:
        document["timing"] = timing
    return document


def _render(document: Dict[str, Any], run: _Run, output_format: str) -> str:
    if output_format == "json":
        return render_json(document)
    if output_format == "csv":
        header, rows = report_rows(run.reports)
        return render_csv(header, rows)
    lines = [f"{key}: {value}" for key, value in sorted(run.results.items())]
    lines.append(render_human(run.reports))
    return "\n".join(lines)


def run(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        run_config = with_overrides(
            load_config(args.config),
            threads=args.threads,
            node_budget=args.node_budget,
            precision_bits=args.precision_bits,
            cache_dir=args.cache_dir,
            output_format=args.format,
            command=args.command,
        )
        cache = None
        if run_config.cache_dir is not None and not args.no_cache and args.command not in ("cache-gc", "config"):
            cache = result_cache.ResultCache(run_config.cache_dir)
        session = _Run(run_config, walks.options_from_config(run_config, cache))
        try:
            _HANDLERS[args.command](args, session)
        finally:
            if cache is not None:
                cache.close()
    except BudgetExceeded as err:
        sys.stderr.write(f"sawlab: node budget of {err.budget} exceeded; no result\n")
        return EXIT_BUDGET
    except (ConfigError, GeometryError, CacheError, CapExceeded, ValueError) as err:
        sys.stderr.write(f"sawlab: {err.args[0] if err.args else err}\n")
        return EXIT_USAGE

    sys.stdout.write(_render(_document(args, session, cache), session, run_config.output_format) + "\n")
    return exit_code(session.reports)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
