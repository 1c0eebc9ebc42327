"""Command-line interface: ``cmsign {reduce,simulate,oracle,variance}``."""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import results_io
from .baselines import SlmConfig, exhaustive_sign_search, random_signs, slm_reduce
from .ce import (
    EXACT_CE_MAX_SIGNS,
    EXHAUSTIVE,
    RuleVariant,
    ce_reduce,
    exact_ce_reduce,
)
from .constellation import SCHEMES, build_constellation
from .errors import CapacityError, ConfigurationError
from .harness import (
    ExperimentConfig,
    draw_frame,
    make_problem,
    run_experiment,
    summarize,
    symbol_seed,
    variance_check,
)
from .ofdm import CmParams, SymbolFrame, papr_db, srcm, srcm_db, synthesize_data

log = logging.getLogger("cmsign")

SLACK = 1e-12

PRESETS = {
    "table1-n64": [("n64", dict(n_subcarriers=64))],
    "table1-n512": [("n512", dict(n_subcarriers=512))],
    "table1-n1024": [("n1024", dict(n_subcarriers=1024))],
    "fig2": [
        ("n64-nf0", dict(n_subcarriers=64)),
        ("n64-nf32", dict(n_subcarriers=64, n_f=32)),
        ("n1024-nf0", dict(n_subcarriers=1024)),
        ("n1024-nf512", dict(n_subcarriers=1024, n_f=512)),
    ],
    "fig3-slm": [
        ("n64-ce", dict(n_subcarriers=64)),
        ("n64-slm", dict(n_subcarriers=64, reducer="slm", slm_s=100)),
        ("n1024-ce", dict(n_subcarriers=1024)),
        ("n1024-slm", dict(n_subcarriers=1024, reducer="slm", slm_s=100)),
    ],
    "pruned-half": [
        ("n64-nf32", dict(n_subcarriers=64, n_f=32)),
        ("n1024-nf512", dict(n_subcarriers=1024, n_f=512)),
    ],
}
PRESET_DEFAULTS = dict(scheme="qam16", oversampling=4, n_symbols=2000, reducer="ce")


def _db(x: float) -> str:
    return f"{x:.4f}"


def _add_frame_flags(p: argparse.ArgumentParser, n_default=None) -> None:
    p.add_argument("--scheme", choices=sorted(SCHEMES), default=None)
    p.add_argument("--n", type=int, default=n_default, help="number of subcarriers N")
    p.add_argument("--l", type=int, default=None, help="oversampling factor L")
    p.add_argument("--nf", type=int, default=None, help="leading subcarriers with fixed sign")
    p.add_argument("--variant", choices=["alg1", "chi2"], default=None)
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmsign", description="Cubic metric reduction of OFDM symbols by sign selection."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    red = sub.add_parser("reduce", help="reduce a single OFDM symbol")
    _add_frame_flags(red)
    red.add_argument("--reducer", choices=["ce", "slm", "none", "exhaustive", "random"], default="ce")
    red.add_argument("--slm-s", type=int, default=100)
    red.add_argument("--input", type=Path, help="symbol file, one 're,im' per line")
    red.add_argument("--trace", action="store_true", help="print the decision trace")
    red.add_argument("--out", type=Path, help="write time samples as 're,im' lines")

    sim = sub.add_parser("simulate", help="Monte Carlo experiment")
    _add_frame_flags(sim)
    sim.add_argument("--reducer", choices=["ce", "slm", "none", "exhaustive", "random"], default=None)
    sim.add_argument("--slm-s", type=int, default=None)
    sim.add_argument("--symbols", type=int, default=None)
    sim.add_argument("--config", type=Path)
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--out", type=Path, default=Path("results"))
    sim.add_argument("--cm-kslp", type=float)
    sim.add_argument("--cm-kbw", type=float)
    sim.add_argument("--cm-rcmref", type=float)

    orc = sub.add_parser("oracle", help="check closed-form rules against exact references")
    _add_frame_flags(orc, n_default=8)
    orc.add_argument("--symbols", type=int, default=100)

    var = sub.add_parser("variance", help="conditional variance of signal samples vs (1-alpha)/2")
    var.add_argument("--scheme", choices=sorted(SCHEMES), default="qam16")
    var.add_argument("--n", type=int, default=1024)
    var.add_argument("--l", type=int, default=4)
    var.add_argument("--symbols", type=int, default=500)
    var.add_argument("--seed", type=int, default=0)
    var.add_argument("--alphas", default="0,0.25,0.5,0.75")
    var.add_argument("--method", choices=["exact", "sampled"], default="exact")
    var.add_argument("--tol", type=float, default=0.03)
    return parser


def _read_symbols(path: Path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                re, im = line.split(",")
                values.append(complex(float(re), float(im)))
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: expected 're,im', got {line!r}") from None
    if not values:
        raise ConfigurationError(f"{path}: no symbols")
    return np.array(values)


def _signs_str(signs) -> str:
    return " ".join("+1" if s > 0 else "-1" for s in signs)


def cmd_reduce(args) -> int:
    scheme = args.scheme or "qam16"
    oversampling = args.l or 4
    n_f = args.nf or 0
    variant = RuleVariant.parse(args.variant or "alg1")
    const = build_constellation(scheme)
    if args.input is not None:
        data = _read_symbols(args.input)
        if not np.all(np.isin(data, const.points)):
            raise ConfigurationError(f"input symbols are not all {scheme} points")
    else:
        if args.n is None:
            raise ConfigurationError("reduce needs --n or --input")
        rng = np.random.default_rng(symbol_seed(args.seed or 0, 0))
        data = draw_frame(rng, scheme, args.n)
    problem = make_problem(data, scheme, n_f, oversampling)
    before = synthesize_data(data, const.sigma_b_sq, oversampling)

    trace = None
    if args.reducer == "ce":
        outcome = ce_reduce(problem, variant)
        signs, after, trace = outcome.signs, outcome.signal, outcome.trace
    elif args.reducer == "slm":
        out = slm_reduce(SymbolFrame(data, const.sigma_b_sq, oversampling),
                         SlmConfig(args.slm_s, seed=args.seed or 0))
        signs = None
        after = synthesize_data(out.frame.data, const.sigma_b_sq, oversampling)
        print(f"slm candidate: {out.candidate}")
    elif args.reducer == "none":
        signs, after = None, before
    else:
        if args.reducer == "exhaustive":
            signs, _ = exhaustive_sign_search(problem)
        else:
            signs = random_signs(problem, args.seed or 0)
        after = synthesize_data(problem.c * signs, const.sigma_b_sq, oversampling)

    eta_b, eta_a = float(srcm(before)), float(srcm(after))
    if signs is not None:
        print(f"signs: [{_signs_str(signs)}]")
    print(f"eta_before: {eta_b:.6f} ({_db(srcm_db(eta_b))} dB)")
    print(f"eta_after: {eta_a:.6f} ({_db(srcm_db(eta_a))} dB)")
    print(f"papr_before: {_db(papr_db(before))} dB")
    print(f"papr_after: {_db(papr_db(after))} dB")
    if args.trace and trace is not None:
        print("j,statistic,sign")
        for j, d, s in zip(trace.index, trace.statistic, trace.sign):
            print(f"{int(j)},{float(d)!r},{int(s)}")
    if args.out is not None:
        with open(args.out, "w") as fh:
            for v in after:
                fh.write(f"{float(v.real)!r},{float(v.imag)!r}\n")
    return 0


def _cm_params(args):
    given = [args.cm_kslp, args.cm_kbw, args.cm_rcmref]
    if all(v is None for v in given):
        return None
    if any(v is None for v in given):
        raise ConfigurationError("--cm-kslp, --cm-kbw and --cm-rcmref must be given together")
    return CmParams(rcm_ref_db=args.cm_rcmref, k_slp=args.cm_kslp, k_bw=args.cm_kbw)


def _flag_overrides(args) -> dict:
    mapping = {
        "scheme": args.scheme, "n_subcarriers": args.n, "oversampling": args.l,
        "n_f": args.nf, "variant": args.variant, "master_seed": args.seed,
        "reducer": args.reducer, "slm_s": args.slm_s, "n_symbols": args.symbols,
    }
    return {k: v for k, v in mapping.items() if v is not None}


def simulation_configs(args) -> list[tuple[str, ExperimentConfig]]:
    """Resolve preset, config file and flags (in increasing priority) into runs."""
    base = {}
    if args.config is not None:
        base = ExperimentConfig.flatten(results_io.load_config(args.config))
    overrides = _flag_overrides(args)
    if args.symbols is not None and args.symbols < 1:
        raise ConfigurationError("--symbols must be >= 1")
    cm = _cm_params(args)
    if args.preset:
        runs = [(name, {**PRESET_DEFAULTS, **base, **params}) for name, params in PRESETS[args.preset]]
        drop = {"n_subcarriers", "n_f"} & set(overrides)
        if drop:
            raise ConfigurationError(f"presets fix {sorted(drop)}; drop those flags")
    else:
        runs = [("run", dict(base))]
    configs = []
    for name, params in runs:
        params = {**params, **overrides}
        if cm is not None:
            params["cm_params"] = cm
        if "n_subcarriers" not in params:
            raise ConfigurationError("simulate needs --n, --config or --preset")
        configs.append((name, ExperimentConfig.from_dict(params)))
    return configs


def _print_summary(name: str, s: dict) -> None:
    cm_b = "-" if s["cm_db_before"] is None else _db(s["cm_db_before"])
    cm_a = "-" if s["cm_db_after"] is None else _db(s["cm_db_after"])
    label = s["reducer"] + (f"/{s['variant']}" if s["variant"] else "")
    print(
        f"{name:<14} {s['n_subcarriers']:>5} {label:<9} {s['n_f']:>5} "
        f"{_db(s['rcm_db_before']):>9} {cm_b:>9} {_db(s['rcm_db_after']):>9} {cm_a:>9} "
        f"{_db(s['mean_srcm_db_after']):>9} {_db(s['max_srcm_db_after']):>9} "
        f"{s['fraction_eta_after_above_6']:>8.4f}"
    )


def cmd_simulate(args) -> int:
    configs = simulation_configs(args)
    print(
        f"{'run':<14} {'N':>5} {'reducer':<9} {'n_f':>5} {'RCM_orig':>9} {'CM_orig':>9} "
        f"{'RCM_red':>9} {'CM_red':>9} {'mean_dB':>9} {'max_dB':>9} {'P(eta>6)':>8}"
    )
    for name, cfg in configs:
        result = run_experiment(cfg)
        target = args.out / name if len(configs) > 1 else args.out
        existed = target.exists()
        try:
            results_io.persist(result, target)
        except BaseException:
            if existed:
                for fname in ("results.csv", "summary.json", "ccdf_before.csv", "ccdf_after.csv"):
                    (target / fname).unlink(missing_ok=True)
            else:
                shutil.rmtree(target, ignore_errors=True)
            raise
        _print_summary(name, summarize(result))
    return 0


def cmd_oracle(args) -> int:
    scheme = args.scheme or "qpsk"
    n = args.n
    n_f = args.nf or 0
    oversampling = args.l or 4
    if n - n_f > EXACT_CE_MAX_SIGNS:
        raise CapacityError(
            f"oracle enumerates 2^(N-n_f) sign vectors; need N - n_f <= {EXACT_CE_MAX_SIGNS} "
            f"(got {n - n_f}); lower --n or raise --nf"
        )
    monotone_violations = guarantee_violations = dominance_violations = 0
    gaps = {v: [] for v in RuleVariant}
    for i in range(args.symbols):
        rng = np.random.default_rng(symbol_seed(args.seed or 0, i))
        problem = make_problem(draw_frame(rng, scheme, n), scheme, n_f, oversampling)
        exact = exact_ce_reduce(problem, EXHAUSTIVE)
        path = np.concatenate([[exact.initial_expectation], exact.trace.expectation])
        if np.any(np.diff(path) > SLACK):
            monotone_violations += 1
        if exact.eta > exact.initial_expectation + SLACK:
            guarantee_violations += 1
        _, eta_min = exhaustive_sign_search(problem)
        closed = {v: ce_reduce(problem, v).eta for v in RuleVariant}
        if eta_min > min([exact.eta, *closed.values()]) + SLACK:
            dominance_violations += 1
        for v, eta in closed.items():
            gaps[v].append(srcm_db(eta) - srcm_db(exact.eta))
    print(f"frames: {args.symbols} scheme={scheme} N={n} n_f={n_f} L={oversampling}")
    print(f"(a) exact-CE monotone trace violations: {monotone_violations}")
    print(f"(b) final eta > initial expectation violations: {guarantee_violations}")
    for v, g in gaps.items():
        g = np.asarray(g)
        print(f"(c) {v.value} minus exact-CE [dB]: mean {_db(g.mean())} "
              f"min {_db(g.min())} max {_db(g.max())}")
    print(f"(d) exhaustive optimum dominance violations: {dominance_violations}")
    return 1 if monotone_violations or guarantee_violations or dominance_violations else 0


def cmd_variance(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",")]
    report = variance_check(args.n, alphas, args.symbols, args.scheme, args.l,
                            args.seed, method=args.method)
    failed = False
    print(f"{'alpha':>6} {'target':>8} {'var_re':>8} {'var_im':>8} {'cov':>8} {'max_dev':>8}")
    for a, r in report.items():
        dev = max(r["max_dev_var_re"], r["max_dev_var_im"], r["max_dev_cov"])
        failed |= dev > args.tol
        print(f"{a:>6.3f} {r['target']:>8.4f} {r['var_re']:>8.4f} {r['var_im']:>8.4f} "
              f"{r['cov']:>8.4f} {dev:>8.4f}")
    return 1 if failed else 0


COMMANDS = {"reduce": cmd_reduce, "simulate": cmd_simulate, "oracle": cmd_oracle, "variance": cmd_variance}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, CapacityError) as exc:
        parser.print_usage(sys.stderr)
        print(f"cmsign: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
