"""
RCP Toolkit — CLI Entry Point

Commands:
  gen         Generate a measurement matrix, sparse signal(s) or synthetic image
  rip         Restricted isometry / orthogonality constants of a matrix
  rcp         Angle bounds for random signal pairs
  orthant     Eigenbasis sign diagnostics for random signal pairs
  wishart     Gram eigenvalue campaigns and normality tests
  pushbroom   Column-wise measurement curves of an image
  selftest    Run every invariant campaign, print pass counts
  history     Show recent runs

Exit codes: 0 success, 1 invalid arguments, 2 numeric failure,
3 selftest failure.
"""
import sys
import argparse
import math
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from config.settings import LOG_FILE, LOG_LEVEL, OUTPUT_DIR, THREADS
from core.errors import InvalidArgumentError, NumericFailureError

# Configure logging
logger.remove()
logger.add(
    sys.stderr,
    format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
    level=LOG_LEVEL,
)
logger.add(
    str(LOG_FILE),
    rotation="5 MB",
    retention="7 days",
    level="DEBUG",
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2
EXIT_SELFTEST = 3


class ToolkitArgumentParser(argparse.ArgumentParser):
    """argparse that reports bad usage as an invalid-argument error (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidArgumentError(message)


def _manifest(args, **seeds):
    from core.manifest import RunManifest

    arguments = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out_dir", "threads")}
    return RunManifest(subcommand=args.command, arguments=arguments, seeds={"seed": args.seed, **seeds})


def _out_dir(args) -> Path:
    return Path(args.out_dir) if args.out_dir else OUTPUT_DIR / args.command


def _zero_band(args):
    return tuple(args.zero_band) if getattr(args, "zero_band", None) else None


def _load_or_generate_matrix(args):
    from core.ensembles import MeasurementMatrix
    from core.image_io import read_matrix
    from core.pushbroom import build_matrix
    from core.utils import child_seed

    if getattr(args, "matrix_file", None):
        return MeasurementMatrix(read_matrix(args.matrix_file))
    return build_matrix(args.matrix, args.M, args.N, child_seed(args.seed, 1))


# ══════════════════════════════════════════════════════════════════════
# Commands
# ══════════════════════════════════════════════════════════════════════

def cmd_gen(args):
    """Generate a matrix, signal(s) or synthetic image."""
    from core.ensembles import (
        gen_bernoulli01_matrix, gen_gaussian_matrix, gen_signal_pair,
        gen_sparse_signal, gen_synthetic_image,
    )
    from core.image_io import write_json, write_matrix, write_pgm
    from core.manifest import staged_output

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        info = {"kind": args.kind, "seed": args.seed}
        if args.kind == "gaussian":
            phi = gen_gaussian_matrix(args.M, args.N, args.seed)
            write_matrix(phi.entries, run.path("matrix.csv"))
            info.update(phi.describe())
        elif args.kind == "bernoulli01":
            phi = gen_bernoulli01_matrix(args.M, args.N, args.seed, normalize=args.normalize)
            write_matrix(phi.entries, run.path("matrix.csv"))
            info.update(phi.describe())
        elif args.kind == "signal":
            signal = gen_sparse_signal(args.N, args.K, args.seed)
            write_matrix(signal.values, run.path("signal.csv"))
            info.update({"N": args.N, "K": args.K, "support": signal.support.tolist()})
        elif args.kind == "pair":
            x_u, x_v = gen_signal_pair(args.N, args.K, args.seed, mode=args.pair_mode, noise=args.noise)
            write_matrix(np.column_stack([x_u.values, x_v.values]), run.path("pair.csv"))
            info.update({"N": args.N, "K": args.K, "mode": args.pair_mode,
                         "support_u": x_u.support.tolist(), "support_v": x_v.support.tolist()})
        else:
            image = gen_synthetic_image(args.N, args.L, args.smoothness, args.seed, zero_band=_zero_band(args))
            write_matrix(image, run.path("image.csv"))
            write_pgm(image, run.path("image.pgm"))
            info.update({"N": args.N, "L": args.L, "smoothness": args.smoothness})
        write_json(info, run.path("run.json"))

    print(f"\n✅ Generated {args.kind} → {_out_dir(args)}")
    return EXIT_OK, manifest


def cmd_rip(args):
    """Compute δ_K (exact or Monte-Carlo) and optionally θ_{K,K'}."""
    from core.image_io import write_json
    from core.manifest import staged_output
    from core.ripcalc import ric_exact, ric_monte_carlo, roc_exact
    from core.spectra import gram_spectrum_json, support_spectrum

    phi = _load_or_generate_matrix(args)
    N = phi.cols
    mode = args.mode
    if mode == "auto":
        mode = "exact" if math.comb(N, args.K) <= args.cap else "monte_carlo"
        logger.info(f"C({N}, {args.K}) = {math.comb(N, args.K)} supports → {mode}")

    if mode == "exact":
        result = ric_exact(phi, args.K, cap=args.cap, threads=args.threads)
    else:
        result = ric_monte_carlo(phi, args.K, args.trials, args.seed, threads=args.threads)
        logger.warning(f"δ_{args.K} = {result.delta:.6f} is a lower bound ({result.supports_examined} supports sampled)")

    report = {
        "matrix": phi.describe(),
        "ric": result.to_dict(),
        "witness_spectrum": gram_spectrum_json(support_spectrum(phi, result.witness_support)),
    }
    if args.K_prime:
        report["roc"] = roc_exact(phi, args.K, args.K_prime, cap=args.cap, threads=args.threads).to_dict()

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        write_json(report, run.path("rip.json"))

    print(f"\n✅ δ_{args.K} = {result.delta:.10f} ({result.mode}, witness {list(result.witness_support)})")
    if "roc" in report:
        print(f"   θ_{args.K},{args.K_prime} = {report['roc']['theta']:.10f}")
    return EXIT_OK, manifest


def cmd_rcp(args):
    """Evaluate every bound interval on random signal pairs."""
    from core.ensembles import gen_signal_pair
    from core.image_io import write_json, write_table
    from core.manifest import staged_output
    from core.rcpcalc import batch_evaluate
    from core.ripcalc import ric_exact
    from core.utils import child_seed

    phi = _load_or_generate_matrix(args)
    pairs = [
        gen_signal_pair(phi.cols, args.K, child_seed(args.seed, 1000 + i), mode=args.pair_mode, noise=args.noise)
        for i in range(args.pairs)
    ]
    delta_K = None
    if args.global_delta:
        delta_K = ric_exact(phi, min(2 * args.K, phi.cols), threads=args.threads).delta

    reports = batch_evaluate(phi, pairs, delta_K=delta_K, threads=args.threads, solver=args.solver)
    table = pd.DataFrame([r.to_row(i) for i, r in enumerate(reports)])

    summary = {"pairs": len(reports), "delta_source": reports[0].delta_source if reports else None}
    for name in ("jl", "jl_guaranteed", "ip", "ip_support", "orthogonal", "orthogonal_guaranteed"):
        flags = [r.containment[name] for r in reports if r.containment[name] is not None]
        summary[f"{name}_evaluated"] = len(flags)
        summary[f"{name}_contained"] = sum(flags)
    summary["sandwich_holds"] = sum(r.sandwich.holds for r in reports)

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        write_table(table, run.path("rcp_pairs.csv"))
        write_json(summary, run.path("summary.json"))

    print(f"\n✅ {len(reports)} pairs evaluated")
    print(f"   guaranteed JL interval: {summary['jl_guaranteed_contained']}/{summary['jl_guaranteed_evaluated']}")
    print(f"   closed-form JL interval: {summary['jl_contained']}/{summary['jl_evaluated']}")
    print(f"   sandwich holds: {summary['sandwich_holds']}/{len(reports)}")
    return EXIT_OK, manifest


def cmd_orthant(args):
    """Sign diagnostics in the Gram eigenbasis for random pairs."""
    from core.ensembles import gen_signal_pair
    from core.image_io import write_json
    from core.manifest import staged_output
    from core.orthant import angle_chain, expand_inner, minus_term_diag, orthant_ratio, rotate_pair
    from core.pushbroom import build_matrix
    from core.spectra import support_spectrum
    from core.utils import child_seed

    instances = []
    for i in range(args.instances):
        s = child_seed(args.seed, i)
        phi = build_matrix(args.matrix, args.M, args.N, child_seed(s, 0))
        x_u, x_v = gen_signal_pair(args.N, args.K, child_seed(s, 1), mode="correlated", noise=args.noise)
        joint = np.union1d(x_u.support, x_v.support)
        spectrum = support_spectrum(phi, joint, solver=args.solver)
        pair = rotate_pair(spectrum, x_u, x_v, joint)
        record = {"index": i, "k1": pair.k1, "k2": pair.k2, "cos_alpha": pair.cos_alpha,
                  "expanded_inner": expand_inner(spectrum, pair)}
        if pair.inner > 0:
            ratio = orthant_ratio(pair)
            record.update({"ratio": ratio["ratio"], "bound": ratio["bound"], "ratio_within": ratio["within"]})
            record.update(minus_term_diag(spectrum, pair, pair.cos_alpha).to_dict())
            record.update(angle_chain(pair))
        instances.append(record)

    valid = [r for r in instances if "ratio" in r]
    summary = {
        "instances": len(instances),
        "valid": len(valid),
        "ratio_within": sum(r["ratio_within"] for r in valid),
        "both_conditions": sum(r["condition_A"] and r["condition_B"] for r in valid),
        "full_sandwich": sum(r["full_upper_holds"] and r["full_lower_holds"] for r in valid),
    }

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        write_json({"summary": summary, "instances": instances}, run.path("orthant.json"))

    print(f"\n✅ {summary['valid']}/{summary['instances']} instances with cos α > 0")
    print(f"   orthant ratio within bound: {summary['ratio_within']}/{summary['valid']}")
    print(f"   both sign conditions: {summary['both_conditions']}/{summary['valid']}")
    return EXIT_OK, manifest


def cmd_wishart(args):
    """Single campaign (JSON) or pass-rate scan (CSV)."""
    from core.image_io import write_json, write_table
    from core.manifest import staged_output
    from core.wishstat import campaign_report, pass_rate_scan, run_campaign

    manifest = _manifest(args)
    if args.scan:
        rows = pass_rate_scan(args.N_values or [args.N], args.M_grid, args.supp_grid, args.campaigns,
                              args.seed, solver=args.solver, threads=args.threads)
        with staged_output(_out_dir(args), manifest) as run:
            write_table(pd.DataFrame(rows, columns=["N", "M", "supp_size", "pass_rate"]), run.path("wishart_scan.csv"))
        print(f"\n✅ {len(rows)} cells scanned")
        return EXIT_OK, manifest

    campaign = run_campaign(args.M, args.N, args.supp, args.trials, args.seed, solver=args.solver, threads=args.threads)
    report = campaign_report(campaign, pooled=args.pooled)
    with staged_output(_out_dir(args), manifest) as run:
        write_json(report, run.path("wishart.json"))

    print(f"\n✅ KS batch pass rate {report['ks_pass_rate']:.3f} over {report['ks_batches']} batches")
    print(f"   JB batch pass rate {report['jb_pass_rate']:.3f} over {report['jb_batches']} batches")
    return EXIT_OK, manifest


def cmd_pushbroom(args):
    """Curves and adjacent-pair bounds of a push-broom acquisition."""
    from core.image_io import write_json, write_table
    from core.manifest import staged_output
    from core.pushbroom import ensemble_experiment, run_pushbroom

    if args.image == "ensemble":
        result = ensemble_experiment(seed=args.seed, solver=args.solver, threads=args.threads)
    else:
        result = run_pushbroom(
            image=None if args.image == "synthetic" else args.image,
            N=args.N, L=args.L, M=args.M,
            smoothness=args.smoothness,
            matrix_kind=args.matrix,
            basis_kind=args.basis,
            seed=args.seed,
            zero_band=_zero_band(args),
            solver=args.solver,
            threads=args.threads,
        )

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        write_table(result.curves_frame(), run.path("curves.csv"))
        write_table(result.rcp_frame(), run.path("rcp_table.csv"))
        write_json(result.info, run.path("run.json"))

    print(f"\n✅ {result.X.shape[1]} columns measured, corr(μ_X, μ_Y) = {result.info['mu_correlation_XY']:.4f}")
    return EXIT_OK, manifest


def cmd_selftest(args):
    """Run every invariant campaign and print per-check pass counts."""
    from core.image_io import write_json
    from core.manifest import staged_output
    from core.selftest import run_selftest

    results = run_selftest(seed=args.seed, scale=args.scale, threads=args.threads, only=args.only)

    print("\nSelftest")
    print("=" * 60)
    for r in results:
        icon = "✅" if r.ok else "❌"
        print(f"  {icon} {r.name:<24} {r.passed}/{r.total}")

    manifest = _manifest(args)
    with staged_output(_out_dir(args), manifest) as run:
        write_json([r.to_dict() for r in results], run.path("selftest.json"))
    return (EXIT_OK if all(r.ok for r in results) else EXIT_SELFTEST), manifest


def cmd_history(args):
    """Show recent runs."""
    from database.models import init_database, recent_runs

    init_database()
    runs = recent_runs(limit=args.limit, subcommand=args.subcommand)
    print(f"\nLast {len(runs)} runs")
    print("=" * 60)
    for record in runs:
        started = record.started_at.strftime("%Y-%m-%d %H:%M:%S") if record.started_at else "?"
        digest = (record.manifest_digest or "")[:12]
        print(f"  #{record.id} {started} {record.subcommand:<10} {record.status:<16} exit={record.exit_code} {digest}")
    return EXIT_OK, None


# ══════════════════════════════════════════════════════════════════════
# Parser
# ══════════════════════════════════════════════════════════════════════

def build_parser() -> argparse.ArgumentParser:
    common = ToolkitArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="Output directory (default: $RCP_OUTPUT_DIR/<command>)")
    common.add_argument("--threads", type=int, default=THREADS, help="Worker cap")
    common.add_argument("--seed", type=int, default=0, help="Root seed")

    solver = ToolkitArgumentParser(add_help=False)
    solver.add_argument("--solver", choices=["jacobi", "lapack"], default=None,
                        help="Eigensolver (default: $RCP_EIGEN_SOLVER)")

    dims = ToolkitArgumentParser(add_help=False)
    dims.add_argument("--M", type=int, default=16, help="Measurements (rows)")
    dims.add_argument("--N", type=int, default=32, help="Signal length (columns)")
    dims.add_argument("--K", type=int, default=3, help="Sparsity")
    dims.add_argument("--matrix", choices=["gaussian", "bernoulli01"], default="gaussian")

    parser = ToolkitArgumentParser(
        description="Restricted conformal property toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""\
Examples:
  python main.py gen --kind gaussian --M 8 --N 16 --seed 1
  python main.py rip --M 8 --N 16 --K 3
  python main.py rcp --pairs 1000 --pair-mode disjoint
  python main.py wishart --M 128 --N 256 --supp 16 --trials 1000 --seed 42
  python main.py pushbroom --image synthetic --smoothness 0.95 --seed 7
  python main.py selftest --scale 0.01
  python main.py history
""",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    # gen
    gen_parser = subparsers.add_parser("gen", parents=[common], help="Generate inputs")
    gen_parser.add_argument("--kind", choices=["gaussian", "bernoulli01", "signal", "pair", "image"], default="gaussian")
    gen_parser.add_argument("--M", type=int, default=16)
    gen_parser.add_argument("--N", type=int, default=32)
    gen_parser.add_argument("--K", type=int, default=3)
    gen_parser.add_argument("--L", type=int, default=64)
    gen_parser.add_argument("--smoothness", type=float, default=0.95)
    gen_parser.add_argument("--normalize", action="store_true", help="Unit-norm 0-1 columns")
    gen_parser.add_argument("--pair-mode", choices=["independent", "disjoint", "correlated"], default="independent")
    gen_parser.add_argument("--noise", type=float, default=0.1)
    gen_parser.add_argument("--zero-band", type=int, nargs=2, metavar=("START", "STOP"))

    # rip
    rip_parser = subparsers.add_parser("rip", parents=[common, dims], help="RIC / ROC")
    rip_parser.add_argument("--matrix-file", help="CSV matrix instead of a generated one")
    rip_parser.add_argument("--K-prime", type=int, default=0, help="Also compute θ_{K,K'}")
    rip_parser.add_argument("--mode", choices=["auto", "exact", "monte_carlo"], default="auto")
    rip_parser.add_argument("--trials", type=int, default=10_000)
    rip_parser.add_argument("--cap", type=int, default=None)

    # rcp
    rcp_parser = subparsers.add_parser("rcp", parents=[common, dims, solver], help="Pair bounds")
    rcp_parser.add_argument("--matrix-file", help="CSV matrix instead of a generated one")
    rcp_parser.add_argument("--pairs", type=int, default=1000)
    rcp_parser.add_argument("--pair-mode", choices=["independent", "disjoint", "correlated"], default="independent")
    rcp_parser.add_argument("--noise", type=float, default=0.1)
    rcp_parser.add_argument("--global-delta", action="store_true", help="Use exact δ_2K instead of joint-support δ")

    # orthant
    orth_parser = subparsers.add_parser("orthant", parents=[common, dims, solver], help="Sign diagnostics")
    orth_parser.add_argument("--instances", type=int, default=1000)
    orth_parser.add_argument("--noise", type=float, default=0.1)

    # wishart
    wish_parser = subparsers.add_parser("wishart", parents=[common, solver], help="Eigenvalue statistics")
    wish_parser.add_argument("--M", type=int, default=128)
    wish_parser.add_argument("--N", type=int, default=256)
    wish_parser.add_argument("--supp", type=int, default=16)
    wish_parser.add_argument("--trials", type=int, default=1000)
    wish_parser.add_argument("--pooled", action="store_true", help="Also test the pooled sample")
    wish_parser.add_argument("--scan", action="store_true", help="Pass-rate grid instead of one campaign")
    wish_parser.add_argument("--N-values", type=int, nargs="+")
    wish_parser.add_argument("--M-grid", type=int, nargs="+", default=[32, 64, 128])
    wish_parser.add_argument("--supp-grid", type=int, nargs="+", default=[1, 4, 16, 32])
    wish_parser.add_argument("--campaigns", type=int, default=100, help="KS batches per cell")

    # pushbroom
    pb_parser = subparsers.add_parser("pushbroom", parents=[common, solver], help="Push-broom curves")
    pb_parser.add_argument("--image", default="synthetic", help="PGM/CSV path, 'synthetic' or 'ensemble'")
    pb_parser.add_argument("--matrix", choices=["gaussian", "bernoulli01"], default="gaussian")
    pb_parser.add_argument("--basis", choices=["none", "dct"], default="none")
    pb_parser.add_argument("--N", type=int, default=None)
    pb_parser.add_argument("--L", type=int, default=None)
    pb_parser.add_argument("--M", type=int, default=None)
    pb_parser.add_argument("--smoothness", type=float, default=None)
    pb_parser.add_argument("--zero-band", type=int, nargs=2, metavar=("START", "STOP"))

    # selftest
    st_parser = subparsers.add_parser("selftest", parents=[common], help="Invariant campaigns")
    st_parser.add_argument("--scale", type=float, default=1.0, help="Campaign size multiplier")
    st_parser.add_argument("--only", nargs="+", help="Run only these checks")

    # history
    hist_parser = subparsers.add_parser("history", help="Show recent runs")
    hist_parser.add_argument("--limit", type=int, default=20, help="Number of records")
    hist_parser.add_argument("--subcommand", help="Filter by subcommand")

    return parser


def _apply_defaults(args):
    from config.settings import (
        ENUMERATION_CAP, PUSHBROOM_L, PUSHBROOM_M, PUSHBROOM_N, PUSHBROOM_SMOOTHNESS, PUSHBROOM_SOLVER,
    )

    if args.command == "rip" and args.cap is None:
        args.cap = ENUMERATION_CAP
    if args.command == "pushbroom":
        args.N = PUSHBROOM_N if args.N is None else args.N
        args.L = PUSHBROOM_L if args.L is None else args.L
        args.M = PUSHBROOM_M if args.M is None else args.M
        for name in ("N", "L", "M"):
            if getattr(args, name) < 1:
                raise InvalidArgumentError(f"--{name} must be >= 1, got {getattr(args, name)}")
        args.smoothness = PUSHBROOM_SMOOTHNESS if args.smoothness is None else args.smoothness
        args.solver = args.solver or PUSHBROOM_SOLVER
    if getattr(args, "threads", 1) < 1:
        raise InvalidArgumentError(f"--threads must be >= 1, got {args.threads}")


def _record_start(args) -> Optional[int]:
    if args.command == "history":
        return None
    try:
        from database.models import init_database, start_run

        init_database()
        arguments = {k: v for k, v in vars(args).items() if k != "func"}
        return start_run(args.command, arguments, getattr(args, "seed", None), str(_out_dir(args)))
    except Exception as e:
        logger.debug(f"Run history unavailable: {e}")
        return None


def _record_finish(run_id: Optional[int], status: str, code: int, manifest=None, message: str = None):
    if run_id is None:
        return
    try:
        from database.models import finish_run

        digest = manifest.combined_digest if manifest is not None and manifest.outputs else None
        finish_run(run_id, status, code, manifest_digest=digest, message=message)
    except Exception as e:
        logger.debug(f"Could not update run history: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except InvalidArgumentError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_INVALID

    if args.command is None:
        parser.print_help()
        return EXIT_INVALID

    commands = {
        "gen": cmd_gen,
        "rip": cmd_rip,
        "rcp": cmd_rcp,
        "orthant": cmd_orthant,
        "wishart": cmd_wishart,
        "pushbroom": cmd_pushbroom,
        "selftest": cmd_selftest,
        "history": cmd_history,
    }

    run_id = None
    try:
        _apply_defaults(args)
        run_id = _record_start(args)
        code, manifest = commands[args.command](args)
        status = {EXIT_OK: "ok", EXIT_SELFTEST: "selftest_failed"}.get(code, "error")
        _record_finish(run_id, status, code, manifest)
        return code
    except InvalidArgumentError as e:
        logger.error(f"Invalid argument: {e}")
        _record_finish(run_id, "invalid", EXIT_INVALID, message=str(e))
        return EXIT_INVALID
    except NumericFailureError as e:
        logger.error(f"Numeric failure: {e}")
        _record_finish(run_id, "numeric", EXIT_NUMERIC, message=str(e))
        return EXIT_NUMERIC
    except KeyboardInterrupt:
        print("\n⛔ Interrupted")
        _record_finish(run_id, "error", EXIT_INVALID, message="interrupted")
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"Error: {e}")
        _record_finish(run_id, "error", EXIT_INVALID, message=str(e))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
