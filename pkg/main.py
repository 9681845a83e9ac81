#!/usr/bin/env python3
"""
falconerlab - exact and experimental tools around Falconer-type quadratic forms
Classifies trivariate quadratics, builds their reductions, checks rotational curvature,
runs finite-field expander censuses and continuous-side fractal estimates
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.config_manager import ConfigManager, RunConfig
from src.errors import BudgetExceededError, PolynomialParseError, ValidationError
from src.finite_field_lab import (
    CENSUS_HEADER,
    FFSet,
    PrimeField,
    SetFamily,
    distance_cover_threshold,
    distance_image,
    expander_census,
    growth_bound,
)
from src.fractal_lab import (
    MASS_HEADER,
    SHARPNESS_HEADER,
    CantorSpec,
    ThresholdChain,
    cantor_cover,
    chain_names,
    chain_preset,
    decay_table,
    dimension_threshold,
    eit_threshold,
    image_measure,
    load_chain,
    sharpness_demo,
)
from src.logger import log_error, log_info, log_step, logger
from src.quadratic_classifier import PRESETS, Quadratic3, classification_report
from src.reduction_builder import (
    BILINEAR_PSI,
    SplitSpec,
    U_SLOTS,
    V_SLOTS,
    corollary_reduction,
    monge_ampere,
    reduce,
    reduction_report,
    split_psi,
)
from src.report_writer import write_csv, write_decay_svg, write_json
from src.symbolic_core import format_rational, parse_poly, to_string

# (report dict, optional csv table) returned by every subcommand
Outcome = Tuple[Dict[str, Any], Optional[Tuple[List[str], List[list]]]]

TABLE_COMMANDS = ("ff-census", "fractal-measure", "sharpness")
FRACTAL_COMMANDS = ("fractal-measure", "sharpness")

DEFAULT_COVERS = {"a": "3:0,2", "b": "2:0,1", "c": "2:0,1"}


def _param(cm: ConfigManager, key: str, value: Any, default: Any = None) -> Any:
    """Flag value, else the replayed value, else the default; the result is recorded in the header"""
    if value is not None:
        cm.set_param(key, value)
    elif cm.get_param(key) is None and default is not None:
        cm.set_param(key, default)
    return cm.get_param(key)


def _require(value: Any, what: str) -> Any:
    if value is None:
        raise ValidationError(f"missing {what}")
    return value


def _parse_cantor(text: str, depth: int) -> CantorSpec:
    """'b:d1,d2,...' at the given depth"""
    try:
        base, digits = text.split(":")
        return CantorSpec(int(base), tuple(int(d) for d in digits.split(",") if d.strip()), depth)
    except ValueError as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"cover spec {text!r} must look like 'base:d1,d2' e.g. '3:0,2'")


def _residues(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"--set must be comma-separated integers, got {text!r}")


def _slot_list(text: Optional[str]) -> Optional[Tuple[str, ...]]:
    if text is None:
        return None
    return tuple(s.strip() for s in text.split(",") if s.strip())


# ============================================================================
# Subcommands
# ============================================================================

def cmd_classify(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    preset = _param(cm, "preset", args.preset)
    if preset is not None:
        f, text = Quadratic3.preset(preset), PRESETS[preset]
    else:
        text = _require(_param(cm, "poly", args.poly), "polynomial (positional or --preset)")
        f = Quadratic3.parse(text)
    report = classification_report(f, text)
    logger.table("classification", ["polynomial", "verdict", "case"],
                 [[report["canonical"], report["verdict"], report["case"] or "-"]])
    return report, None


def cmd_reduction(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    corollary = _param(cm, "corollary", args.corollary)
    if corollary is not None:
        reduction = corollary_reduction(corollary)
    else:
        text = _require(_param(cm, "poly", args.poly), "polynomial")
        reduction = reduce(Quadratic3.parse(text))
    report = reduction_report(reduction)
    logger.table("reduction", ["case", "psi", "determinant", "identity"],
                 [[report["case"], report["psi"], report["determinant"], report["identity_holds"]]])
    return report, None


def cmd_curvature(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    poly = _param(cm, "poly", args.poly)
    u = _param(cm, "u", _slot_list(args.u))
    v = _param(cm, "v", _slot_list(args.v))
    if poly is not None:
        lifting = SplitSpec.lifting()
        split = SplitSpec(u=u or lifting.u, v=v or lifting.v)
        psi = split_psi(Quadratic3.parse(poly), split)
        slots = SplitSpec()
    else:
        psi = parse_poly(_param(cm, "psi", args.psi, BILINEAR_PSI))
        split = slots = SplitSpec(u=u or U_SLOTS, v=v or V_SLOTS)
    det = monge_ampere(psi, slots)
    report = {
        "psi": to_string(psi),
        "split": split.to_dict(),
        "determinant": to_string(det),
        "constant": det.is_constant(),
        "nonvanishing": det.is_constant() and det.constant_value() != 0,
    }
    logger.table("rotational curvature", ["psi", "determinant"], [[report["psi"], report["determinant"]]])
    return report, None


def cmd_ff_census(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    text = _require(_param(cm, "poly", args.poly), "polynomial")
    p = _require(_param(cm, "prime", args.prime), "--prime")
    n = _require(_param(cm, "size", args.size), "--size")
    family = _param(cm, "family", args.family, SetFamily.UNIFORM.value)
    run = config()
    census = expander_census(
        Quadratic3.parse(text), PrimeField(p), n, run.trials, SetFamily(family), run.seed,
        budget=run.budget, bitmap_limit=run.bitmap_limit, threads=run.threads,
    )
    report = census.to_dict()
    report["bound"] = growth_bound(n, p)
    logger.table("expander census", ["trials", "min ratio", "max image"],
                 [[len(census.rows), f"{float(census.min_ratio):.6f}", census.max_image_size]])
    return report, (CENSUS_HEADER, [row.as_csv_row() for row in census.rows])


def cmd_ff_cover(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    q = _require(_param(cm, "prime", args.prime), "--prime")
    field = PrimeField(q)
    threshold = distance_cover_threshold(q)
    members = _param(cm, "set", _residues(args.set))
    if members is None:
        size = _param(cm, "size", args.size, threshold)
        members = list(range(size))
    A = FFSet.of(members, field)
    image = distance_image(A, field, budget=config().budget)
    report = {
        "q": q,
        "set_size": len(A),
        "threshold": threshold,
        "above_threshold": len(A) >= threshold,
        "image_size": len(image),
        "covers_field": len(image) == q,
    }
    log_info(f"|A| = {len(A)}, distance image {len(image)}/{q}", "FFLAB")
    return report, None


def _covers(args, cm: ConfigManager, depth: int):
    specs = {}
    for key in ("a", "b", "c"):
        specs[key] = _parse_cantor(_param(cm, f"cover_{key}", getattr(args, f"cover_{key}"), DEFAULT_COVERS[key]), depth)
    return specs


def cmd_fractal_measure(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    text = _param(cm, "poly", args.poly, "x*y + z")
    f = Quadratic3.parse(text)
    run = config()
    specs = _covers(args, cm, run.depth)
    covers = tuple(cantor_cover(specs[k]) for k in ("a", "b", "c"))
    rows = decay_table(f, covers, covers, run.epsilons, budget=run.fractal_budget)
    report = {
        "polynomial": str(f),
        "covers": {k: {**specs[k].to_dict(), **cover.to_dict()} for k, cover in zip(("a", "b", "c"), covers)},
        "dimension_sum": f"{sum(s.dimension for s in specs.values()):.6f}",
        "image_measure": format_rational(image_measure(f, *covers, budget=run.fractal_budget)),
        "rows": [dict(zip(MASS_HEADER, row.as_csv_row())) for row in rows],
    }
    ratios = [row.ratio for row in rows]
    report["ratio_spread"] = format_rational(max(ratios) / min(ratios)) if min(ratios) else None
    logger.table("epsilon mass", ["epsilon", "mass", "ratio"],
                 [[format_rational(r.epsilon), format_rational(r.mass), f"{float(r.ratio):.4f}"] for r in rows])
    if args.svg:
        write_decay_svg([r.epsilon for r in rows], [r.ratio for r in rows], args.svg,
                        f"mass / eps for {f}", "eps", "mass / eps", log_x=True)
    return report, (MASS_HEADER, [row.as_csv_row() for row in rows])


def cmd_sharpness(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    base = _param(cm, "base", args.base, 3)
    run = config()
    rows = sharpness_demo(run.depth, base=base, budget=run.fractal_budget)
    report = {
        "polynomial": "x*y + z",
        "base": base,
        "rows": [dict(zip(SHARPNESS_HEADER, row.as_csv_row())) for row in rows],
        "note": "C is a finite-depth Cantor cover of dimension log(b-1)/log(b) < 1; the table shows decay, not a limit",
    }
    logger.table("sharpness", ["depth", "measure"],
                 [[r.depth, format_rational(r.measure)] for r in rows[-3:]])
    if args.svg:
        write_decay_svg([r.depth for r in rows], [r.measure for r in rows], args.svg,
                        "|f(A, B, C)| for f = xy + z", "depth", "image measure")
    return report, (SHARPNESS_HEADER, [row.as_csv_row() for row in rows])


def cmd_thresholds(args, cm: ConfigManager, config: Callable[[], RunConfig]) -> Outcome:
    report: Dict[str, Any] = {}
    eit = _param(cm, "eit", args.eit)
    if eit is not None:
        report["eit"] = {"l": eit, "threshold": format_rational(eit_threshold(eit))}
    chain_file = args.chain_file
    if chain_file is not None:
        chain = load_chain(chain_file)
        cm.set_param("chain_file", chain.to_dict())
    elif cm.get_param("chain_file") is not None:
        saved = cm.get_param("chain_file")
        chain = ThresholdChain.from_dict(saved)
    else:
        name = _param(cm, "chain", args.chain, None if eit is not None else "distance-bound")
        chain = chain_preset(name) if name is not None else None
    if chain is not None:
        threshold = dimension_threshold(chain)
        report["chain"] = chain.to_dict()
        report["threshold"] = format_rational(threshold)
        logger.table("dimension threshold", ["chain", "threshold"], [[chain.name, report["threshold"]]])
    return report, None


COMMANDS = {
    "classify": cmd_classify,
    "reduction": cmd_reduction,
    "curvature": cmd_curvature,
    "ff-census": cmd_ff_census,
    "ff-cover": cmd_ff_cover,
    "fractal-measure": cmd_fractal_measure,
    "sharpness": cmd_sharpness,
    "thresholds": cmd_thresholds,
}


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--format", choices=["json", "csv"], help="report format (csv for census and decay tables)")
    common.add_argument("--seed", type=int, help="random seed recorded in the report")
    common.add_argument("--trials", type=int, help="census trials")
    common.add_argument("--budget", type=int,
                        help="work cap: evaluations for finite-field loops, boxes for fractal commands")
    common.add_argument("--threads", type=int, help="worker threads (default: $FALCONERLAB_THREADS or CPU count)")
    common.add_argument("--depth", type=int, help="Cantor depth")
    common.add_argument("--epsilon", action="append", help="epsilon as p/q; repeat for a table")
    common.add_argument("--config", help="json5 config file, or an earlier report to replay")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")
    common.add_argument("--verbose", action="store_true", help="debug output on stderr")

    parser = argparse.ArgumentParser(
        prog="falconerlab",
        description="Falconer-type quadratics: classification, reductions, curvature and experiments",
        epilog="Polynomials: identifiers, integers or decimals, + - * / ^ and parentheses, "
               "e.g. \"2x*y - 3/2 z^2 + 1\"",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="verdict, witness and lemma case")
    p.add_argument("poly", nargs="?")
    p.add_argument("--preset", help=f"one of {', '.join(sorted(PRESETS))}")

    p = sub.add_parser("reduction", parents=[common], help="Psi, F1, F2, bad set and determinant")
    p.add_argument("poly", nargs="?")
    p.add_argument("--corollary", choices=["difference-square", "product-sum", "product-of-sum"])

    p = sub.add_parser("curvature", parents=[common], help="Monge-Ampere determinant of Psi")
    p.add_argument("--psi", help=f"Psi in u1..u3, v1..v3 (default: {BILINEAR_PSI})")
    p.add_argument("--poly", help="use f(x,y,z) - f(xp,yp,zp) split by --u/--v instead of --psi")
    p.add_argument("--u", help="three comma-separated slot names")
    p.add_argument("--v", help="three comma-separated slot names")

    p = sub.add_parser("ff-census", parents=[common], help="image sizes of f on random sets over F_p")
    p.add_argument("poly", nargs="?")
    p.add_argument("--prime", type=int)
    p.add_argument("--size", type=int, help="N = |A| = |B| = |C|")
    p.add_argument("--family", choices=[f.value for f in SetFamily],
                   help="how A, B, C are drawn; geometric needs N <= p - 1 (it lives in F_p*)")

    p = sub.add_parser("ff-cover", parents=[common], help="does (x-y)^2 + (z-t)^2 on A cover F_q")
    p.add_argument("--prime", type=int)
    p.add_argument("--size", type=int, help="A = {0, ..., N-1} (default: the 2 q^(3/4) threshold)")
    p.add_argument("--set", help="explicit comma-separated residues")

    p = sub.add_parser("fractal-measure", parents=[common], help="image measure and epsilon-mass table")
    p.add_argument("poly", nargs="?")
    p.add_argument("--cover-a", dest="cover_a", help="Cantor spec base:digits for x (default 3:0,2)")
    p.add_argument("--cover-b", dest="cover_b", help="Cantor spec for y (default 2:0,1)")
    p.add_argument("--cover-c", dest="cover_c", help="Cantor spec for z (default 2:0,1)")
    p.add_argument("--svg", help="also plot the ratio table")

    p = sub.add_parser("sharpness", parents=[common], help="decay of |f(A,B,C)| for f = xy + z")
    p.add_argument("--base", type=int, help="Cantor base; the middle digit is dropped (default 3)")
    p.add_argument("--svg", help="also plot the decay table")

    p = sub.add_parser("thresholds", parents=[common], help="exact dimension thresholds")
    p.add_argument("--chain", choices=chain_names())
    p.add_argument("--chain-file", dest="chain_file", help="json5 chain description")
    p.add_argument("--eit", type=int, help="even l >= 4: threshold (l+2)/(2l)")

    return parser


def _settings_from_args(args, cm: ConfigManager):
    cm.set_setting("seed", args.seed)
    cm.set_setting("trials", args.trials)
    cm.set_setting("depth", args.depth)
    cm.set_setting("format", args.format)
    if args.epsilon:
        cm.set_setting("epsilons", list(args.epsilon))
    if args.budget is not None:
        cm.set_setting("fractal_budget" if args.command in FRACTAL_COMMANDS else "budget", args.budget)


def run(argv: Sequence[str]) -> int:
    """Run one subcommand; 0 on success, 2 on invalid input, 1 on internal errors"""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)

    logger.configure(quiet=args.quiet, verbose=args.verbose)
    try:
        cm = ConfigManager(args.config)
        _settings_from_args(args, cm)
        log_step(f"running {args.command}", "CLI")
        report, table = COMMANDS[args.command](args, cm, lambda: cm.resolve(args.command, args.threads))
        run_config = cm.resolve(args.command, args.threads)

        if run_config.format == "csv":
            if table is None:
                raise ValidationError(f"csv output is available for {', '.join(TABLE_COMMANDS)}")
            write_csv(table[0], table[1], run_config.header(), args.out)
        else:
            write_json(report, run_config.header(), args.out)
        return 0
    except PolynomialParseError as e:
        log_error(str(e), "CLI")
        log_error(e.hint, "GRAMMAR")
        return 2
    except BudgetExceededError as e:
        log_error(str(e), "CLI")
        log_error(f"required budget: {e.required}", "BUDGET")
        return 2
    except ValidationError as e:
        log_error(str(e), "CLI")
        return 2
    except Exception as e:
        log_error(f"internal error: {e!r}", "CLI")
        return 1


def main():
    """Main entry point"""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
