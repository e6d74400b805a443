"""Command line entry point, `torus-cosine <command> ...`.

Every command prints machine readable output: one JSON record per line, or a CSV table.
Numerical failures print a JSON error record and exit with 1; usage errors exit with 2.
"""

from typing import Any, Dict, Iterable, List, Optional, Union
import argparse
import json
import logging
import os
import re
import sys
import numpy as np
import pandas as pd

from torus_cosine import acceptance
from torus_cosine.config import OUTPUT_FORMATS, RunConfig, load_run_config
from torus_cosine.core_geometry import (
    OrbitParams,
    Plane,
    gluck_warner,
    gluck_warner_pairing,
    orbit_representative,
    pairing,
    parse_plane,
    quasi_j_coefficients,
    quasi_j_reduction,
    quasi_j_vector,
    reduce_to_orbit,
)
from torus_cosine.cosine_operator import (
    TorusInvariantFunction,
    annihilation_report,
    apply_cosine,
    function_from_csv,
    legendre_product,
    check_grid,
    self_adjointness_sweep,
)
from torus_cosine.crofton_fredholm import (
    R2_NORMS,
    SECOND_KIND_KERNELS,
    SECOND_KIND_RHS,
    WEIGHTS,
    metric_from_r2_norm,
    profile_from_csv,
    solve_first_kind,
    solve_second_kind,
)
from torus_cosine.errors import TorusCosineError
from torus_cosine.hermitian_range import (
    COMPLEX_METRICS,
    SAMPLE_FORM,
    form_from_csv,
    hermitian_metric,
    is_hermitian_metric,
)
from torus_cosine.klain_complex_l1 import (
    KLAIN_METHODS,
    klain_function,
    klain_grid,
    klain_l1_orbit,
    klain_structure_report,
    volume_ratio,
)
from torus_cosine.legendre_spectral import (
    BUILTIN_FUNCTIONS,
    abs_sum_report,
    delta_torus_coefficients,
    gauss_legendre,
    moments_2d,
)

logger = logging.getLogger(__name__)

Table = Union[pd.DataFrame, List[Dict[str, Any]]]


class UsageError(Exception):
    """A well formed command with arguments that make no sense together."""


# ===== Output =====


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def emit(table: Table, output_format: str, stream=None) -> None:
    """Writes records as JSON lines or as a CSV table with full float precision."""
    stream = stream if stream is not None else sys.stdout
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame.from_records(table)
    if output_format == "csv":
        frame.to_csv(stream, index=False, float_format="%.17g", lineterminator="\n")
        return
    for record in frame.to_dict(orient="records"):
        stream.write(json.dumps(record, default=_plain) + "\n")


def emit_record(record: Dict[str, Any], stream=None) -> None:
    stream = stream if stream is not None else sys.stdout
    stream.write(json.dumps(record, default=_plain) + "\n")


def save_table(table: pd.DataFrame, path: str, output_format: str = "csv") -> None:
    print(f"Saving {os.path.abspath(path)}", file=sys.stderr)
    with open(path, "w", newline="") as stream:
        emit(table, output_format, stream)


# ===== Argument helpers =====


def plane_argument(text: str) -> Plane:
    try:
        return parse_plane(text)
    except ValueError as error:
        raise argparse.ArgumentTypeError(str(error))


def index_pairs(text: str) -> List[tuple]:
    """Parses "4,0;6,2" into [(4, 0), (6, 2)]."""
    pairs = []
    for chunk in filter(None, (part.strip() for part in text.split(";"))):
        numbers = [int(token) for token in re.split(r"[,\s]+", chunk) if token]
        if len(numbers) != 2 or min(numbers) < 0:
            raise argparse.ArgumentTypeError(f"Expected 'm,n' pairs, got {chunk!r}")
        pairs.append(tuple(numbers))
    if not pairs:
        raise argparse.ArgumentTypeError("No index pairs given")
    return pairs


def angle(value: float, config: RunConfig) -> float:
    return float(np.deg2rad(value)) if config.degrees else float(value)


def named_function(name: str) -> TorusInvariantFunction:
    """A builtin function of the heights, p<m>p<n>, klain, or a CSV grid file."""
    match = re.fullmatch(r"p(\d+)p(\d+)", name)
    if match:
        return legendre_product(int(match.group(1)), int(match.group(2)))
    if name == "klain":
        return TorusInvariantFunction(klain_function, "klain")
    if name in BUILTIN_FUNCTIONS:
        return TorusInvariantFunction(BUILTIN_FUNCTIONS[name], name)
    if name.endswith(".csv"):
        return function_from_csv(name)
    raise UsageError(f"Unknown function {name!r}; use one of {sorted(BUILTIN_FUNCTIONS)}, klain, p<m>p<n> or a CSV file")


# ===== Commands =====


def run_orbit(args: argparse.Namespace, config: RunConfig) -> int:
    if args.action == "represent":
        params = OrbitParams(angle(args.theta, config), angle(args.psi, config))
        emit_record({"theta": params.theta, "psi": params.psi, "plane": orbit_representative(params).to_list()})
        return 0
    if args.plane is None:
        raise UsageError(f"orbit {args.action} needs --plane")
    if args.action == "reduce":
        params, element = reduce_to_orbit(args.plane)
        emit_record(
            {
                "theta": params.theta,
                "psi": params.psi,
                "alpha": element.alpha,
                "beta": element.beta,
                "in_square": params.in_square,
            }
        )
    else:
        coefficients = quasi_j_coefficients(args.plane)
        vector, (r, s) = quasi_j_vector(args.plane)
        theta, psi, element = quasi_j_reduction(args.plane)
        emit_record(
            {
                "A": coefficients.A,
                "B": coefficients.B,
                "C": coefficients.C,
                "r": r,
                "s": s,
                "vector": vector,
                "theta": theta,
                "psi": psi,
                "alpha": element.alpha,
                "beta": element.beta,
            }
        )
    return 0


def run_gw(args: argparse.Namespace, config: RunConfig) -> int:
    coordinates = gluck_warner(args.plane)
    emit_record({"x": coordinates.x, "phi1": coordinates.phi1, "y": coordinates.y, "phi2": coordinates.phi2})
    return 0


def run_pairing(args: argparse.Namespace, config: RunConfig) -> int:
    emit_record(
        {
            "pairing": pairing(args.plane, args.other),
            "gluck_warner": gluck_warner_pairing(gluck_warner(args.plane), gluck_warner(args.other)),
        }
    )
    return 0


def run_legendre(args: argparse.Namespace, config: RunConfig) -> int:
    rule = gauss_legendre(config.quadrature_order)
    if args.action == "moments":
        function = named_function(args.function)
        moments = moments_2d(function, args.degree, rule, split_diagonals=not args.no_split)
        emit((moments.coefficients() if args.normalized else moments).to_frame(), config.output_format)
    elif args.action == "delta":
        coefficients = delta_torus_coefficients(args.k, args.l)
        emit((coefficients if args.normalized else coefficients.raw()).to_frame(), config.output_format)
    else:
        emit(abs_sum_report(args.degree, rule), config.output_format)
    return 0


def run_cosine(args: argparse.Namespace, config: RunConfig) -> int:
    if args.action == "apply":
        image = apply_cosine(named_function(args.f), config.quadrature_order)
        x, y = check_grid(args.grid_size)
        emit(pd.DataFrame({"x": x, "y": y, "value": image(x, y)}), config.output_format)
    elif args.action == "kernel-check":
        report = annihilation_report(
            args.indices, config.quadrature_order, annihilation=config.tolerance("annihilation")
        )
        emit(report, config.output_format)
        return 0 if report["pass"].all() else 1
    else:
        sweep = self_adjointness_sweep(args.pairs, args.degree, config.seed)
        emit(sweep, config.output_format)
        return 0 if sweep["pass"].all() else 1
    return 0


def run_crofton(args: argparse.Namespace, config: RunConfig) -> int:
    if args.metric in R2_NORMS:
        profile = metric_from_r2_norm(R2_NORMS[args.metric], args.metric)
    elif args.metric.endswith(".csv"):
        profile = profile_from_csv(args.metric)
    else:
        raise UsageError(f"Unknown metric {args.metric!r}; use one of {sorted(R2_NORMS)} or a CSV file")
    solution = solve_first_kind(
        profile,
        args.nodes,
        args.reg,
        args.weight,
        discrepancy=args.discrepancy,
        condition_limit=config.tolerance("condition"),
    )
    if args.output:
        save_table(solution.to_frame(), args.output, config.output_format)
    else:
        emit(solution.to_frame(), config.output_format)
    emit_record(solution.diagnostics(), sys.stdout if args.output else sys.stderr)
    return 0


def run_fredholm(args: argparse.Namespace, config: RunConfig) -> int:
    for name, table in (("kernel", SECOND_KIND_KERNELS), ("rhs", SECOND_KIND_RHS)):
        if getattr(args, name) not in table:
            raise UsageError(f"Unknown {name} {getattr(args, name)!r}; use one of {sorted(table)}")
    solution = solve_second_kind(
        args.lam,
        SECOND_KIND_KERNELS[args.kernel],
        SECOND_KIND_RHS[args.rhs],
        n=args.nodes,
        interval=(args.a, args.b),
        condition_limit=config.tolerance("condition"),
    )
    emit(solution.to_frame(), config.output_format)
    logger.info(f"Residual {solution.residual:.3e}, condition {solution.condition:.3e}")
    return 0


def run_klain(args: argparse.Namespace, config: RunConfig) -> int:
    if args.action == "grid":
        emit(klain_grid(args.grid, args.method or "elliptic"), config.output_format)
    elif args.action == "structure":
        _, frame = klain_structure_report(
            args.degree, gauss_legendre(config.quadrature_order), config.tolerance("kernel_moment")
        )
        emit(frame, config.output_format)
    else:
        theta, psi = angle(args.theta, config), angle(args.psi, config)
        method = "quadrature" if args.method is None else args.method
        value = klain_l1_orbit(theta, psi, method)
        record = {"theta": theta, "psi": psi, "Kl": value.value, "method": value.method, "err": value.estimated_error}
        if args.c is not None:
            record["volume_ratio"] = volume_ratio(theta, value.value, args.c)
        emit_record(record)
    return 0


def run_hermitian(args: argparse.Namespace, config: RunConfig) -> int:
    if args.metric in COMPLEX_METRICS:
        metric = COMPLEX_METRICS[args.metric]
    elif args.metric == "hermitian":
        metric = hermitian_metric(SAMPLE_FORM)
    elif args.metric.endswith(".csv"):
        metric = hermitian_metric(form_from_csv(args.metric))
    else:
        raise UsageError(f"Unknown metric {args.metric!r}; use one of {sorted(COMPLEX_METRICS)}, hermitian or a CSV file")
    verdict, residual, form = is_hermitian_metric(
        metric, args.dim, config.tolerance("hermitian"), args.samples, config.seed
    )
    record = form.to_record()
    record.update({"residual": residual, "verdict": verdict})
    emit_record(record)
    return 0


def run_verify(args: argparse.Namespace, config: RunConfig) -> int:
    table = acceptance.run_acceptance(config, args.only)
    emit(table, config.output_format)
    return 0 if table["passed"].all() else 1


# ===== Parser =====


def common_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", default=None, help="key-value config file, flags win")
    parser.add_argument("--order", type=int, default=None, help="quadrature nodes per axis per cell")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default=None, help="output format")
    parser.add_argument("--seed", type=int, default=None, help="seed of randomized sweeps")
    parser.add_argument("--degrees", action="store_true", default=None, help="read angles in degrees")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = common_options()
    parser = argparse.ArgumentParser(
        prog="torus-cosine", description="Torus reduced cosine transform on real 2-planes of C^2"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    orbit = commands.add_parser("orbit", parents=[common], help="torus orbits of planes")
    orbit.add_argument("action", choices=("reduce", "represent", "quasi-j"))
    orbit.add_argument("--plane", type=plane_argument, default=None, help="8 reals, v1 then v2")
    orbit.add_argument("--theta", type=float, default=0.0)
    orbit.add_argument("--psi", type=float, default=0.0)
    orbit.set_defaults(handler=run_orbit)

    gw = commands.add_parser("gw", parents=[common], help="Gluck-Warner coordinates")
    gw.add_argument("--plane", type=plane_argument, required=True)
    gw.set_defaults(handler=run_gw)

    pair = commands.add_parser("pairing", parents=[common], help="|<P, Q>| of two planes")
    pair.add_argument("--plane", type=plane_argument, required=True)
    pair.add_argument("--other", type=plane_argument, required=True)
    pair.set_defaults(handler=run_pairing)

    legendre = commands.add_parser("legendre", parents=[common], help="Legendre moments")
    legendre.add_argument("action", choices=("moments", "delta", "abs-report"))
    legendre.add_argument("--function", default="max")
    legendre.add_argument("--degree", type=int, default=4)
    legendre.add_argument("--k", type=int, default=3)
    legendre.add_argument("--l", type=int, default=3)
    legendre.add_argument("--normalized", action="store_true", help="print coefficients instead of raw moments")
    legendre.add_argument("--no-split", action="store_true", help="plain product rule on the square")
    legendre.set_defaults(handler=run_legendre)

    cosine = commands.add_parser("cosine", parents=[common], help="the torus reduced cosine transform")
    cosine.add_argument("action", choices=("apply", "kernel-check", "selfadjoint"))
    cosine.add_argument("--f", default="one", help="one, max, klain, p<m>p<n> or a CSV grid")
    cosine.add_argument("--grid-size", type=int, default=9, help="points per axis of the output grid")
    cosine.add_argument("--indices", type=index_pairs, default=index_pairs("4,0;0,4;6,2;2,6;6,0;2,0"))
    cosine.add_argument("--degree", type=int, default=6)
    cosine.add_argument("--pairs", type=int, default=20)
    cosine.set_defaults(handler=run_cosine)

    crofton = commands.add_parser("crofton", parents=[common], help="Crofton densities of torus invariant metrics")
    crofton.add_argument("action", choices=("solve",))
    crofton.add_argument("--metric", default="euclid", help="euclid, l1, linf or a CSV profile")
    crofton.add_argument("--nodes", type=int, default=64)
    crofton.add_argument("--reg", type=float, default=None, help="Tikhonov parameter; automatic when omitted")
    crofton.add_argument("--weight", choices=WEIGHTS, default="sphere")
    crofton.add_argument("--discrepancy", action="store_true", help="choose reg by the discrepancy principle")
    crofton.add_argument("--output", default=None, help="file for the density table, written in --format")
    crofton.set_defaults(handler=run_crofton)

    fredholm = commands.add_parser("fredholm", parents=[common], help="second kind Fredholm equations")
    fredholm.add_argument("action", choices=("solve2",))
    fredholm.add_argument("--lambda", dest="lam", type=float, default=1.0)
    fredholm.add_argument("--kernel", default="xy")
    fredholm.add_argument("--rhs", default="x")
    fredholm.add_argument("--nodes", type=int, default=32)
    fredholm.add_argument("--a", type=float, default=0.0)
    fredholm.add_argument("--b", type=float, default=1.0)
    fredholm.set_defaults(handler=run_fredholm)

    klain = commands.add_parser("klain", parents=[common], help="Klain function of complex l1")
    klain.add_argument("action", nargs="?", choices=("grid", "structure", "orbit"), default="grid")
    klain.add_argument("--grid", type=int, default=5)
    klain.add_argument("--method", choices=KLAIN_METHODS, default=None)
    klain.add_argument("--degree", type=int, default=8)
    klain.add_argument("--theta", type=float, default=0.0)
    klain.add_argument("--psi", type=float, default=0.0)
    klain.add_argument("--c", type=float, default=None, help="volume constant for the volume ratio")
    klain.set_defaults(handler=run_klain)

    hermitian = commands.add_parser("hermitian", parents=[common], help="Hermitian range test")
    hermitian.add_argument("action", choices=("fit",))
    hermitian.add_argument("--dim", type=int, default=2)
    hermitian.add_argument("--metric", default="euclid", help="euclid, l1, hermitian or a CSV form")
    hermitian.add_argument("--samples", type=int, default=1000)
    hermitian.set_defaults(handler=run_hermitian)

    verify = commands.add_parser("verify", parents=[common], help="run the acceptance suite")
    verify.add_argument(
        "--only", type=lambda text: [int(part) for part in text.split(",")], default=None, help="e.g. 1,2,9"
    )
    verify.set_defaults(handler=run_verify)
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)


def main(argv: Optional[Iterable[str]] = None) -> int:
    """Runs one command and returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as error:
        return int(error.code or 0)
    configure_logging(args.verbose)

    try:
        config = load_run_config(
            args.config,
            quadrature_order=args.order,
            output_format=args.format,
            seed=args.seed,
            degrees=args.degrees,
        )
        return args.handler(args, config)
    except TorusCosineError as error:
        emit_record(error.to_record())
        return 1
    except (UsageError, ValueError, KeyError, FileNotFoundError) as error:
        emit_record({"error": type(error).__name__, "message": str(error)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
