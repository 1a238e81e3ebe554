"""Command line front end: `relu-death <subcommand> ...`."""

import argparse
import sys
from typing import List, Optional

from loguru import logger

from relu_death import __version__
from relu_death.bounds import conv_bounds, lower_bound, min_width, upper_bound
from relu_death.core.network import BiasMode, DataSpec
from relu_death.errors import EmptyTableError, MissingColumnError, RejectedInputError
from relu_death.experiments.config import ExperimentConfig, ExperimentKind
from relu_death.experiments.presets import PresetLoader
from relu_death.experiments.runner import run_experiment
from relu_death.init.schemes import InitScheme
from relu_death.init.seeding import SeedSpec
from relu_death.montecarlo.estimators import (
    estimate_alive_prob,
    estimate_neuron_death_prob,
    estimate_point_alive_prob,
)
from relu_death.montecarlo.variance import neuron_variance_identity, variance_report
from relu_death.plotting import PlotSpec, parse_where, plot

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)


def point_arg(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma separated list of numbers")


def logging_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group()
    group.add_argument("--verbose", action="store_true", help="log debug messages")
    group.add_argument("--quiet", action="store_true", help="log warnings and errors only")
    return parent


def bias_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group()
    group.add_argument("--zero-bias", dest="bias_mode", action="store_const", const=BiasMode.ZERO.value)
    group.add_argument("--free-bias", dest="bias_mode", action="store_const", const=BiasMode.FREE.value)
    return parent


def run_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, help="base seed, an unsigned 64-bit integer")
    parent.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
    parent.add_argument("--M", type=int, help="data points per trial")
    parent.add_argument("--threads", type=int, help="worker threads; never changes results")
    parent.add_argument("--scheme", help="he, xavier, normal:<variance> or uniform:<halfwidth>")
    parent.add_argument("--level", type=float, help="confidence level of the Wilson interval")
    parent.add_argument("--progress", action="store_true", help="show a progress bar per cell")
    return parent


def experiment_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file or run manifest")
    parent.add_argument("--out", help="output directory")
    parent.add_argument("--preset", help="named preset to start from instead of the subcommand's own")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relu-death",
        description="Bounds and Monte Carlo estimates of the probability that a random ReLU network is alive.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    log, bias, run, exp = logging_parent(), bias_parent(), run_parent(), experiment_parent()

    p = sub.add_parser("bounds", parents=[log, bias], help="closed-form lower and upper bounds")
    p.add_argument("--n", type=int, help="width")
    p.add_argument("--k", type=int, required=True, help="depth")
    p.add_argument("--conv", action="store_true", help="bounds for a convolutional network")
    p.add_argument("--channels", type=int, help="channels per conv layer")
    p.add_argument("--kernel", type=int, help="side of the square conv kernel")
    p.add_argument("--gamma", type=float, default=0.5, help="probability that one neuron kills a point")

    p = sub.add_parser("width", parents=[log], help="least width whose lower bound reaches p")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.5)

    p = sub.add_parser("simulate", parents=[log, bias, run], help="one Monte Carlo estimate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--point", action="store_true", help="survival of one fixed point")
    mode.add_argument("--neuron", action="store_true", help="death of one point under one random neuron")
    mode.add_argument("--variance", action="store_true", help="per-layer data-conditional variance")
    mode.add_argument("--identity", action="store_true", help="single-neuron variance identity")
    p.add_argument("--x", type=point_arg, help="comma separated point for --point/--neuron, default all ones")
    p.add_argument("--radius", type=float, help="draw data as a cluster of this radius")

    p = sub.add_parser("grid", parents=[log, bias, run, exp], help="P(n, k) over a width/depth grid")
    p.add_argument("--n", dest="n_values", type=int, nargs="+")
    p.add_argument("--k", dest="k_values", type=int, nargs="+")
    p.add_argument("--radius", type=float)

    p = sub.add_parser("path", parents=[log, bias, run, exp], help="walk the constant lower bound path")
    p.add_argument("--p", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("compare-init", parents=[log, bias, run, exp], help="iid vs sign-flip vs batch-center")
    p.add_argument("--n", dest="n_values", type=int, nargs="+")
    p.add_argument("--k", dest="k_values", type=int, nargs="+")

    p = sub.add_parser("conv-grid", parents=[log, bias, run, exp], help="conv network aliveness grid")
    p.add_argument("--channels", type=int, nargs="+")
    p.add_argument("--kernel", dest="kernels", type=int, nargs="+")
    p.add_argument("--side", type=int)
    p.add_argument("--k", dest="k_values", type=int, nargs="+")

    p = sub.add_parser("plot", parents=[log], help="SVG chart from a result CSV")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--series", nargs="+", required=True)
    p.add_argument("--dashed", nargs="*", help="series drawn dashed, default the bound columns")
    p.add_argument("--out", required=True, help="SVG file to write")
    p.add_argument("--title", default="")
    p.add_argument("--log-x", action="store_true")
    p.add_argument("--log-y", action="store_true")
    p.add_argument("--where", action="append", default=[], metavar="COLUMN=VALUE")
    return parser


def cmd_bounds(args, parser):
    if args.conv:
        if args.channels is None or args.kernel is None:
            parser.error("--conv needs --channels and --kernel")
        pair = conv_bounds(args.channels, args.kernel, args.k)
        lower, upper = pair.lower, pair.upper
    else:
        if args.n is None:
            parser.error("--n is required without --conv")
        lower = lower_bound(args.n, args.k, args.gamma)
        upper = upper_bound(args.n, args.k, args.bias_mode or BiasMode.FREE)
    print(f"lower {lower!r}")
    print(f"upper {upper!r}")


def cmd_width(args, parser):
    print(min_width(args.p, args.k, args.gamma))


def cmd_simulate(args, parser):
    n, k = args.n, args.k
    scheme = InitScheme.parse(args.scheme or "he")
    trials = args.trials or 1024
    M = args.M or 1024
    level = args.level or 0.95
    seed_value = 0 if args.seed is None else args.seed
    x = args.x if args.x is not None else [1.0] * n

    if args.point:
        bias_mode = args.bias_mode or BiasMode.ZERO
        seed = SeedSpec(seed_value, "simulate/point")
        estimate = estimate_point_alive_prob(n, k, scheme, x, trials, seed, bias_mode, level, threads=args.threads)
        print(f"point alive {estimate}")
        print(f"lower {lower_bound(n, k)!r}")
    elif args.neuron:
        bias_mode = args.bias_mode or BiasMode.FREE
        seed = SeedSpec(seed_value, "simulate/neuron")
        estimate = estimate_neuron_death_prob(n, scheme, x, trials, seed, bias_mode, level, threads=args.threads)
        print(f"neuron kills point {estimate}")
    elif args.variance:
        bias_mode = args.bias_mode or BiasMode.ZERO
        seed = SeedSpec(seed_value, "simulate/variance")
        report = variance_report(n, k, scheme, M, trials, seed, bias_mode, threads=args.threads)
        for layer in report.layers:
            print(
                f"layer {layer.layer}: alive_trials={layer.alive_trials} mean_sq_sigma={layer.mean_sq_sigma:.6g} "
                f"mean_sq_lambda={layer.mean_sq_lambda:.6g} normalized={layer.normalized:.6g} "
                f"partial_sum={layer.partial_sigma_sum:.6g}"
            )
        print(f"ratio bound {report.tightness_ratio_bound():.6g}")
    elif args.identity:
        seed = SeedSpec(seed_value, "simulate/identity")
        identity = neuron_variance_identity(n, scheme, trials, seed, M=max(M, n + 1), threads=args.threads)
        print(f"E sigma^2 {identity.lhs:.6g}")
        print(f"1/2 E sigma~^2 - E lambda^2 {identity.rhs_half_pre - identity.rhs_lambda_sq:.6g}")
        print(f"residual {identity.residual:.3g}")
        print(f"E lambda~ {identity.pre_mean:.3g} +/- {identity.pre_mean_stderr:.3g}")
    else:
        bias_mode = args.bias_mode or BiasMode.ZERO
        seed = SeedSpec(seed_value, "simulate/network")
        data_spec = None if args.radius is None else DataSpec(distribution="cluster", radius=args.radius)
        estimate = estimate_alive_prob(
            n, k, scheme, bias_mode, M, trials, seed,
            level=level, data_spec=data_spec, threads=args.threads, progress=args.progress,
        )
        print(f"network alive {estimate}")
        print(f"lower {lower_bound(n, k)!r}")
        print(f"upper {upper_bound(n, k, bias_mode)!r}")


CONFIG_FLAGS = {
    "seed": "base_seed",
    "trials": "trials",
    "M": "M",
    "scheme": "scheme",
    "level": "level",
    "bias_mode": "bias_mode",
    "out": "output_dir",
    "n_values": "n_values",
    "k_values": "k_values",
    "radius": "radius",
    "p": "p",
    "k_max": "k_max",
    "channels": "channels",
    "kernels": "kernels",
    "side": "side",
}


def experiment_config(args, kind: ExperimentKind) -> ExperimentConfig:
    """Preset, then config file, then flags; later sources win."""
    config = PresetLoader().config(args.preset or kind)
    if args.config:
        config = config.merged(ExperimentConfig.read_file(args.config))
    flags = {key: getattr(args, flag) for flag, key in CONFIG_FLAGS.items() if hasattr(args, flag)}
    config = config.merged(flags)
    if config.kind != kind:
        raise RejectedInputError(f"config is for '{config.kind.value}', not '{kind.value}'")
    return config.validate()


def summary_line(row: dict) -> str:
    return " ".join(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}" for key, value in row.items())


def cmd_experiment(args, parser):
    config = experiment_config(args, ExperimentKind(args.command))
    result = run_experiment(
        config, threads=args.threads, progress=args.progress, on_cell=lambda row: print(summary_line(row), flush=True)
    )
    print(f"table {result.csv_path}")
    print(f"manifest {result.manifest_path}")


def cmd_plot(args, parser):
    spec = PlotSpec(
        csv=args.csv,
        x=args.x,
        series=args.series,
        output=args.out,
        title=args.title,
        log_x=args.log_x,
        log_y=args.log_y,
        dashed=args.dashed,
        where=parse_where(args.where),
    )
    plot(spec)
    print(spec.output)


COMMANDS = {
    "bounds": cmd_bounds,
    "width": cmd_width,
    "simulate": cmd_simulate,
    "grid": cmd_experiment,
    "path": cmd_experiment,
    "compare-init": cmd_experiment,
    "conv-grid": cmd_experiment,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        COMMANDS[args.command](args, parser)
    except (RejectedInputError, MissingColumnError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (EmptyTableError, OSError) as e:
        logger.error(str(e))
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        logger.warning("interrupted; rerun the same command to resume from the finished cells")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
