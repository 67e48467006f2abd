"""Command-line front end.

Subcommands ``degrade``, ``restore``, ``metrics`` and ``kernel``.  Results are
printed as ``key=value`` lines.  Exit codes: 0 ok, 1 usage, 2 I/O, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .image import BoxBounds, PgmError, load_pgm, save_pgm
from .metrics import bsnr, noise_std_for_bsnr, psnr, rel_err
from .operators import (
    Kernel,
    KernelError,
    apply_psf_periodic,
    gaussian_noise,
    identity_kernel,
    make_average_kernel,
    make_gaussian_kernel,
    read_kernel,
    write_kernel,
)
from .solver import SolverConfig, SolverDivergenceError, restore

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_kernel_spec(spec: str) -> Kernel:
    """``gaussian:SIZE:STD``, ``average:SIZE``, ``identity`` or ``file:PATH``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "identity" and not rest:
            return identity_kernel()
        if kind == "gaussian":
            size, std = rest.split(":")
            return make_gaussian_kernel(int(size), float(std))
        if kind == "average":
            return make_average_kernel(int(rest))
        if kind == "file" and rest:
            return read_kernel(rest)
    except KernelError:
        raise
    except ValueError as exc:
        raise KernelError(f"bad kernel spec {spec!r}: {exc}") from None
    raise KernelError(f"bad kernel spec {spec!r}; expected gaussian:SIZE:STD, average:SIZE, identity or file:PATH")


def parse_box(text: str) -> BoxBounds:
    try:
        lo, hi = text.split(":")
        return BoxBounds(float(lo), float(hi))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad box {text!r}: {exc}") from None


def fmt(x: float) -> str:
    """Shortest exact decimal, with integral values printed bare (``0``, ``inf``)."""
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def emit(**pairs) -> None:
    for key, value in pairs.items():
        print(f"{key}={value if isinstance(value, str) else fmt(value)}")


def cmd_degrade(args) -> int:
    img = load_pgm(args.inp)
    kernel = parse_kernel_spec(args.kernel)
    blurred = apply_psf_periodic(img, kernel)
    std = args.noise_std if args.noise_std is not None else noise_std_for_bsnr(blurred, args.bsnr)
    if not std >= 0:
        raise UsageError("--noise-std must be nonnegative")
    noise = gaussian_noise(img.shape[0], std, args.seed)
    degraded = blurred + noise
    save_pgm(degraded, args.out)
    emit(noise_std=std, bsnr_db=bsnr(degraded, noise) if std > 0 else math.inf, seed=str(args.seed))
    return EXIT_OK


def cmd_restore(args) -> int:
    g = load_pgm(args.inp)
    kernel = parse_kernel_spec(args.kernel)
    ref = load_pgm(args.ref) if args.ref else None
    if ref is not None and ref.shape != g.shape:
        raise UsageError(f"reference size {ref.shape} does not match input {g.shape}")
    try:
        cfg = SolverConfig(
            alpha=args.alpha,
            sigma=args.sigma,
            group_size=args.group_size,
            inner_iters=args.inner_iters,
            eps_outer=args.eps,
            max_iter=args.max_iter,
            box=args.box,
            dual_step=args.dual_step,
            reference=ref,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not cfg.alpha > 0:
        raise UsageError("--alpha must be positive")
    try:
        f, log = restore(g, kernel, cfg)
    except SolverDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        emit(status="diverged", iteration=str(exc.iteration))
        return EXIT_NUMERIC
    save_pgm(f, args.out)
    if args.log:
        log.write_csv(args.log, include_time=args.log_time)
    emit(
        alpha=cfg.alpha,
        sigma=cfg.sigma,
        iterations=str(log.iterations),
        stop_reason=log.stop_reason,
        objective=log.final.objective,
        rel_change=log.final.rel_change,
    )
    if ref is not None:
        emit(psnr_db=psnr(ref, f), rel_err=rel_err(ref, f))
    return EXIT_OK


def cmd_metrics(args) -> int:
    ref = load_pgm(args.ref)
    est = load_pgm(args.est)
    if ref.shape != est.shape:
        raise UsageError(f"dimension mismatch: {ref.shape} vs {est.shape}")
    emit(psnr_db=psnr(ref, est, args.max_val), rel_err=rel_err(ref, est))
    return EXIT_OK


def cmd_kernel(args) -> int:
    kernel = parse_kernel_spec(args.spec)
    write_kernel(kernel, args.out)
    rows, cols = kernel.shape
    emit(rows=str(rows), cols=str(cols), weight_sum=float(np.sum(kernel.weights)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ogstv", description="OGS-ATV image restoration (ADMM + MM).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    kernel_help = "gaussian:SIZE:STD | average:SIZE | identity | file:PATH"

    p = sub.add_parser("degrade", help="blur an image and add seeded Gaussian noise")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernel", required=True, help=kernel_help)
    noise = p.add_mutually_exclusive_group(required=True)
    noise.add_argument("--noise-std", type=float)
    noise.add_argument("--bsnr", type=float, help="target BSNR in dB")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("restore", help="restore a degraded image")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernel", required=True, help=kernel_help)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma", type=float, default=None, help="ADMM penalty (default alpha/3)")
    p.add_argument("--group-size", type=int, default=3)
    p.add_argument("--inner-iters", type=int, default=5)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--box", type=parse_box, default=BoxBounds(0.0, 255.0), help="LO:HI")
    p.add_argument("--dual-step", type=float, default=1.0)
    p.add_argument("--ref", default=None, help="clean image; prints final PSNR/RelErr")
    p.add_argument("--log", default=None, help="write the convergence CSV here")
    p.add_argument("--log-time", action="store_true", help="fill the time_ms column (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("metrics", help="PSNR and relative error of an estimate")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--max-val", type=float, default=255.0)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("kernel", help="write a kernel text file")
    p.add_argument("--spec", required=True, help=kernel_help)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, KernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PgmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
