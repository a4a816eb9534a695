"""
Command-line interface of the tensor completion toolkit.

Usage:
    tensor-complete generate --dims 50,50,50 --rank 2,2,2 --seed 1 -o x.dt3
    tensor-complete mask --like x.dt3 --sr 0.2 --seed 2 -o o.dt3
    tensor-complete noise --input x.dt3 --kind gaussian_snr --snr 20 --seed 3 -o y.dt3
    tensor-complete complete --method lrfmtc --input y.dt3 --mask o.dt3 -o xhat.dt3
    tensor-complete evaluate --truth x.dt3 --estimate xhat.dt3
    tensor-complete sweep --grid grid.json --trials 10 -o report.csv

Exit codes: 0 success, 2 argument errors, 3 file format errors,
4 numerical failures. Results go to standard output, diagnostics to
standard error.
"""

import argparse
import math
import sys

from config.logging_config import configure_logging
from core.errors import DegenerateStateError, NumericalError, TensorFormatError
from core.tensors import ObservationMask, check_dims
from experiments.corruption import MaskSpec, NoiseSpec, apply_noise, make_mask
from experiments.harness import SweepGrid, run_sweep
from experiments.metrics import SSIM_WINDOW, psnr, rse, ssim
from experiments.synthetic import DEFAULT_ENTRY_RMS, SyntheticSpec, generate_tucker
from solvers.halrtc import HalrtcConfig, halrtc_solve
from solvers.lrfmtc import SolverConfig, solve
from storage.csv_import import import_csv
from storage.manifest import RunManifest
from storage.reports import write_metrics, write_solve_report, write_sweep
from storage.tensor_file import load_tensor, save_tensor, save_tucker_model
from utils.logger import LoggerFactory, get_component_logger, log_structured

logger = get_component_logger('cli', 'main')

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_FORMAT = 3
EXIT_NUMERICAL = 4


def _triple(cast):
    def parse(text):
        parts = [p.strip() for p in text.split(',')]
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
        try:
            return tuple(cast(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value in {text!r}")
    return parse


def _stem(path):
    path = str(path)
    return path[:-4] if path.lower().endswith('.dt3') else path


def _load_mask(path):
    return ObservationMask.from_indicator(load_tensor(path))


def cmd_generate(args):
    spec = SyntheticSpec(
        dims=args.dims, rank=args.rank, seed=args.seed,
        orthogonalize=not args.no_orthogonalize,
        entry_rms=None if args.raw_scale else args.entry_rms
    )
    tensor, model = generate_tucker(spec)
    save_tensor(args.output, tensor)
    prefix = args.model_prefix or f"{_stem(args.output)}.model"
    save_tucker_model(prefix, model)
    print(f"generated {args.output} dims={','.join(map(str, spec.dims))} "
          f"rank={','.join(map(str, spec.rank))} model={prefix}")
    return EXIT_OK


def cmd_import(args):
    result = import_csv(args.csv, args.dims, mask_out=args.mask_out is not None)
    if args.mask_out is not None:
        tensor, mask = result
        save_tensor(args.mask_out, mask.indicator)
    else:
        tensor = result
    save_tensor(args.output, tensor)
    print(f"imported {args.csv} into {args.output}")
    return EXIT_OK


def cmd_mask(args):
    if args.like:
        dims = load_tensor(args.like).shape
    elif args.dims:
        dims = check_dims(args.dims)
    else:
        raise ValueError("mask needs --dims or --like")
    spec = MaskSpec(kind=args.kind, sampling_ratio=args.sr, l=args.l, seed=args.seed, mode=args.mode)
    mask = make_mask(dims, spec)
    save_tensor(args.output, mask.indicator)
    print(f"mask {args.output} observed={mask.observed_count} sampling_ratio={mask.sampling_ratio!r}")
    return EXIT_OK


def cmd_noise(args):
    x = load_tensor(args.input)
    spec = NoiseSpec(kind=args.kind, snr_db=args.snr, scale=args.scale)
    noisy = apply_noise(x, spec, args.seed)
    save_tensor(args.output, noisy)
    print(f"noise {args.output} kind={spec.kind}")
    return EXIT_OK


def _resolve_run(args):
    """Manifest settings (if any) overridden by the flags given explicitly."""
    manifest = RunManifest.load(args.config) if args.config else None
    method = args.method or (manifest.method if manifest else 'lrfmtc')
    solver = manifest.solver_config() if manifest else SolverConfig()
    halrtc = manifest.halrtc_config() if manifest else HalrtcConfig()

    solver_updates = {
        'alpha': args.alpha, 'L': args.L, 'seed': args.seed,
        'max_outer': args.max_outer, 'max_inner': args.max_inner,
        'outer_tol': args.outer_tol, 'inner_tol': args.inner_tol,
    }
    solver = SolverConfig.model_validate(
        {**solver.model_dump(), **{k: v for k, v in solver_updates.items() if v is not None}}
    )
    halrtc_updates = {'gamma': args.gamma, 'rho': args.rho, 'max_iters': args.max_iters}
    halrtc = HalrtcConfig.model_validate(
        {**halrtc.model_dump(), **{k: v for k, v in halrtc_updates.items() if v is not None}}
    )

    paths = manifest.paths if manifest else {}
    input_path = args.input or paths.get('input')
    mask_path = args.mask or paths.get('mask')
    output_path = args.output or paths.get('output')
    if not (input_path and mask_path and output_path):
        raise ValueError("complete needs --input, --mask and --output (directly or through --config)")
    run = RunManifest.from_configs(
        method, solver=solver, halrtc=halrtc, input=input_path, mask=mask_path, output=output_path
    )
    return run


def cmd_complete(args):
    run = _resolve_run(args)
    y = load_tensor(run.paths['input'])
    mask = _load_mask(run.paths['mask'])
    output = run.paths['output']
    stem = _stem(output)

    if run.method == 'lrfmtc':
        _, model, report = solve(y, mask, run.solver_config())
        estimate = model.reconstruct()
        save_tucker_model(f"{stem}.model", model)
    else:
        estimate, report = halrtc_solve(y, mask, run.halrtc_config())

    save_tensor(output, estimate)
    write_solve_report(f"{stem}.report.csv", report)
    run.save(f"{output}.manifest")
    print(f"completed {output} method={run.method} "
          f"rank={','.join(map(str, report.estimated_rank))} "
          f"iterations={report.outer_iters} converged={str(report.converged).lower()}")
    return EXIT_OK


def cmd_evaluate(args):
    truth = load_tensor(args.truth)
    estimate = load_tensor(args.estimate)
    row = {'rse': rse(truth, estimate), 'psnr': psnr(truth, estimate, args.peak), 'ssim': None}
    if min(truth.shape[:2]) >= SSIM_WINDOW:
        row['ssim'] = ssim(truth, estimate, args.peak)
    else:
        logger.warning(f"Frontal slices {truth.shape[:2]} smaller than {SSIM_WINDOW}x{SSIM_WINDOW}; SSIM skipped")
    if args.output:
        write_metrics(args.output, row)

    def fmt(v):
        return '' if v is None else repr(v) if math.isfinite(v) else str(v)
    print(f"rse={fmt(row['rse'])} psnr={fmt(row['psnr'])} ssim={fmt(row['ssim'])}")
    return EXIT_OK


def cmd_sweep(args):
    grid = SweepGrid.load(args.grid)
    table, trials = run_sweep(grid, trials=args.trials, workers=args.workers)
    trials_file = write_sweep(args.output, table, trials)
    print(f"sweep {args.output} cells={len(table)} trials={len(trials)} "
          f"failures={int(trials['failed'].sum())} per-trial={trials_file}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='tensor-complete',
        description='Low-rank tensor completion with trace-norm regularized factor matrices'
    )
    parser.add_argument('--log-level', default=None, help='debug, info, warning or error')
    parser.add_argument('--log-file', default=None, help='Also write log records to this file')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='Draw a synthetic Tucker tensor')
    p.add_argument('--dims', type=_triple(int), required=True)
    p.add_argument('--rank', type=_triple(int), required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--entry-rms', type=float, default=DEFAULT_ENTRY_RMS, help='Root-mean-square entry of the tensor')
    p.add_argument('--raw-scale', action='store_true', help='Keep the unscaled Gaussian draw')
    p.add_argument('--no-orthogonalize', action='store_true')
    p.add_argument('--model-prefix', default=None)
    p.add_argument('--output', '-o', required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('import', help='Build a tensor from an i1,i2,i3,value CSV')
    p.add_argument('csv')
    p.add_argument('--dims', type=_triple(int), required=True)
    p.add_argument('--mask-out', default=None, help='Accept missing cells and write their mask here')
    p.add_argument('--output', '-o', required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser('mask', help='Draw an observation mask')
    shape = p.add_mutually_exclusive_group(required=True)
    shape.add_argument('--dims', type=_triple(int))
    shape.add_argument('--like', help='Take the dims from this tensor file')
    p.add_argument('--sr', type=float, required=True, help='Sampling ratio in (0, 1]')
    p.add_argument('--kind', choices=['random', 'block_ltuple'], default='random')
    p.add_argument('--l', type=int, default=4, help='Run length of block missingness')
    p.add_argument('--mode', type=int, choices=[1, 2, 3], default=None)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--output', '-o', required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser('noise', help='Corrupt a tensor with noise')
    p.add_argument('--input', required=True)
    p.add_argument('--kind', choices=['none', 'gaussian_snr', 'poisson'], default='gaussian_snr')
    p.add_argument('--snr', type=float, default=20.0, help='Target SNR in dB')
    p.add_argument('--scale', type=float, default=1000.0, help='Poisson intensity scale')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--output', '-o', required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser('complete', help='Complete a partially observed tensor')
    p.add_argument('--method', choices=['lrfmtc', 'halrtc'], default=None)
    p.add_argument('--input', default=None)
    p.add_argument('--mask', default=None)
    p.add_argument('--config', default=None, help='Run manifest to start from')
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--L', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--max-outer', type=int, default=None)
    p.add_argument('--max-inner', type=int, default=None)
    p.add_argument('--outer-tol', type=float, default=None)
    p.add_argument('--inner-tol', type=float, default=None)
    p.add_argument('--gamma', type=float, default=None, help='HaLRTC data-fit weight')
    p.add_argument('--rho', type=float, default=None, help='HaLRTC initial penalty')
    p.add_argument('--max-iters', type=int, default=None, help='HaLRTC iteration cap')
    p.add_argument('--output', '-o', default=None)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser('evaluate', help='RSE, PSNR and SSIM of an estimate')
    p.add_argument('--truth', required=True)
    p.add_argument('--estimate', required=True)
    p.add_argument('--peak', type=float, default=None, help='Dynamic range (default max|truth|)')
    p.add_argument('--output', '-o', default=None, help='Metrics CSV')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('sweep', help='Run a grid of seeded synthetic trials')
    p.add_argument('--grid', required=True, help='JSON grid file')
    p.add_argument('--trials', type=int, default=None)
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--output', '-o', required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def _fail(code, e, command):
    print(f"error: {e}", file=sys.stderr)
    log_structured(
        logger, "error", "cli_error",
        command=command, exit_code=code, error_type=type(e).__name__, error_message=str(e)
    )
    return code


def main(argv=None):
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ARGUMENT

    configure_logging(level=args.log_level)
    if args.log_level:
        LoggerFactory.set_global_log_level(args.log_level)
    if args.log_file:
        LoggerFactory.attach_file(args.log_file, level=args.log_level)

    try:
        return args.func(args)
    except TensorFormatError as e:
        return _fail(EXIT_FORMAT, e, args.command)
    except (NumericalError, DegenerateStateError) as e:
        return _fail(EXIT_NUMERICAL, e, args.command)
    except (ValueError, OSError) as e:
        return _fail(EXIT_ARGUMENT, e, args.command)
    finally:
        if args.log_file:
            LoggerFactory.detach_file()


if __name__ == "__main__":
    sys.exit(main())
