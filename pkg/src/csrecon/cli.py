"""Command-line driver: ``csrecon <subcommand> ...``.

Every subcommand that writes a file also writes ``<out>.manifest.json``
with the resolved parameters so the output can be regenerated.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import io
from .matching import CsrParams
from .metrics import evaluate
from .noise import IntensityLevel, NoiseCovariance, estimate_noise_variances, poisson_corrupt
from .reconstruction import reconstruct_csr, reconstruct_wiener_image
from .scenes import parse_scene_spec, synthetic_scene
from .spectral import (
    DEFAULT_ALPHA,
    HyperCube,
    MultiCube,
    SpectralGrid,
    forward_capture,
    generate_flat_top_bank,
    normalize_peak,
)

log = logging.getLogger("csrecon")

EXIT_FILE_ERROR = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:  # pragma: no cover
        return "unknown"


def write_manifest(out_path, command: str, params: dict, inputs: dict, outputs: list,
                   seed=None, duration: float = 0.0) -> str:
    manifest = {
        "subcommand": command,
        "parameters": params,
        "inputs": inputs,
        "outputs": [os.fspath(p) for p in outputs],
        "seed": seed,
        "duration_s": duration,
        "version": _version(),
    }
    path = io.sidecar(out_path, ".manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _expect(cube, kind, path):
    if not isinstance(cube, kind):
        what = "hyperspectral" if kind is HyperCube else "multispectral"
        raise io.FormatError(f"{path}: expected a {what} cube")
    return cube


def cmd_gen_filters(args) -> dict:
    try:
        grid = SpectralGrid(args.lambda_min, args.lambda_max, args.bands)
        bank = generate_flat_top_bank(grid, args.channels, args.sharpness)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    io.write_filter_csv(args.out, bank)
    return {
        "params": {"bands": args.bands, "lambda_min": args.lambda_min,
                   "lambda_max": args.lambda_max, "channels": args.channels,
                   "sharpness": args.sharpness},
        "inputs": {}, "outputs": [args.out],
    }


def cmd_simulate(args) -> dict:
    bank = io.read_filter_csv(args.filters)
    if args.scene.startswith("synthetic"):
        try:
            opts = parse_scene_spec(args.scene)
            scene = synthetic_scene(grid=bank.grid, **opts)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        scene_out = io.sidecar(args.out, ".scene.scub")
        io.write_cube(scene_out, scene)
        # Round through float32 so the reference cube matches what later steps read.
        scene = io.read_cube(scene_out)
    else:
        scene = _expect(io.read_cube(args.scene), HyperCube, args.scene)
        scene_out = None
    try:
        capture = forward_capture(scene, bank)
    except ValueError as exc:
        raise io.FormatError(f"{args.filters}: {exc}") from exc
    capture, scale = normalize_peak(capture)
    io.write_cube(args.out, capture)
    filters_out = io.sidecar(args.out, ".filters.csv")
    io.write_filter_csv(filters_out, bank.scaled(scale))
    outputs = [args.out, filters_out] + ([scene_out] if scene_out else [])
    return {
        "params": {"scene": args.scene, "capture_scale": scale},
        "inputs": {"filters": args.filters},
        "outputs": outputs,
    }


def cmd_add_noise(args) -> dict:
    try:
        level = IntensityLevel(args.level)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    clean = _expect(io.read_cube(args.input), MultiCube, args.input)
    try:
        noisy = poisson_corrupt(clean, level, args.seed)
    except ValueError as exc:
        raise io.FormatError(f"{args.input}: {exc}") from exc
    io.write_cube(args.out, noisy)
    return {"params": {"level": args.level}, "inputs": {"in": args.input},
            "outputs": [args.out], "seed": args.seed}


def cmd_estimate_noise(args) -> dict:
    noisy = _expect(io.read_cube(args.input), MultiCube, args.input)
    cov = estimate_noise_variances(noisy)
    print(",".join(repr(float(v)) for v in cov.variances))
    return {}


def _parse_noise(spec: str, n_channels: int, noisy: MultiCube) -> NoiseCovariance:
    if spec == "auto":
        return estimate_noise_variances(noisy)
    try:
        values = [float(v) for v in spec.split(",")]
        if len(values) == 1:
            values = values * n_channels
        return NoiseCovariance(np.array(values))
    except ValueError as exc:
        raise UsageError(f"--noise: {exc}") from exc


def cmd_reconstruct(args) -> dict:
    try:
        params = CsrParams(block_size=args.block, window=args.window, step=args.step,
                           tau_c=args.tau_c, mu_c=args.mu_c, alpha=args.alpha,
                           distance_norm=args.distance)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    threads = args.threads or os.cpu_count() or 1
    noisy = _expect(io.read_cube(args.input), MultiCube, args.input)
    bank = io.read_filter_csv(args.filters)
    cov = _parse_noise(args.noise, bank.n_channels, noisy)
    if cov.n_channels != bank.n_channels or noisy.n_channels != bank.n_channels:
        raise UsageError(
            f"channel counts disagree: image {noisy.n_channels}, filters {bank.n_channels}, "
            f"noise {cov.n_channels}"
        )
    if args.method == "wiener":
        cube = reconstruct_wiener_image(noisy, bank, cov, params.alpha)
    else:
        cube = reconstruct_csr(noisy, bank, cov, params, threads=threads)
    io.write_cube(args.out, cube)
    return {
        "params": {"method": args.method, "noise_variances": cov.variances.tolist(),
                   "block": params.block_size, "window": params.window, "step": params.step,
                   "tau_c": params.tau_c, "mu_c": params.mu_c, "alpha": params.alpha,
                   "distance": params.distance_norm, "threads": threads},
        "inputs": {"in": args.input, "filters": args.filters},
        "outputs": [args.out],
    }


def cmd_evaluate(args) -> dict:
    ref = _expect(io.read_cube(args.reference), HyperCube, args.reference)
    est = _expect(io.read_cube(args.estimate), HyperCube, args.estimate)
    try:
        report = evaluate(ref, est)
    except ValueError as exc:
        raise io.FormatError(str(exc)) from exc
    text = report.to_text()
    record = io.sidecar(args.report, ".json")
    with open(args.report, "w") as fh:
        fh.write(text)
    with open(record, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    sys.stdout.write(text)
    return {"params": {}, "inputs": {"reference": args.reference, "estimate": args.estimate},
            "outputs": [args.report, record]}


def cmd_render(args) -> dict:
    cube = io.read_cube(args.input)
    try:
        io.render_channel_pgm(cube, args.band, args.out)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return {"params": {"band": args.band}, "inputs": {"in": args.input}, "outputs": [args.out]}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csrecon", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-filters", help="write a synthetic flat-top filter bank CSV")
    g.add_argument("--bands", type=int, default=49)
    g.add_argument("--lambda-min", type=float, default=440.0)
    g.add_argument("--lambda-max", type=float, default=920.0)
    g.add_argument("--channels", type=int, default=9)
    g.add_argument("--sharpness", type=float, default=3.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_filters)

    s = sub.add_parser("simulate", help="noiseless, peak-normalized capture of a scene")
    s.add_argument("--scene", required=True,
                   help="SCUB hyperspectral file or 'synthetic[:key=value,...]'")
    s.add_argument("--filters", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("add-noise", help="Poisson shot noise at intensity level l")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--level", type=float, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_add_noise)

    e = sub.add_parser("estimate-noise", help="print per-channel noise variances")
    e.add_argument("--in", dest="input", required=True)
    e.set_defaults(func=cmd_estimate_noise)

    r = sub.add_parser("reconstruct", help="reconstruct a hyperspectral cube")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--filters", required=True)
    r.add_argument("--method", choices=("wiener", "csr"), default="csr")
    r.add_argument("--noise", default="auto",
                   help="'auto' or comma-separated per-channel variances")
    r.add_argument("--block", type=int, default=8)
    r.add_argument("--window", type=int, default=33)
    r.add_argument("--step", type=int, default=3)
    r.add_argument("--tau-c", type=float, default=6.0)
    r.add_argument("--mu-c", type=int, default=25)
    r.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    r.add_argument("--distance", choices=("mean", "sum"), default="mean")
    r.add_argument("--threads", type=int, default=0, help="0 uses all CPUs")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    v = sub.add_parser("evaluate", help="spectral angle and PSNR report")
    v.add_argument("--reference", required=True)
    v.add_argument("--estimate", required=True)
    v.add_argument("--report", required=True)
    v.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("render", help="write one band as a 16-bit PGM")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--band", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.FormatError, OSError) as exc:
        print(f"{parser.prog} {args.command}: {exc}", file=sys.stderr)
        return EXIT_FILE_ERROR
    if result:
        write_manifest(result["outputs"][0], args.command, result["params"], result["inputs"],
                       result["outputs"], seed=result.get("seed"),
                       duration=time.perf_counter() - start)
    log.debug("%s finished in %.3fs", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
