"""Command-line front end: simulate, beamform, compare, bench.

`compare` is the main reporting path: it beamforms one dataset with several
methods, matches every method's display contrast to the plain-compounding
reference, and writes per-method PGM images, a CSV quality report, and PNG
figures into the output directory.  All outputs except wall-clock timings
are deterministic for a fixed dataset, configuration, and seed, whatever
the thread count.

Errors exit non-zero with a category-coded message:

    error[data]    unreadable/malformed dataset files
    error[config]  invalid flags, configuration, or parameters
    error[method]  a single method failed inside a comparison (reported,
                   run continues)
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .beamformers import (BaselineParams, JcfParams, MinVarParams, METHOD_NAMES,
                          beamform_image, jcf_weights_direct, jcf_weights_factorized)
from .datapath import to_analytic
from .display import (GAMMA_REFERENCE_DEFAULT, contrast, gamma_compress, export_pgm,
                      image_metrics, match_contrast, write_report_csv)
from .figures import save_image_panel, save_lateral_profiles
from .geometry import ImagingGrid, PlaneWaveSequence, ProbeGeometry
from .io import DatasetFormatError, read_dataset, write_dataset
from .simulator import Phantom, Pulse, make_speckle_phantom, simulate_rf


@dataclass
class MethodSpec:
    """One entry of a comparison: method name, report label, parameters."""

    name: str
    label: str
    params: object | None = None


@dataclass
class RunConfig:
    """Everything a comparison or benchmark run needs besides the dataset."""

    methods: list[MethodSpec]
    grid: ImagingGrid
    reference_gamma: float = GAMMA_REFERENCE_DEFAULT
    outdir: Path = Path(".")
    threads: int = 1
    f_number: float | None = None
    peak_window: tuple[float, float, float, float] | None = None
    background_region: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if not self.methods:
            raise ValueError("configuration must list at least one method")
        if not (0 < self.reference_gamma):
            raise ValueError("reference_gamma must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        self.outdir = Path(self.outdir)


def method_spec(name: str, label: str | None = None, **kwargs) -> MethodSpec:
    """Build a MethodSpec from a name plus loose keyword parameters."""
    name = name.strip().lower()
    if name not in METHOD_NAMES:
        raise ValueError(f"unknown method '{name}' (expected one of {METHOD_NAMES})")
    params: object | None = None
    if name == "jcf":
        alpha = float(kwargs.pop("alpha", 2.0))
        params = JcfParams(alpha=alpha)
        default_label = f"jcf_a{alpha:g}"
    elif name in ("gcf", "pcf", "fdmas"):
        params = BaselineParams(
            gcf_cutoff=int(kwargs.pop("gcf_cutoff", 2)),
            pcf_gamma=float(kwargs.pop("pcf_gamma", 1.0)),
            pcf_sigma0=float(kwargs.pop("pcf_sigma0", BaselineParams().pcf_sigma0)),
            dmas_max_lag=kwargs.pop("dmas_max_lag", None),
        )
        default_label = name
    elif name == "minvar":
        params = MinVarParams(
            subarray_length=kwargs.pop("subarray_length", None),
            axial_half_window=int(kwargs.pop("axial_half_window", 1)),
            diagonal_loading=float(kwargs.pop("diagonal_loading", 0.01)),
        )
        default_label = name
    else:
        default_label = name
    kwargs.pop("label", None)
    if kwargs:
        raise ValueError(f"unused parameters for method '{name}': {sorted(kwargs)}")
    return MethodSpec(name=name, label=label or default_label, params=params)


def _ordered_with_das_first(methods: list[MethodSpec]) -> list[MethodSpec]:
    """The contrast reference is plain compounding, so a das entry always
    runs first; one is inserted when the configuration lists none."""
    ordered = list(methods)
    for i, spec in enumerate(ordered):
        if spec.name == "das":
            return [ordered.pop(i)] + ordered
    return [MethodSpec("das", "das", None)] + ordered


def run_compare(config: RunConfig, dataset, verbose: bool = True) -> list:
    """Beamform, contrast-match, and report every configured method.

    Returns the list of QualityReport rows (failed methods are skipped and
    reported on stderr)."""
    analytic = to_analytic(dataset)
    config.outdir.mkdir(parents=True, exist_ok=True)
    specs = _ordered_with_das_first(config.methods)

    reports = []
    displays = []
    k_ref = None
    for spec in specs:
        start = time.perf_counter()
        try:
            image = beamform_image(analytic, config.grid, spec.name, spec.params,
                                   threads=config.threads, f_number=config.f_number)
            elapsed = time.perf_counter() - start
            if spec.name == "das" and k_ref is None:
                gamma = config.reference_gamma
                display = gamma_compress(image, gamma)
                k_ref = contrast(display)
            else:
                gamma, display = match_contrast(image, k_ref)
        except ValueError as exc:
            print(f"error[method] {spec.label}: {exc}", file=sys.stderr)
            continue
        report = image_metrics(display, config.grid,
                               peak_window=config.peak_window,
                               background_region=config.background_region,
                               algorithm=spec.label, gamma=gamma, elapsed=elapsed)
        reports.append(report)
        displays.append((spec.label, display))
        export_pgm(display, config.outdir / f"{spec.label}.pgm")
        if verbose:
            print(f"{spec.label:>10s}  gamma={gamma:.4f}  K={report.contrast_k:.4f}  "
                  f"t={elapsed:.3f}s")

    angles_deg = np.rad2deg(dataset.sequence.angles)
    m, n, t = dataset.shape
    comments = [
        f"angles={m} span_deg=[{angles_deg.min():.6g},{angles_deg.max():.6g}]",
        f"elements={n} samples={t} sample_rate={dataset.sample_rate:.10g}",
        f"grid_x=[{config.grid.x[0]:.10g},{config.grid.x[-1]:.10g}] nx={config.grid.x.size}",
        f"grid_z=[{config.grid.z[0]:.10g},{config.grid.z[-1]:.10g}] nz={config.grid.z.size}",
        f"speed_of_sound={config.grid.speed_of_sound:.10g}",
        f"reference_gamma={config.reference_gamma:.10g}",
        "methods=" + ",".join(spec.label for spec in specs),
    ]
    write_report_csv(config.outdir / "report.csv", reports, comments)
    if displays:
        save_image_panel(displays, config.grid, config.outdir / "images.png")
        iz_peak = int(np.argmin(np.abs(config.grid.z - reports[0].peak_z)))
        save_lateral_profiles(displays, config.grid, iz_peak,
                              config.outdir / "profiles.png")
    return reports


def run_bench(config: RunConfig, dataset, repeats: int = 3,
              kernel_sizes: tuple[tuple[int, int], ...] = ((8, 8), (16, 16)),
              verbose: bool = True) -> dict:
    """Timing report: full-image das vs factorized jcf, plus the direct
    (quadruple-sum) weight kernel against the factorized one at growing
    matrix sizes.  Medians over `repeats` runs."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    analytic = to_analytic(dataset)
    jcf_spec = next((s for s in config.methods if s.name == "jcf"), None)
    jcf_params = jcf_spec.params if jcf_spec is not None else JcfParams()

    def time_image(method: str, params) -> list[float]:
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            beamform_image(analytic, config.grid, method, params,
                           threads=config.threads, f_number=config.f_number)
            times.append(time.perf_counter() - start)
        return times

    def spread(times: list[float]) -> float:
        med = statistics.median(times)
        return (max(times) - min(times)) / med if med > 0 else 0.0

    das_times = time_image("das", None)
    jcf_times = time_image("jcf", jcf_params)
    result = {
        "image_das_s": statistics.median(das_times),
        "image_das_spread": spread(das_times),
        "image_jcf_s": statistics.median(jcf_times),
        "image_jcf_spread": spread(jcf_times),
    }
    result["image_ratio"] = result["image_jcf_s"] / result["image_das_s"]

    rng = np.random.default_rng(0)
    kernels = []
    for m, n in kernel_sizes:
        s = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        direct_times = []
        for _ in range(repeats):
            start = time.perf_counter()
            jcf_weights_direct(s, jcf_params)
            direct_times.append(time.perf_counter() - start)
        fact_times = []
        inner = 50  # the factorized kernel is too fast to time one call
        for _ in range(repeats):
            start = time.perf_counter()
            for _ in range(inner):
                jcf_weights_factorized(s, jcf_params)
            fact_times.append((time.perf_counter() - start) / inner)
        direct_s = statistics.median(direct_times)
        fact_s = statistics.median(fact_times)
        kernels.append({"m": m, "n": n, "direct_s": direct_s, "factorized_s": fact_s,
                        "ratio": direct_s / fact_s if fact_s > 0 else float("inf")})
    result["kernel"] = kernels

    lines = [
        f"image das      median={result['image_das_s']:.4f}s spread={result['image_das_spread']:.2%}",
        f"image jcf      median={result['image_jcf_s']:.4f}s spread={result['image_jcf_spread']:.2%}",
        f"image jcf/das  ratio={result['image_ratio']:.2f}",
    ]
    for k in kernels:
        lines.append(f"kernel {k['m']}x{k['n']}    direct={k['direct_s']:.6f}s "
                     f"factorized={k['factorized_s']:.6f}s ratio={k['ratio']:.1f}")
    if verbose:
        for line in lines:
            print(line)
    config.outdir.mkdir(parents=True, exist_ok=True)
    (config.outdir / "bench.txt").write_text("\n".join(lines) + "\n")
    return result


# --------------------------------------------------------------------------
# configuration / flag parsing

def _parse_floats(text: str, count: int, what: str) -> list[float]:
    parts = [p for p in text.replace(";", ",").split(",") if p]
    if len(parts) != count:
        raise ValueError(f"{what} expects {count} comma-separated values, got {len(parts)}")
    return [float(p) for p in parts]


def _parse_grid(text: str, speed_of_sound: float) -> ImagingGrid:
    x0, x1, nx, z0, z1, nz = _parse_floats(text, 6, "--grid")
    return ImagingGrid.regular(x0, x1, int(nx), z0, z1, int(nz), speed_of_sound)


def _parse_rect(text: str, what: str) -> tuple[float, float, float, float]:
    vals = _parse_floats(text, 4, what)
    return vals[0], vals[1], vals[2], vals[3]


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read configuration {path}: {exc}") from exc


def _method_specs_from_config(entries) -> list[MethodSpec]:
    specs = []
    for entry in entries:
        if isinstance(entry, str):
            specs.append(method_spec(entry))
        else:
            entry = dict(entry)
            specs.append(method_spec(entry.pop("name"), **entry))
    return specs


def _grid_from_config(cfg: dict, speed_of_sound: float) -> ImagingGrid:
    gx = cfg["x"]
    gz = cfg["z"]
    return ImagingGrid.regular(gx[0], gx[1], int(gx[2]), gz[0], gz[1], int(gz[2]),
                               speed_of_sound)


def _specs_from_args(args, config_data: dict) -> list[MethodSpec]:
    shared = {}
    if args.alpha is not None:
        shared["alpha"] = args.alpha
    gcf_kwargs = {}
    if args.gcf_m0 is not None:
        gcf_kwargs["gcf_cutoff"] = args.gcf_m0
    if args.pcf_gamma is not None:
        gcf_kwargs["pcf_gamma"] = args.pcf_gamma
    if args.pcf_sigma0 is not None:
        gcf_kwargs["pcf_sigma0"] = args.pcf_sigma0
    if args.dmas_l is not None:
        gcf_kwargs["dmas_max_lag"] = args.dmas_l
    mv_kwargs = {}
    if args.mv_l is not None:
        mv_kwargs["subarray_length"] = args.mv_l
    if args.mv_k is not None:
        mv_kwargs["axial_half_window"] = args.mv_k
    if args.mv_delta is not None:
        mv_kwargs["diagonal_loading"] = args.mv_delta

    if args.methods:
        names = [p.strip() for p in args.methods.split(",") if p.strip()]
        specs = []
        for name in names:
            kwargs = {}
            if name == "jcf":
                kwargs.update(shared)
            elif name in ("gcf", "pcf", "fdmas"):
                kwargs.update(gcf_kwargs)
            elif name == "minvar":
                kwargs.update(mv_kwargs)
            specs.append(method_spec(name, **kwargs))
        return specs
    if "methods" in config_data:
        return _method_specs_from_config(config_data["methods"])
    raise ValueError("no methods given: use --methods or a config file")


def _config_from_args(args, dataset) -> RunConfig:
    config_data = _load_json(args.config) if args.config else {}
    speed = args.speed_of_sound or config_data.get("speed_of_sound") \
        or dataset.speed_of_sound
    if args.grid:
        grid = _parse_grid(args.grid, speed)
    elif "grid" in config_data:
        grid = _grid_from_config(config_data["grid"], speed)
    else:
        raise ValueError("no grid given: use --grid x0,x1,nx,z0,z1,nz or a config file")
    specs = _specs_from_args(args, config_data)
    peak_window = _parse_rect(args.peak_window, "--peak-window") if args.peak_window \
        else tuple(config_data["peak_window"]) if "peak_window" in config_data else None
    background = _parse_rect(args.background, "--background") if args.background \
        else tuple(config_data["background_region"]) if "background_region" in config_data else None
    return RunConfig(
        methods=specs,
        grid=grid,
        reference_gamma=args.gamma_ref if args.gamma_ref is not None
        else config_data.get("reference_gamma", GAMMA_REFERENCE_DEFAULT),
        outdir=Path(args.out or config_data.get("out", ".")),
        threads=args.threads if args.threads is not None else int(config_data.get("threads", 1)),
        f_number=args.fnum if args.fnum is not None else config_data.get("f_number"),
        peak_window=peak_window,
        background_region=background,
    )


# --------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    config_data = _load_json(args.config) if args.config else {}
    acq = dict(config_data.get("acquisition", {}))

    elements = args.elements or int(acq.get("elements", 128))
    pitch = args.pitch or float(acq.get("pitch", 3.0e-4))
    center_frequency = args.center_frequency or float(acq.get("center_frequency", 5.0e6))
    bandwidth = args.bandwidth or float(acq.get("bandwidth", 0.6))
    n_angles = args.angles or int(acq.get("angles", 1))
    if args.span_deg:
        lo_deg, hi_deg = _parse_floats(args.span_deg, 2, "--span-deg")
    else:
        span = acq.get("span_deg", [0.0, 0.0])
        lo_deg, hi_deg = float(span[0]), float(span[1])
    speed = args.speed_of_sound or float(acq.get("speed_of_sound", 1540.0))
    sample_rate = args.sample_rate or acq.get("sample_rate")
    sample_rate = float(sample_rate) if sample_rate else 4.0 * center_frequency

    probe = ProbeGeometry.linear(elements, pitch, center_frequency)
    sequence = (PlaneWaveSequence(np.zeros(1)) if n_angles == 1 and lo_deg == hi_deg == 0.0
                else PlaneWaveSequence.uniform(n_angles, lo_deg, hi_deg))
    pulse = Pulse(center_frequency=center_frequency, fractional_bandwidth=bandwidth)

    rows = []
    if args.phantom:
        doc = _load_json(args.phantom)
        rows.extend(np.asarray(doc["scatterers"], dtype=np.float64).reshape(-1, 3))
    for point in args.point or []:
        rows.append(np.asarray(_parse_floats(point, 3, "--point")))
    if args.speckle:
        x0, x1, z0, z1, density = _parse_floats(args.speckle, 5, "--speckle")
        speckle = make_speckle_phantom((x0, x1, z0, z1), density, args.seed)
        rows.extend(speckle.scatterers)
    if not rows:
        raise ValueError("empty phantom: give --phantom, --point, and/or --speckle")
    phantom = Phantom(np.vstack(rows), rng_seed=args.seed)

    dataset = simulate_rf(phantom, probe, sequence, pulse, sample_rate=sample_rate,
                          duration=args.duration, t0=args.t0, speed_of_sound=speed,
                          directivity=args.directivity)
    json_path, bin_path = write_dataset(dataset, args.out)
    m, n, t = dataset.shape
    print(f"wrote {json_path} + {bin_path}: M={m} N={n} T={t} "
          f"scatterers={phantom.count} seed={args.seed}")
    return 0


def _cmd_beamform(args) -> int:
    dataset = read_dataset(args.data)
    args.methods = args.method
    config = _config_from_args(args, dataset)
    spec = config.methods[0]
    analytic = to_analytic(dataset)
    config.outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    image = beamform_image(analytic, config.grid, spec.name, spec.params,
                           threads=config.threads, f_number=config.f_number)
    elapsed = time.perf_counter() - start
    gamma = args.gamma if args.gamma is not None else config.reference_gamma
    display = gamma_compress(image, gamma)
    report = image_metrics(display, config.grid, peak_window=config.peak_window,
                           background_region=config.background_region,
                           algorithm=spec.label, gamma=gamma, elapsed=elapsed)
    export_pgm(display, config.outdir / f"{spec.label}.pgm")
    write_report_csv(config.outdir / "report.csv", [report],
                     [f"method={spec.label} gamma={gamma:.10g}"])
    print(f"{spec.label:>10s}  gamma={gamma:.4f}  K={report.contrast_k:.4f}  t={elapsed:.3f}s")
    return 0


def _cmd_compare(args) -> int:
    dataset = read_dataset(args.data)
    config = _config_from_args(args, dataset)
    run_compare(config, dataset)
    return 0


def _cmd_bench(args) -> int:
    dataset = read_dataset(args.data)
    if not args.methods:
        args.methods = "das,jcf"
    config = _config_from_args(args, dataset)
    run_bench(config, dataset, repeats=args.repeats)
    return 0


def _add_method_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=None, help="jcf coherence exponent (default 2)")
    p.add_argument("--gcf-m0", type=int, default=None, help="gcf spectral cutoff in bins (default 2)")
    p.add_argument("--pcf-gamma", type=float, default=None, help="pcf penalty slope (default 1)")
    p.add_argument("--pcf-sigma0", type=float, default=None,
                   help="pcf nominal phase spread (default pi/sqrt(3))")
    p.add_argument("--dmas-L", dest="dmas_l", type=int, default=None,
                   help="fdmas maximum lag (default N-1)")
    p.add_argument("--mv-L", dest="mv_l", type=int, default=None,
                   help="minvar subarray length (default N//4)")
    p.add_argument("--mv-K", dest="mv_k", type=int, default=None,
                   help="minvar axial half window (default 1)")
    p.add_argument("--mv-delta", dest="mv_delta", type=float, default=None,
                   help="minvar diagonal loading (default 0.01)")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="JSON run configuration")
    p.add_argument("--grid", default=None, help="x0,x1,nx,z0,z1,nz in metres")
    p.add_argument("--gamma-ref", dest="gamma_ref", type=float, default=None,
                   help="display gamma of the das reference (default 0.25)")
    p.add_argument("--peak-window", default=None, help="x0,x1,z0,z1 peak search window [m]")
    p.add_argument("--background", default=None, help="x0,x1,z0,z1 background region [m]")
    p.add_argument("--fnum", type=float, default=None, help="receive f-number mask")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    p.add_argument("--speed-of-sound", dest="speed_of_sound", type=float, default=None,
                   help="override the dataset speed of sound [m/s]")
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwcbf",
        description="Plane-wave compounding beamforming toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate RF channel data for a phantom")
    sim.add_argument("--config", default=None, help="JSON config with an 'acquisition' block")
    sim.add_argument("--elements", type=int, default=None)
    sim.add_argument("--pitch", type=float, default=None, help="element pitch [m]")
    sim.add_argument("--center-frequency", dest="center_frequency", type=float, default=None)
    sim.add_argument("--bandwidth", type=float, default=None,
                     help="fractional bandwidth of the pulse (default 0.6)")
    sim.add_argument("--angles", type=int, default=None, help="number of plane waves")
    sim.add_argument("--span-deg", dest="span_deg", default=None,
                     help="lo,hi steering span in degrees")
    sim.add_argument("--sample-rate", dest="sample_rate", type=float, default=None,
                     help="default 4x centre frequency")
    sim.add_argument("--duration", type=float, default=None,
                     help="record length [s]; default covers every echo")
    sim.add_argument("--t0", type=float, default=0.0)
    sim.add_argument("--speed-of-sound", dest="speed_of_sound", type=float, default=None)
    sim.add_argument("--phantom", default=None,
                     help="JSON phantom: {\"scatterers\": [[x,z,amp],...]}")
    sim.add_argument("--point", action="append", default=None, metavar="X,Z,AMP",
                     help="add a point scatterer (repeatable)")
    sim.add_argument("--speckle", default=None, metavar="X0,X1,Z0,Z1,DENSITY",
                     help="add a seeded diffuse scatterer field")
    sim.add_argument("--directivity", action="store_true",
                     help="apply z/r receive obliquity weighting")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="dataset base path (no extension)")
    sim.set_defaults(func=_cmd_simulate)

    bf = sub.add_parser("beamform", help="beamform one dataset with one method")
    bf.add_argument("--data", required=True, help="dataset base path")
    bf.add_argument("--method", required=True, choices=METHOD_NAMES)
    bf.add_argument("--gamma", type=float, default=None,
                    help="display gamma (default 0.25)")
    _add_method_flags(bf)
    _add_run_flags(bf)
    bf.set_defaults(func=_cmd_beamform)

    cmp_ = sub.add_parser("compare", help="beamform with several methods and report")
    cmp_.add_argument("--data", required=True, help="dataset base path")
    cmp_.add_argument("--methods", default=None,
                      help="comma list, e.g. das,jcf,cf,gcf,pcf,ucf,fdmas,minvar")
    _add_method_flags(cmp_)
    _add_run_flags(cmp_)
    cmp_.set_defaults(func=_cmd_compare)

    bench = sub.add_parser("bench", help="timing report for das vs jcf")
    bench.add_argument("--data", required=True, help="dataset base path")
    bench.add_argument("--methods", default=None, help="methods to configure (default das,jcf)")
    bench.add_argument("--repeats", type=int, default=3)
    _add_method_flags(bench)
    _add_run_flags(bench)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DatasetFormatError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, OSError) as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
