"""Command-line interface: data ingestion, tests, sweeps, criticism, curves.

Commands
  test       goodness-of-fit test on an ingested dataset
  power-sim  Monte Carlo rejection-rate sweeps (kappa, n, or b)
  criticize  optimized test locations plus held-out p-value on torus data
  efficiency relative Bahadur efficiency curves on the circle

Exit codes: 0 success, 2 usage or specification error, 3 data error,
4 numerical failure.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .criticism import CriticismConfig, OptimizerConfig, criticize
from .efficiency import efficiency_curves
from .errors import (EigendecompositionFailure, GimbalLock, InvalidRotation,
                     MksdError, ParseError, QuadratureUnderResolved,
                     SingularChartPoint)
from .gof import TestConfig, run_test, test_with_selection
from .kernel import (ExpTraceKernel, ProductVonMisesKernel, VonMisesKernel,
                     default_kernel, kernel_grid)
from .manifold import (TWO_PI, ManifoldChart, chart_by_name, matrix_to_euler,
                       rotation_defect, wrap_many)
from .model import (BivariateVonMises, FisherSO3, Uniform, VonMisesCircle)
from .sampling import RngStream, sample_from
from .stein import feature_matrix

INGEST_ROTATION_TOL = 1e-6
GIMBAL_JITTER = 1e-8


# ---------------------------------------------------------------------------
# specification grammar

def parse_model(spec: str, chart: ManifoldChart):
    """model=uniform | vm:k,mu | bvm:k1,k2,mu1,mu2,l12 | exptrace:k | fisher:9 vals."""
    name, _, argstr = spec.partition(":")
    name = name.strip().lower()
    try:
        vals = [float(v) for v in argstr.split(",")] if argstr else []
    except ValueError as exc:
        raise ValueError(f"bad model arguments in {spec!r}: {exc}") from exc
    if name == "uniform":
        return Uniform(chart)
    if name == "vm":
        _expect_chart(chart, "circle", name)
        _expect_args(vals, 2, name)
        return VonMisesCircle(vals[0], vals[1])
    if name == "bvm":
        _expect_chart(chart, "torus2", name)
        _expect_args(vals, 5, name)
        return BivariateVonMises(*vals)
    if name == "exptrace":
        _expect_chart(chart, "so3_euler", name)
        _expect_args(vals, 1, name)
        return FisherSO3.exp_trace(vals[0])
    if name == "fisher":
        _expect_chart(chart, "so3_euler", name)
        _expect_args(vals, 9, name)
        return FisherSO3(np.array(vals).reshape(3, 3))
    raise ValueError(f"unknown model {name!r}")


def parse_kernel(spec: str, chart: ManifoldChart, data=None):
    """kernel=vm:eta | pvm:eta1,eta2 | exptrace:eta | median | auto."""
    name, _, argstr = spec.partition(":")
    name = name.strip().lower()
    if name in ("auto", "median"):
        return name
    try:
        vals = [float(v) for v in argstr.split(",")] if argstr else []
    except ValueError as exc:
        raise ValueError(f"bad kernel arguments in {spec!r}: {exc}") from exc
    if name == "vm":
        _expect_chart(chart, "circle", name)
        _expect_args(vals, 1, name)
        return VonMisesKernel(vals[0])
    if name == "pvm":
        _expect_chart(chart, "torus2", name)
        _expect_args(vals, 2, name)
        return ProductVonMisesKernel(vals[0], vals[1])
    if name == "exptrace":
        _expect_chart(chart, "so3_euler", name)
        _expect_args(vals, 1, name)
        return ExpTraceKernel(vals[0])
    raise ValueError(f"unknown kernel {name!r}")


def _expect_chart(chart, kind, name):
    if chart.kind != kind:
        raise ValueError(f"{name!r} is not defined on manifold {chart.kind!r}")


def _expect_args(vals, count, name):
    if len(vals) != count:
        raise ValueError(f"{name!r} needs {count} parameters, got {len(vals)}")


# ---------------------------------------------------------------------------
# ingestion

def _nearest_rotation(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def ingest(path: str, chart: ManifoldChart, degrees: bool = False,
           directions: int = 0) -> np.ndarray:
    """Read chart points from a CSV file.

    circle: one angle column; torus: two angle columns; SO(3): nine columns,
    a row-major rotation matrix per line.  Angles are radians unless
    ``degrees`` is set; ``directions`` maps integer direction indices m to
    2*pi*m/directions.  Rotation rows on the gimbal singular set are
    perturbed by 1e-8 and re-projected before conversion.
    """
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f for f in line.replace(";", ",").split(",") if f.strip()]
            try:
                vals = np.array([float(f) for f in fields])
            except ValueError:
                raise ParseError(f"non-numeric field in {fields}", line=lineno)
            if chart.kind == "so3_euler":
                rows.append(_ingest_rotation(vals, lineno))
            else:
                if vals.size != chart.dim:
                    raise ParseError(
                        f"expected {chart.dim} columns, got {vals.size}",
                        line=lineno)
                if directions:
                    vals = TWO_PI * vals / directions
                elif degrees:
                    vals = np.deg2rad(vals)
                rows.append(vals)
    if not rows:
        raise ParseError(f"no data rows in {path}")
    return wrap_many(chart, np.vstack(rows))


def _ingest_rotation(vals: np.ndarray, lineno: int) -> np.ndarray:
    if vals.size != 9:
        raise ParseError(f"expected 9 columns for a rotation, got {vals.size}",
                         line=lineno)
    X = vals.reshape(3, 3)
    defect = rotation_defect(X)
    if defect > INGEST_ROTATION_TOL:
        raise InvalidRotation("row is not a rotation matrix", line=lineno,
                              defect=defect)
    X = _nearest_rotation(X)
    jitter_rng = np.random.default_rng(np.random.SeedSequence([lineno]))
    for _ in range(8):
        try:
            return matrix_to_euler(X)
        except GimbalLock:
            X = _nearest_rotation(
                X + GIMBAL_JITTER * jitter_rng.standard_normal((3, 3)))
    raise InvalidRotation("row stuck on the gimbal singular set", line=lineno)


# ---------------------------------------------------------------------------
# output helpers

def _runspec(args, extra=None) -> dict:
    spec = {k: v for k, v in sorted(vars(args).items())
            if k != "func" and v is not None}
    spec["version"] = __version__
    if extra:
        spec.update(extra)
    return spec


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(path, runspec, header, rows):
    lines = [f"# runspec: {json.dumps(runspec, sort_keys=True)}", header]
    lines += [",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                       for v in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# commands

def _build_cfg(args) -> TestConfig:
    return TestConfig(order=args.order, alpha=args.alpha,
                      bootstrap=args.bootstrap, method=args.method,
                      seed=args.seed)


def cmd_test(args) -> int:
    chart = chart_by_name(args.manifold)
    data = ingest(args.input, chart, degrees=args.degrees,
                  directions=args.directions)
    q = parse_model(args.model, chart)
    cfg = _build_cfg(args)
    kspec = parse_kernel(args.kernel, chart)
    if kspec == "auto":
        grid = kernel_grid(default_kernel(chart, data))
        result = test_with_selection(data, q, cfg, grid)
        n_used = data.shape[0] - data.shape[0] // 2
    else:
        k = default_kernel(chart, data) if kspec == "median" else kspec
        result = run_test(data, q, k, cfg)
        n_used = data.shape[0]
    payload = {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "quantile": result.quantile,
        "reject": result.reject,
        "order": cfg.order,
        "alpha": cfg.alpha,
        "bootstrap": cfg.bootstrap,
        "method": cfg.method,
        "seed": cfg.seed,
        "n": int(n_used),
        "kernel_params": list(result.kernel_params),
        "runspec": _runspec(args),
    }
    if args.dump_null:
        payload["null_samples"] = result.null_samples.tolist()
    _write_text(args.output, json.dumps(payload, indent=2) + "\n")
    return 0


def _parse_sweep(sweep: str):
    name, _, argstr = sweep.partition("=")
    name = name.strip().lower()
    if name not in ("kappa", "n", "b"):
        raise ValueError(f"unknown sweep parameter {name!r}; use kappa, n or b")
    vals = [float(v) for v in argstr.split(",") if v.strip()]
    if not vals:
        raise ValueError("sweep needs at least one value")
    return name, vals


def _fisher_b(b: float) -> FisherSO3:
    return FisherSO3(np.array([[1.0, b, 0.0], [b, 1.0, 0.0], [0.0, 0.0, 1.0]]))


def cmd_power_sim(args) -> int:
    chart = chart_by_name(args.manifold)
    name, vals = _parse_sweep(args.sweep)
    kspec = parse_kernel(args.kernel, chart)
    rows = []
    for pi, val in enumerate(vals):
        if name == "kappa":
            _expect_chart(chart, "so3_euler", "kappa sweep")
            null = parse_model(args.model, chart)
            alt = FisherSO3.exp_trace(val)
            n = args.n
        elif name == "b":
            _expect_chart(chart, "so3_euler", "b sweep")
            null = _fisher_b(val)
            alt = parse_model(args.alt, chart)
            n = args.n
        else:
            null = parse_model(args.model, chart)
            alt = parse_model(args.alt, chart)
            n = int(val)
        rejections = 0
        for rep in range(args.reps):
            stream = RngStream(args.seed, ("power-sim", pi, rep))
            data = sample_from(alt, stream, n)
            cfg = TestConfig(order=args.order, alpha=args.alpha,
                             bootstrap=args.bootstrap, method=args.method,
                             seed=args.seed + 7919 * rep)
            if kspec == "auto":
                grid = kernel_grid(default_kernel(chart, data))
                res = test_with_selection(data, null, cfg, grid)
            else:
                k = default_kernel(chart, data) if kspec == "median" else kspec
                res = run_test(data, null, k, cfg)
            rejections += res.reject
        rate = rejections / args.reps
        stderr = float(np.sqrt(rate * (1.0 - rate) / args.reps))
        rows.append((val, rate, stderr))
    _write_csv(args.output, _runspec(args), "parameter,rejection_rate,mc_stderr",
               rows)
    return 0


def cmd_criticize(args) -> int:
    chart = chart_by_name(args.manifold)
    _expect_chart(chart, "torus2", "criticize")
    data = ingest(args.input, chart, degrees=args.degrees,
                  directions=args.directions)
    q = parse_model(args.model, chart)
    kspec = parse_kernel(args.kernel, chart)
    k = default_kernel(chart, data) if kspec in ("auto", "median") else kspec
    cfg = CriticismConfig(J=args.J, alpha=args.alpha, bootstrap=args.bootstrap,
                          seed=args.seed, optimizer=OptimizerConfig())
    result = criticize(data, q, k, cfg)

    prefix = args.output if args.output not in (None, "-") else "criticism"
    runspec = _runspec(args)
    _write_csv(f"{prefix}.locations.csv", runspec, "v1,v2",
               [tuple(map(float, row)) for row in result.locations.points])
    _write_csv(f"{prefix}.objectives.csv", runspec, "rank,objective",
               [(i, float(v)) for i, v in enumerate(result.objectives)])
    grid_rows = _objective_grid(result.train, q, k)
    _write_csv(f"{prefix}.grid.csv", runspec, "v1,v2,objective", grid_rows)
    payload = {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "quantile": result.quantile,
        "reject": result.reject,
        "J": args.J,
        "n_holdout": int(result.holdout.shape[0]),
        "runspec": runspec,
    }
    _write_text(f"{prefix}.result.json", json.dumps(payload, indent=2) + "\n")
    return 0


def _objective_grid(train, q, k, resolution: int = 32):
    """Single-location objective on a lattice, for heatmap plotting."""
    from .criticism import _single_point_objectives, OBJECTIVE_REG
    axis = TWO_PI * np.arange(resolution) / resolution
    vv1, vv2 = np.meshgrid(axis, axis, indexing="ij")
    cand = np.stack([vv1.ravel(), vv2.ravel()], axis=1)
    vals = _single_point_objectives(train, q, k, cand, OBJECTIVE_REG)
    return [(float(c[0]), float(c[1]), float(v)) for c, v in zip(cand, vals)]


def cmd_efficiency(args) -> int:
    if args.sweep:
        name, vals = _parse_sweep(args.sweep)
        if name != "kappa":
            raise ValueError("efficiency sweeps over kappa only")
        kappas = np.asarray(vals)
    else:
        kappas = np.linspace(0.5, 20.0, 40)
    chart = chart_by_name("circle")
    kspec = parse_kernel(args.kernel, chart)
    k = VonMisesKernel(1.0) if kspec in ("auto", "median") else kspec
    curves = efficiency_curves(kappas, orders=(0, 1, 2), k=k)
    den_ratio = curves.denominators[2] / curves.denominators[1]
    rows = [(float(kap), float(e12), float(e01), float(den_ratio))
            for kap, e12, e01 in zip(kappas, curves.relative(1, 2),
                                     curves.relative(0, 1))]
    _write_csv(args.output, _runspec(args),
               "kappa,E_1_2,E_0_1,den_ratio_2_1", rows)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mksd",
        description="Stein goodness-of-fit tests on the circle, torus and SO(3)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, input_required=False):
        p.add_argument("--manifold", required=True,
                       help="circle, torus or so3")
        p.add_argument("--model", default="uniform",
                       help="null model specification")
        p.add_argument("--kernel", default="median",
                       help="kernel specification, or median/auto")
        p.add_argument("--order", type=int, default=1, choices=(0, 1, 2))
        p.add_argument("--alpha", type=float, default=0.01)
        p.add_argument("--bootstrap", type=int, default=1000, metavar="B")
        p.add_argument("--method", choices=("wild", "spectrum"),
                       default="wild")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--input", required=input_required,
                       help="input CSV path")
        p.add_argument("--output", default=None,
                       help="output path (default stdout)")
        p.add_argument("--degrees", action="store_true",
                       help="input angles are degrees")
        p.add_argument("--directions", type=int, default=0, metavar="D",
                       help="input angles are integer direction indices of D")

    p_test = sub.add_parser("test", help="goodness-of-fit test on a dataset")
    common(p_test, input_required=True)
    p_test.add_argument("--dump-null", action="store_true",
                        help="include the null samples in the output")
    p_test.set_defaults(func=cmd_test)

    p_power = sub.add_parser("power-sim", help="Monte Carlo rejection sweeps")
    common(p_power)
    p_power.add_argument("--sweep", required=True,
                         help="kappa=v1,v2,... | n=v1,... | b=v1,...")
    p_power.add_argument("--alt", default="uniform",
                         help="data-generating model for n and b sweeps")
    p_power.add_argument("--n", type=int, default=100,
                         help="sample size for kappa and b sweeps")
    p_power.add_argument("--reps", type=int, default=100)
    p_power.set_defaults(func=cmd_power_sim)

    p_crit = sub.add_parser("criticize", help="optimized test locations")
    common(p_crit, input_required=True)
    p_crit.add_argument("--J", type=int, default=10,
                        help="number of test locations")
    p_crit.set_defaults(func=cmd_criticize)

    p_eff = sub.add_parser("efficiency", help="relative efficiency curves")
    common(p_eff)
    p_eff.add_argument("--sweep", default=None, help="kappa=v1,v2,...")
    p_eff.set_defaults(func=cmd_efficiency)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InvalidRotation, FileNotFoundError, IsADirectoryError,
            PermissionError) as exc:
        print(f"mksd: data error: {exc}", file=sys.stderr)
        return 3
    except (EigendecompositionFailure, QuadratureUnderResolved,
            SingularChartPoint, np.linalg.LinAlgError) as exc:
        print(f"mksd: numerical failure: {exc}", file=sys.stderr)
        return 4
    except (MksdError, ValueError) as exc:
        print(f"mksd: {exc}", file=sys.stderr)
        return 2


def cli_main():
    sys.exit(main())


if __name__ == "__main__":
    cli_main()
