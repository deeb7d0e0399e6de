"""Command-line interface.

Subcommands cover the full experiment loop:

- generate: synthesize a manifold dataset (ambient X plus generating Z)
- fit: fit nppe/snppe/npp/onpp/lle on a data file
- transform: apply a saved model to new samples
- eval: residual variance of one or more embeddings against references
- bench: transform timing over a sweep of batch sizes
- plot: render a 2-D embedding as an SVG scatter
- pipeline: generate, split, fit, transform, and eval in one run

Every run writes a manifest echoing the resolved configuration, so a run can
be reproduced from its outputs alone. Exit codes are a stable contract:
0 success, 2 usage or configuration error, 3 data or IO error, 4 numerical
failure.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .embed import (
    DEFAULT_EXTRA_PAIRS,
    DEFAULT_REG,
    DEFAULT_RIDGE,
    MODEL_FORMAT_VERSION,
    LinearModel,
    PolynomialModel,
    fit_lle,
    fit_nppe,
    fit_npp,
    fit_onpp,
    load_model,
    resolve_k,
    save_model,
)
from .errors import ConfigError, DataError, NumericalError
from .features import HADAMARD, KRONECKER, expand_matrix
from .metrics import DISTANCE, ENTRIES, residual_variance, time_transform

MANIFEST_FORMAT_VERSION = 1
METHODS = ("nppe", "snppe", "npp", "onpp", "lle")

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

# Five anchor colors interpolated linearly for the plot command.
_PALETTE = (
    (0.267004, 0.004874, 0.329415),
    (0.229739, 0.322361, 0.545706),
    (0.127568, 0.566949, 0.550556),
    (0.369214, 0.788888, 0.382914),
    (0.993248, 0.906157, 0.143936),
)


def _positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _fmt_for(path):
    return "pemb" if Path(path).suffix == ".pemb" else "csv"


def _write_manifest(path, command, config, outputs, results=None):
    doc = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "command": command,
        "config": config,
        "outputs": outputs,
    }
    if results is not None:
        doc["results"] = results
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(args):
    out = _ensure_dir(args.out)
    sample = datasets.generate(args.name, args.n, seed=args.seed)
    x_name, z_name = f"X.{args.format}", f"Z.{args.format}"
    datasets.save_matrix(out / x_name, sample.x, fmt=args.format)
    datasets.save_matrix(out / z_name, sample.z, fmt=args.format)
    config = {"name": args.name, "n": args.n, "seed": args.seed, "format": args.format}
    _write_manifest(out / "manifest.json", "generate", config, {"x": x_name, "z": z_name})
    print(f"wrote {sample.x.shape[1]} samples to {out / x_name} and {out / z_name}")


def _fit_by_method(method, x, args):
    common = dict(k=args.k, m=args.m, reg=args.reg)
    if method in ("nppe", "snppe"):
        mode = HADAMARD if method == "snppe" else args.mode
        return fit_nppe(
            x,
            p=args.p,
            mode=mode,
            center=args.center,
            ridge=args.ridge,
            extra_pairs=args.extra_pairs,
            **common,
        )
    if method == "npp":
        return fit_npp(x, ridge=args.ridge, extra_pairs=args.extra_pairs, **common)
    if method == "onpp":
        return fit_onpp(x, k=args.k, m=args.m, reg=args.reg)
    if method == "lle":
        return None, fit_lle(x, extra_pairs=args.extra_pairs, **common)
    raise ConfigError(f"unknown method {method!r}")


def _write_lle_stub(path, result, n_samples, k):
    stub = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "lle",
        "eigenvalues": result.eigenvalues.tolist(),
        "training": {"n_samples": n_samples, "k": k},
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(stub, fh, indent=2)
        fh.write("\n")


def _constraint_deviation(model, result, x):
    """Largest deviation from the method's normalization constraint."""
    if isinstance(model, PolynomialModel):
        feats = expand_matrix(x, model.lift)
        v = model.coeffs
    elif isinstance(model, LinearModel) and model.kind == "npp":
        feats = x
        v = model.projection
    elif isinstance(model, LinearModel):
        u = model.projection
        return float(np.max(np.abs(u.T @ u - np.eye(u.shape[1]))))
    else:
        y = result.y
        n = y.shape[1]
        return float(np.max(np.abs(y @ y.T / n - np.eye(y.shape[0]))))
    b = feats @ feats.T
    b = 0.5 * (b + b.T)
    b += model.ridge * (np.trace(b) / b.shape[0]) * np.eye(b.shape[0])
    return float(np.max(np.abs(v.T @ b @ v - np.eye(v.shape[1]))))


def _check_snppe_mode(method, mode):
    if method == "snppe" and mode == KRONECKER:
        raise ConfigError(
            "snppe is the per-coordinate (hadamard) variant; "
            "use 'fit nppe --mode kronecker' for the full lift"
        )


def cmd_fit(args):
    _check_snppe_mode(args.method, args.mode)
    out = _ensure_dir(args.out)
    x = datasets.load_matrix(args.infile, fmt=_fmt_for(args.infile))
    model, result = _fit_by_method(args.method, x, args)
    datasets.save_matrix(out / "Y.csv", result.y)
    datasets.save_matrix(out / "eigenvalues.csv", result.eigenvalues.reshape(1, -1))
    resolved_k = resolve_k(x.shape[1], args.k)
    if model is not None:
        save_model(model, out / "model.json")
    else:
        # Plain lle carries no out-of-sample map; record the run anyway so
        # downstream tools get a uniform file layout.
        _write_lle_stub(out / "model.json", result, x.shape[1], resolved_k)
    deviation = _constraint_deviation(model, result, x)
    config = {
        "method": args.method,
        "in": str(args.infile),
        "k": resolved_k,
        "p": args.p,
        "m": args.m,
        "mode": HADAMARD if args.method == "snppe" else args.mode,
        "reg": args.reg,
        "ridge": args.ridge,
        "center": args.center,
        "extra_pairs": args.extra_pairs,
    }
    outputs = {"model": "model.json", "y": "Y.csv", "eigenvalues": "eigenvalues.csv"}
    results = {
        "eigenvalues": result.eigenvalues.tolist(),
        "constraint_deviation": deviation,
        "n_samples": x.shape[1],
    }
    _write_manifest(out / "manifest.json", "fit", config, outputs, results)
    print(f"fit {args.method}: {x.shape[1]} samples, k={resolved_k}, m={args.m}")
    print(f"constraint check: max deviation from normalization = {deviation:.3e}")


def cmd_transform(args):
    model = load_model(args.model)
    x = datasets.load_matrix(args.infile, fmt=_fmt_for(args.infile))
    y = model.transform(x)
    datasets.save_matrix(args.out, y, fmt=_fmt_for(args.out))
    config = {"model": str(args.model), "in": str(args.infile)}
    _write_manifest(
        str(args.out) + ".manifest.json",
        "transform",
        config,
        {"y": Path(args.out).name},
        {"n_samples": x.shape[1], "n_components": y.shape[0]},
    )
    print(f"transformed {x.shape[1]} samples into {y.shape[0]} coordinates: {args.out}")


def _parse_embedding_spec(spec):
    if "=" in spec:
        label, _, path = spec.partition("=")
        if not label or not path:
            raise ConfigError(f"embedding spec {spec!r} should be LABEL=PATH")
        return label, path
    return Path(spec).stem, spec


def cmd_eval(args):
    z = datasets.load_matrix(args.reference, fmt=_fmt_for(args.reference))
    rows = []
    for spec in args.embedding:
        label, path = _parse_embedding_spec(spec)
        y = datasets.load_matrix(path, fmt=_fmt_for(path))
        report = residual_variance(y, z, variant=args.variant)
        rows.append((label, report.variant, report.n_samples, report.rho))
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("method,variant,n_samples,residual_variance\n")
        for label, variant, n_samples, rho in rows:
            fh.write(f"{label},{variant},{n_samples},{repr(rho)}\n")
    config = {
        "reference": str(args.reference),
        "embeddings": list(args.embedding),
        "variant": args.variant,
    }
    results = {label: rho for label, _, _, rho in rows}
    _write_manifest(
        str(args.out) + ".manifest.json", "eval", config, {"table": Path(args.out).name}, results
    )
    for label, variant, n_samples, rho in rows:
        print(f"{label}: residual variance = {rho:.6f} ({variant}, {n_samples} samples)")


def _parse_batches(text):
    try:
        if ":" in text:
            parts = [int(tok) for tok in text.split(":")]
            if len(parts) == 2:
                start, stop = parts
                step = start
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ConfigError(f"batch range {text!r} should be START:STOP[:STEP]")
            if step <= 0:
                raise ConfigError(f"batch range step must be positive, got {step}")
            batches = list(range(start, stop + 1, step))
        else:
            batches = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"could not parse batch sizes from {text!r}") from None
    if not batches:
        raise ConfigError(f"no batch sizes in {text!r}")
    return batches


def _refuse_multithreaded():
    for var in _THREAD_VARS:
        value = os.environ.get(var)
        if value is not None and value.strip() != "1":
            raise ConfigError(
                f"bench requires a single-threaded configuration but {var}={value}; "
                "unset it or set it to 1"
            )


def cmd_bench(args):
    _refuse_multithreaded()
    model = load_model(args.model)
    x = datasets.load_matrix(args.infile, fmt=_fmt_for(args.infile))
    batches = _parse_batches(args.batches)
    report = time_transform(model, x, batches, repeats=args.repeats)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("method,batch_size,seconds,seconds_per_sample\n")
        for size, secs, per in zip(report.batch_sizes, report.seconds, report.per_sample):
            fh.write(f"{report.method},{size},{repr(secs)},{repr(per)}\n")
    config = {
        "model": str(args.model),
        "in": str(args.infile),
        "batches": batches,
        "repeats": args.repeats,
    }
    _write_manifest(
        str(args.out) + ".manifest.json",
        "bench",
        config,
        {"timings": Path(args.out).name},
        {"seconds": list(report.seconds)},
    )
    for size, secs in zip(report.batch_sizes, report.seconds):
        print(f"batch {size}: {secs:.6f} s")


def _color_hex(value):
    pos = value * (len(_PALETTE) - 1)
    low = min(int(pos), len(_PALETTE) - 2)
    frac = pos - low
    rgb = tuple(a + (b - a) * frac for a, b in zip(_PALETTE[low], _PALETTE[low + 1]))
    return "#{:02x}{:02x}{:02x}".format(*(int(round(255 * c)) for c in rgb))


def _scale(values, lo, hi):
    vmin, vmax = values.min(), values.max()
    if vmax == vmin:
        return np.full(values.shape, 0.5 * (lo + hi))
    return lo + (values - vmin) / (vmax - vmin) * (hi - lo)


def _svg_scatter(y, shade, width=640, height=480, margin=40.0, radius=2.5):
    cx = _scale(y[0], margin, width - margin)
    cy = _scale(-y[1], margin, height - margin)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i in range(y.shape[1]):
        color = _color_hex(float(shade[i]))
        lines.append(
            f'<circle cx="{cx[i]:.2f}" cy="{cy[i]:.2f}" r="{radius}" fill="{color}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_plot(args):
    y = datasets.load_matrix(args.infile, fmt=_fmt_for(args.infile))
    if y.shape[0] != 2:
        raise ConfigError(f"plot renders 2-D embeddings only, got {y.shape[0]} columns")
    if args.color is not None:
        z = datasets.load_matrix(args.color, fmt=_fmt_for(args.color))
        if z.shape[1] != y.shape[1]:
            raise ConfigError(
                f"color file has {z.shape[1]} samples but the embedding has {y.shape[1]}"
            )
        if not 0 <= args.coord < z.shape[0]:
            raise ConfigError(
                f"color coordinate {args.coord} out of range for {z.shape[0]} columns"
            )
        values = z[args.coord]
        shade = _scale(values, 0.0, 1.0)
    else:
        shade = _scale(y[0], 0.0, 1.0)
    svg = _svg_scatter(y, shade)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(svg)
    config = {
        "in": str(args.infile),
        "color": None if args.color is None else str(args.color),
        "coord": args.coord,
    }
    _write_manifest(
        str(args.out) + ".manifest.json",
        "plot",
        config,
        {"svg": Path(args.out).name},
        {"n_samples": y.shape[1]},
    )
    print(f"wrote {y.shape[1]} markers to {args.out}")


def cmd_pipeline(args):
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
        _check_snppe_mode(method, args.mode)
    out = _ensure_dir(args.out)
    sample = datasets.generate(args.name, args.n, seed=args.seed)
    split_seed = args.seed if args.split_seed is None else args.split_seed
    train_idx, test_idx = datasets.split_indices(args.n, args.split, seed=split_seed)
    parts = {
        "X.csv": sample.x,
        "Z.csv": sample.z,
        "X_train.csv": sample.x[:, train_idx],
        "X_test.csv": sample.x[:, test_idx],
        "Z_train.csv": sample.z[:, train_idx],
        "Z_test.csv": sample.z[:, test_idx],
    }
    for name, matrix in parts.items():
        datasets.save_matrix(out / name, matrix)

    x_train, x_test = parts["X_train.csv"], parts["X_test.csv"]
    z_train, z_test = parts["Z_train.csv"], parts["Z_test.csv"]
    summary = []
    resolved_k = resolve_k(x_train.shape[1], args.k)
    for method in methods:
        model, result = _fit_by_method(method, x_train, args)
        datasets.save_matrix(out / f"{method}_train.csv", result.y)
        train_rho = residual_variance(result.y, z_train, variant=args.variant).rho
        test_rho = None
        if model is None:
            _write_lle_stub(out / f"{method}_model.json", result, x_train.shape[1], resolved_k)
        else:
            save_model(model, out / f"{method}_model.json")
            if x_test.shape[1] > 0:
                y_test = model.transform(x_test)
                datasets.save_matrix(out / f"{method}_test.csv", y_test)
                test_rho = residual_variance(y_test, z_test, variant=args.variant).rho
        summary.append((method, train_rho, test_rho))

    with open(out / "summary.csv", "w", encoding="ascii") as fh:
        fh.write("method,train_rho,test_rho\n")
        for method, train_rho, test_rho in summary:
            test_text = "" if test_rho is None else repr(test_rho)
            fh.write(f"{method},{repr(train_rho)},{test_text}\n")

    config = {
        "name": args.name,
        "n": args.n,
        "seed": args.seed,
        "split": args.split,
        "split_seed": split_seed,
        "methods": methods,
        "k": resolved_k,
        "p": args.p,
        "m": args.m,
        "mode": args.mode,
        "reg": args.reg,
        "ridge": args.ridge,
        "center": args.center,
        "variant": args.variant,
    }
    outputs = {"summary": "summary.csv", "parts": sorted(parts)}
    results = {
        method: {"train_rho": train_rho, "test_rho": test_rho}
        for method, train_rho, test_rho in summary
    }
    _write_manifest(out / "manifest.json", "pipeline", config, outputs, results)
    for method, train_rho, test_rho in summary:
        test_text = "n/a" if test_rho is None else f"{test_rho:.6f}"
        print(f"{method}: train rho = {train_rho:.6f}, test rho = {test_text}")


def _add_fit_options(sub, with_method=True):
    if with_method:
        sub.add_argument("method", choices=METHODS, help="embedding method")
    sub.add_argument("--k", type=_positive_int, default=None, help="neighbors per sample (default: 1%% of N, at least 2)")
    sub.add_argument("--p", type=_positive_int, default=2, help="polynomial degree (default 2)")
    sub.add_argument("--m", type=_positive_int, default=2, help="embedding dimension (default 2)")
    sub.add_argument("--mode", choices=(KRONECKER, HADAMARD), default=HADAMARD, help="lifting mode for nppe (default hadamard)")
    sub.add_argument("--reg", type=float, default=DEFAULT_REG, help="local Gram regularization (default 1e-3)")
    sub.add_argument("--ridge", type=float, default=DEFAULT_RIDGE, help="pencil ridge (default 1e-9)")
    sub.add_argument("--no-center", dest="center", action="store_false", help="skip centering before the polynomial lift")
    sub.add_argument("--extra-pairs", type=_positive_int, default=DEFAULT_EXTRA_PAIRS, help="extra eigenpair candidates before filtering (default 5)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="polyembed",
        description="Manifold embeddings with explicit polynomial out-of-sample maps.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_gen = sub.add_parser("generate", help="synthesize a manifold dataset")
    p_gen.add_argument("name", choices=datasets.GENERATORS, help="generator name")
    p_gen.add_argument("--n", type=_positive_int, required=True, help="number of samples")
    p_gen.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p_gen.add_argument("--out", default=".", help="output directory (default .)")
    p_gen.add_argument("--format", choices=("csv", "pemb"), default="csv", help="output format")
    p_gen.set_defaults(func=cmd_generate)

    p_fit = sub.add_parser("fit", help="fit an embedding model on a data file")
    _add_fit_options(p_fit)
    p_fit.add_argument("--in", dest="infile", required=True, help="training data file")
    p_fit.add_argument("--out", default=".", help="output directory (default .)")
    p_fit.set_defaults(func=cmd_fit)

    p_tr = sub.add_parser("transform", help="apply a saved model to new samples")
    p_tr.add_argument("--model", required=True, help="model JSON written by fit")
    p_tr.add_argument("--in", dest="infile", required=True, help="samples to transform")
    p_tr.add_argument("--out", required=True, help="output coordinates file")
    p_tr.set_defaults(func=cmd_transform)

    p_ev = sub.add_parser("eval", help="residual variance of embeddings against a reference")
    p_ev.add_argument("--embedding", action="append", required=True, metavar="LABEL=PATH", help="embedding file, repeatable")
    p_ev.add_argument("--reference", required=True, help="generating-coordinates file")
    p_ev.add_argument("--variant", choices=(DISTANCE, ENTRIES), default=DISTANCE, help="residual variance variant (default distance)")
    p_ev.add_argument("--out", required=True, help="output metrics CSV")
    p_ev.set_defaults(func=cmd_eval)

    p_be = sub.add_parser("bench", help="time model transforms over batch sizes")
    p_be.add_argument("--model", required=True, help="model JSON written by fit")
    p_be.add_argument("--in", dest="infile", required=True, help="pool of samples to draw batches from")
    p_be.add_argument("--batches", required=True, help="comma list (500,1000) or range START:STOP[:STEP]")
    p_be.add_argument("--repeats", type=_positive_int, default=5, help="timed repeats per batch (default 5)")
    p_be.add_argument("--out", required=True, help="output timings CSV")
    p_be.set_defaults(func=cmd_bench)

    p_pl = sub.add_parser("plot", help="render a 2-D embedding as an SVG scatter")
    p_pl.add_argument("--in", dest="infile", required=True, help="2-column embedding file")
    p_pl.add_argument("--color", default=None, help="optional coordinates file to color by")
    p_pl.add_argument("--coord", type=int, default=0, help="column of the color file to use (default 0)")
    p_pl.add_argument("--out", required=True, help="output SVG path")
    p_pl.set_defaults(func=cmd_plot)

    p_pi = sub.add_parser("pipeline", help="generate, split, fit, transform, and eval in one run")
    p_pi.add_argument("name", choices=datasets.GENERATORS, help="generator name")
    p_pi.add_argument("--n", type=_positive_int, required=True, help="number of samples")
    p_pi.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p_pi.add_argument("--split", type=float, default=0.5, help="training fraction (default 0.5)")
    p_pi.add_argument("--split-seed", type=int, default=None, help="split seed (default: same as --seed)")
    p_pi.add_argument("--methods", default="nppe,npp,onpp,lle", help="comma list of methods to compare")
    _add_fit_options(p_pi, with_method=False)
    p_pi.add_argument("--variant", choices=(DISTANCE, ENTRIES), default=DISTANCE, help="residual variance variant (default distance)")
    p_pi.add_argument("--out", default=".", help="output directory (default .)")
    p_pi.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    try:
        args.func(args)
    except ConfigError as exc:
        return _fail(2, exc)
    except DataError as exc:
        return _fail(3, exc)
    except OSError as exc:
        return _fail(3, exc)
    except NumericalError as exc:
        return _fail(4, exc)
    except ValueError as exc:
        return _fail(2, exc)
    return 0


def _fail(code, exc):
    print(f"polyembed: error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
