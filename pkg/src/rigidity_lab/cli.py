"""Command-line front end.

Every subcommand reads an optional JSON config, lets flags override it, and
validates everything before computing.  Results go to ``--out`` (written via
a temporary file and an atomic rename) or to stdout.

Exit codes: 0 ok, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from . import hyperbolic, indexset, random_subset, sampler, variance
from .indexset import IndexSet
from .kernel import KernelSpec, expected_count_in_disc
from .quadrature import QuadratureError, QuadSettings
from .rng import RngState, default_workers

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class NumericError(RuntimeError):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"config {path}: cannot read ({exc.strerror})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path}: top level must be a JSON object")
    return cfg


def _pick(flag, cfg: dict, dotted: str, default=None):
    """Flag value if given, else the config entry at ``dotted``, else default."""
    if flag is not None:
        return flag
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node


def _json_arg(text, field):
    if text is None:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(f"{field}: not valid JSON: {text!r}") from None


def _float_list(text):
    if text is None:
        return None
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text):
    if text is None:
        return None
    return [int(x) for x in text.split(",") if x.strip()]


def _radius(value, field, closed_zero=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{field} must be a number, got {value!r}") from None
    lo_ok = v >= 0 if closed_zero else v > 0
    if not (lo_ok and v < 1):
        raise ConfigError(f"{field} must lie in {'[0' if closed_zero else '(0'}, 1), got {v}")
    return v


def _positive_int(value, field, minimum=1):
    try:
        v = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{field} must be an integer, got {value!r}") from None
    if v < minimum:
        raise ConfigError(f"{field} must be >= {minimum}, got {v}")
    return v


def _index_set(obj, field) -> IndexSet:
    if obj is None:
        raise ConfigError(f"{field} is required")
    try:
        return IndexSet.from_json(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{field}: {exc}") from None


def _kernel(args, cfg) -> KernelSpec:
    lam = _index_set(_pick(_json_arg(args.lam, "--lambda"), cfg, "kernel.lambda"), "kernel.lambda")
    cap = _pick(args.cap, cfg, "kernel.cap")
    if cap is None:
        if len(lam) == 0:
            raise ConfigError("kernel.cap is required for an empty index set")
        cap = lam.max
    cap = _positive_int(cap, "kernel.cap", minimum=0)
    try:
        return KernelSpec(lam, cap)
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None


def _quad(args, cfg) -> QuadSettings:
    tol = _pick(args.tol, cfg, "quad.tol", QuadSettings.tol)
    max_evals = _pick(args.max_evals, cfg, "quad.max_evals", QuadSettings.max_evals)
    rel_tol = _pick(args.rel_tol, cfg, "quad.rel_tol", QuadSettings.rel_tol)
    try:
        return QuadSettings(tol=float(tol), max_evals=int(max_evals), rel_tol=float(rel_tol))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"quad: {exc}") from None


def _common(args, cfg, formats):
    fmt = _pick(args.format, cfg, "output.format", formats[0])
    if fmt not in formats:
        raise ConfigError(f"output.format must be one of {', '.join(formats)}, got {fmt!r}")
    workers = _pick(args.workers, cfg, "workers", None)
    workers = default_workers() if workers is None else _positive_int(workers, "workers")
    seed = _positive_int(_pick(args.seed, cfg, "seed", 0), "seed", minimum=0)
    out = _pick(args.out, cfg, "output.path")
    _check_writable(out)
    return fmt, workers, seed, out


def _check_writable(path):
    if path is None:
        return
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"output directory does not exist: {directory}")


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _finite(x):
    return x if x is not None and math.isfinite(x) else None


# --------------------------------------------------------------------- commands

def cmd_variance(args) -> int:
    cfg = _load_config(args.config)
    fmt, workers, _, out = _common(args, cfg, ("csv", "json"))
    spec = _kernel(args, cfg)
    quad = _quad(args, cfg)
    r0 = _radius(_pick(args.r0, cfg, "variance.r0", 0.5), "variance.r0")
    rs = _pick(_float_list(args.rs), cfg, "variance.rs", [0.9, 0.99, 0.999])
    rs = [_radius(r, f"variance.rs[{i}]") for i, r in enumerate(rs)]
    for i, r in enumerate(rs):
        if not r0 < r:
            raise ConfigError(f"variance.r0 ({r0}) must be < variance.rs[{i}] ({r})")
    eps = [float(e) for e in _pick(_float_list(args.eps), cfg, "variance.eps", [])]
    rows = variance.rigidity_sweep(spec, r0, rs, quad, eps, workers)
    bad = [row.r for row in rows if not row.converged]
    if bad:
        raise NumericError(f"quadrature did not converge for r in {bad}")
    _write(out, variance.sweep_to_csv(rows) if fmt == "csv" else variance.sweep_to_json(rows))
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _load_config(args.config)
    _, workers, seed, out = _common(args, cfg, ("csv",))
    spec = _kernel(args, cfg)
    n = _positive_int(_pick(args.samples, cfg, "sample.samples", 100), "sample.samples")
    radius = _radius(_pick(args.radius, cfg, "sample.radius", 0.5), "sample.radius")
    stats_out = _pick(args.stats_out, cfg, "sample.stats_out")
    _check_writable(stats_out)
    configs = sampler.sample_configurations(spec, n, RngState(seed), workers)
    counts = sampler.moment_stats([c.count_in_disc(radius) for c in configs])
    stats = {
        "rank": spec.rank,
        "n_samples": n,
        "seed": seed,
        "radius": radius,
        "count": counts.to_json(),
        "expected_count": float(expected_count_in_disc(spec, radius)),
    }
    _write(out, sampler.dump_csv(configs))
    if stats_out is None and out is None:
        sys.stderr.write(_dumps(stats))
    else:
        _write(stats_out, _dumps(stats))
    return EXIT_OK


def _lemma_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "I", "II", "III", "IV", "full", "bound_II", "bound_III"])
    for row in rows:
        w.writerow([repr(x) for x in (row.r, row.I, row.II.value, row.III.value, row.IV.value,
                                      row.full.value, row.bound_II, row.bound_III)])
    return buf.getvalue()


def cmd_lemma(args) -> int:
    cfg = _load_config(args.config)
    fmt, _, _, out = _common(args, cfg, ("json", "csv"))
    quad = _quad(args, cfg)
    r0 = _radius(_pick(args.r0, cfg, "lemma.r0", 0.5), "lemma.r0")
    rs = _pick(_float_list(args.rs), cfg, "lemma.rs", [0.9, 0.99, 0.999, 0.9999])
    rs = [_radius(r, f"lemma.rs[{i}]") for i, r in enumerate(rs)]
    for i, r in enumerate(rs):
        if not r0 < r:
            raise ConfigError(f"lemma.r0 ({r0}) must be < lemma.rs[{i}] ({r})")
    c2 = hyperbolic.c2_constant(quad)
    if not c2.converged:
        raise NumericError("C2 quadrature did not converge")
    rows = [hyperbolic.lemma_row(r0, r, c2.value, quad) for r in rs]
    bad = [row.r for row in rows if not row.converged]
    if bad:
        raise NumericError(f"lemma quadrature did not converge for r in {bad}")
    if fmt == "csv":
        _write(out, _lemma_csv(rows))
        return EXIT_OK
    fulls = [row.full.value for row in rows]
    doc = {
        "r0": r0,
        "C2": c2.to_json(),
        "rows": [row.to_json() for row in rows],
        "full_strictly_decreasing": all(b < a for a, b in zip(fulls, fulls[1:])),
    }
    _write(out, _dumps(doc))
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _load_config(args.config)
    _, _, _, out = _common(args, cfg, ("json",))
    lam_obj = _pick(_json_arg(args.lam, "--lambda"), cfg, "decompose.lambda")
    if lam_obj is None:
        lam_obj = _pick(None, cfg, "kernel.lambda")
    lam = _index_set(lam_obj, "decompose.lambda")
    pieces = indexset.decompose_lacunary(lam)
    if _pick(args.merge, cfg, "decompose.merge", True):
        pieces = indexset.merge_pieces(pieces)
    problems = indexset.verify_decomposition(lam, pieces)
    if problems:
        raise NumericError("decomposition failed verification: " + "; ".join(problems))
    doc = []
    for p in pieces:
        ratio = indexset.gap_ratio(p) if len(p) >= 2 and p.elements[0] != 0 else None
        doc.append({"elements": p.to_json(), "gap_ratio": _finite(ratio)})
    _write(out, _dumps(doc))
    return EXIT_OK


def cmd_bernoulli(args) -> int:
    cfg = _load_config(args.config)
    _, workers, seed, out = _common(args, cfg, ("json",))
    n_max = _positive_int(_pick(args.n_max, cfg, "bernoulli.n_max", 2**16), "bernoulli.n_max", 0)
    c = _positive_int(_pick(args.C, cfg, "bernoulli.C", 1), "bernoulli.C")
    n = _positive_int(_pick(args.n, cfg, "bernoulli.n", 12), "bernoulli.n", 0)
    trials = _positive_int(_pick(args.trials, cfg, "bernoulli.trials", 1000), "bernoulli.trials", 100)
    default_range = [0, max(0, int(math.log2(max(n_max, 2))) - 1)]
    n_range = _pick(_int_list(args.n_range), cfg, "bernoulli.n_range", default_range)
    if len(n_range) != 2 or n_range[0] < 0 or n_range[1] < n_range[0]:
        raise ConfigError(f"bernoulli.n_range must be [lo, hi] with 0 <= lo <= hi, got {n_range}")
    if 2 ** (n_range[1] + 1) > n_max:
        raise ConfigError(f"bernoulli.n_range upper block {n_range[1]} exceeds bernoulli.n_max={n_max}")

    base = RngState(seed)
    draw = random_subset.sample_lambda(n_max, base.spawn(0))
    counts = random_subset.block_counts(draw, n_range)
    witness = random_subset.non_lacunarity_witness(draw, c, n_range)
    law = random_subset.empirical_block_law(c, n, trials, base.spawn(1), workers)
    doc = {
        "draw": {**draw.to_json(), "size": len(draw.elements)},
        "block_counts": {"n_range": list(n_range), "counts": counts},
        "witness": {"C": c, **witness.to_json()},
        "block_law": law.to_json(),
    }
    _write(out, _dumps(doc))
    return EXIT_OK


def cmd_bloch(args) -> int:
    cfg = _load_config(args.config)
    _, _, _, out = _common(args, cfg, ("json",))
    lam = _index_set(_pick(_json_arg(args.lam, "--lambda"), cfg, "bloch.lambda",
                           _pick(None, cfg, "kernel.lambda")), "bloch.lambda")
    caps = _pick(_int_list(args.caps), cfg, "bloch.caps", [2**10, 2**14, 2**18])
    caps = [_positive_int(cap, f"bloch.caps[{i}]", 0) for i, cap in enumerate(caps)]
    extra = _pick(_float_list(args.grid_extra), cfg, "bloch.grid_extra", [])
    extra = [_radius(t, f"bloch.grid_extra[{i}]", closed_zero=True) for i, t in enumerate(extra)]
    rows = []
    for cap in caps:
        grid = sorted(set(indexset.default_bloch_grid(cap).tolist()) | set(extra))
        rows.append({"cap": cap, "estimate": indexset.bloch_norm_estimate(lam, cap, grid)})
    _write(out, _dumps({"rows": rows}))
    return EXIT_OK


# ----------------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--tol", type=float, help="absolute quadrature tolerance")
    p.add_argument("--max-evals", dest="max_evals", type=int, help="quadrature evaluation budget")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, help="relative quadrature tolerance")


def _add_kernel(p):
    p.add_argument("--lambda", dest="lam", help="index set as JSON (array or generator object)")
    p.add_argument("--cap", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigidity-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("variance", help="variance sweep of the cutoff statistic")
    _add_common(p)
    _add_kernel(p)
    p.add_argument("--r0", type=float)
    p.add_argument("--rs", help="comma-separated outer radii")
    p.add_argument("--eps", help="comma-separated thresholds to flag")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("sample", help="exact DPP samples and counting statistics")
    _add_common(p)
    _add_kernel(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--stats-out", dest="stats_out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("lemma", help="cutoff integrals (I)-(IV), C2 and their bounds")
    _add_common(p)
    p.add_argument("--r0", type=float)
    p.add_argument("--rs", help="comma-separated outer radii")
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("decompose", help="split an index set into lacunary pieces")
    _add_common(p)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--no-merge", dest="merge", action="store_const", const=False,
                   help="emit the raw parity/rank pieces without merging")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("bernoulli", help="random index set draws and block statistics")
    _add_common(p)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--C", dest="C", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-range", dest="n_range", help="lo,hi block indices")
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("bloch", help="Bloch-norm estimates across caps")
    _add_common(p)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--caps", help="comma-separated caps")
    p.add_argument("--grid-extra", dest="grid_extra", help="extra grid radii")
    p.set_defaults(func=cmd_bloch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, QuadratureError, sampler.SamplingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
