"""Command-line front end.

Subcommands: ``dbscan``, ``optics``, ``linscan`` run the clustering engines on
an ingested point catalog; ``generate`` emits synthetic benchmark datasets;
``search`` and ``benchmark`` drive the evaluation harness.  All artifacts are
plain text (CSV / JSON / SVG), written atomically after computation finishes,
with floats serialized at 17 significant digits so reruns with the same seed
and input are byte-identical.  Every run writes a ``manifest.json`` recording
the subcommand, all parameter values, and the input digest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, density, evaluation
from .core import NOISE, LinscanParams, PointCloud
from .oracles import EuclideanOracle
from .pipeline import linscan, spectral_filter

# CLI defaults for the pipeline knobs (kept in one place so docs and tests
# can refer to them).
# Defaults picked by tuning on the synthetic benchmark (see README); they
# assume clusters of roughly a hundred points.
DEFAULTS = {"ecc_pts": 22, "min_pts": 40, "xi": 0.07, "tau": 0.87}


class IngestError(ValueError):
    """Raised when an input catalog cannot be parsed."""


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    """17-significant-digit text form; doubles round-trip exactly."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_safe(value):
    """JSON forbids non-finite numbers; spell them out as strings."""
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    return value


def _fmt_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(float(value))


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_outputs(out_dir: str, files: dict[str, str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        _atomic_write(os.path.join(out_dir, name), text)


# ---------------------------------------------------------------------------
# Ingest
# ---------------------------------------------------------------------------


def _parse_point(line: str) -> tuple[float, float]:
    parts = line.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError("expected two columns")
    x, y = float(parts[0]), float(parts[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("coordinates must be finite")
    return x, y


def ingest(path: str) -> PointCloud:
    """Read a 2-column point catalog (comma or whitespace delimited).

    A non-numeric first line is treated as a header and skipped; any other
    malformed line is an error citing its 1-based row number.  Input order
    becomes the point ids.
    """
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    points: list[tuple[float, float]] = []
    saw_data = False
    for row, line in enumerate(raw, 1):
        if not line.strip():
            continue
        try:
            xy = _parse_point(line)
        except ValueError as exc:
            if not saw_data and not points:
                saw_data = True  # header row
                continue
            raise IngestError(f"{path}: row {row}: {exc}: {line.strip()!r}") from None
        saw_data = True
        points.append(xy)
    if not points:
        raise IngestError(f"{path}: no points found")
    return PointCloud(np.asarray(points, dtype=np.float64))


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def labels_csv(cloud: PointCloud, labels: np.ndarray) -> str:
    lines = ["id,x,y,cluster"]
    pts = cloud.points
    for i in range(len(cloud)):
        lines.append(
            f"{i},{format_float(pts[i, 0])},{format_float(pts[i, 1])},{int(labels[i])}"
        )
    return "\n".join(lines) + "\n"


def points_csv(cloud: PointCloud) -> str:
    lines = ["x,y"]
    for x, y in cloud.points:
        lines.append(f"{format_float(x)},{format_float(y)}")
    return "\n".join(lines) + "\n"


def reachability_csv(result: density.OpticsResult) -> str:
    lines = ["position,id,reachability,core"]
    for position, point in enumerate(result.order):
        lines.append(
            f"{position},{int(point)},"
            f"{format_float(result.reachability[point])},"
            f"{format_float(result.core_distance[point])}"
        )
    return "\n".join(lines) + "\n"


def summaries_csv(summaries) -> str:
    lines = ["cluster,size,cx,cy,lambda1,lambda2,ratio,orientation_deg,kept"]
    for s in summaries:
        lines.append(
            f"{s.cluster_id},{s.size},"
            f"{format_float(s.centroid[0])},{format_float(s.centroid[1])},"
            f"{format_float(s.eigenvalues[0])},{format_float(s.eigenvalues[1])},"
            f"{format_float(s.spectral_ratio)},{format_float(s.orientation_deg)},"
            f"{1 if s.kept else 0}"
        )
    return "\n".join(lines) + "\n"


_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#aec7e8",
    "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
)
_NOISE_COLOR = "#999999"


def scatter_svg(cloud: PointCloud, labels: np.ndarray, width: int = 640) -> str:
    """Minimal scatter plot, one color per cluster, noise in gray."""
    pts = cloud.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if span <= 0.0:
        span = 1.0
    pad = 16.0
    scale = (width - 2.0 * pad) / span
    height = int(math.ceil(2.0 * pad + (hi[1] - lo[1]) * scale)) or width

    def sx(x: float) -> float:
        return pad + (x - lo[0]) * scale

    def sy(y: float) -> float:
        return height - pad - (y - lo[1]) * scale

    labels = np.asarray(labels)
    groups = [NOISE] + sorted(int(c) for c in np.unique(labels) if c != NOISE)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for cluster in groups:
        members = np.flatnonzero(labels == cluster)
        if members.size == 0:
            continue
        color = _NOISE_COLOR if cluster == NOISE else _PALETTE[cluster % len(_PALETTE)]
        parts.append(f'<g fill="{color}">')
        for i in members:
            parts.append(f'<circle cx="{sx(pts[i, 0]):.2f}" cy="{sy(pts[i, 1]):.2f}" r="2"/>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _manifest(subcommand: str, params: dict, input_path, output_names) -> str:
    doc = {
        "format": 1,
        "subcommand": subcommand,
        "params": {key: _json_safe(value) for key, value in sorted(params.items())},
        "input": None
        if input_path is None
        else {"path": str(input_path), "sha256": _sha256_file(input_path)},
        "outputs": sorted(output_names),
        "tool": {"name": "linscan", "version": __version__},
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Subcommand handlers — each returns {filename: text}
# ---------------------------------------------------------------------------


def _cmd_dbscan(args) -> dict[str, str]:
    cloud = ingest(args.input)
    oracle = EuclideanOracle(cloud)
    labels = density.dbscan(oracle, len(cloud), eps=args.eps, min_pts=args.min_pts)
    files = {"labels.csv": labels_csv(cloud, labels)}
    if args.svg:
        files["scatter.svg"] = scatter_svg(cloud, labels)
    params = {"eps": args.eps, "min_pts": args.min_pts, "seed": args.seed, "svg": args.svg}
    files["manifest.json"] = _manifest("dbscan", params, args.input, list(files) + ["manifest.json"])
    return files


def _cmd_optics(args) -> dict[str, str]:
    cloud = ingest(args.input)
    oracle = EuclideanOracle(cloud)
    result = density.optics(oracle, len(cloud), eps=args.eps, min_pts=args.min_pts)
    labels = density.extract_xi(result, args.xi, args.min_pts)
    files = {
        "labels.csv": labels_csv(cloud, labels),
        "reachability.csv": reachability_csv(result),
    }
    if args.svg:
        files["scatter.svg"] = scatter_svg(cloud, labels)
    params = {
        "eps": args.eps,
        "min_pts": args.min_pts,
        "xi": args.xi,
        "seed": args.seed,
        "svg": args.svg,
    }
    files["manifest.json"] = _manifest("optics", params, args.input, list(files) + ["manifest.json"])
    return files


def _cmd_linscan(args) -> dict[str, str]:
    cloud = ingest(args.input)
    params = LinscanParams(
        ecc_pts=args.ecc_pts,
        min_pts=args.min_pts,
        xi=args.xi,
        eps=args.eps,
        tau=args.tau,
        seed=args.seed,
    )
    result = linscan(cloud, params, prune=not args.no_prune)
    labels, summaries = spectral_filter(cloud, result.labels, args.tau)
    files = {
        "labels.csv": labels_csv(cloud, labels),
        "reachability.csv": reachability_csv(result.optics_result),
        "summaries.csv": summaries_csv(summaries),
    }
    if args.svg:
        files["scatter.svg"] = scatter_svg(cloud, labels)
    flag_params = {
        "ecc_pts": args.ecc_pts,
        "min_pts": args.min_pts,
        "xi": args.xi,
        "eps": args.eps,
        "tau": args.tau,
        "seed": args.seed,
        "no_prune": args.no_prune,
        "svg": args.svg,
    }
    files["manifest.json"] = _manifest("linscan", flag_params, args.input, list(files) + ["manifest.json"])
    return files


def _spec_from_args(args) -> evaluation.SyntheticSpec:
    if args.preset == "crossing":
        return evaluation.SyntheticSpec(
            n_linear=0,
            n_isotropic=0,
            n_crossing_pairs=1,
            crossing_angle_range=(0.5 * math.pi, 0.5 * math.pi),
            points_per_cluster=args.points_per_cluster,
            noise_fraction=args.noise_fraction,
            seed=args.seed,
        )
    return evaluation.SyntheticSpec(
        points_per_cluster=args.points_per_cluster,
        noise_fraction=args.noise_fraction,
        seed=args.seed,
    )


def _cmd_generate(args) -> dict[str, str]:
    cloud, truth = evaluation.generate(_spec_from_args(args))
    files = {
        "points.csv": points_csv(cloud),
        "labels.csv": labels_csv(cloud, truth),
    }
    if args.svg:
        files["scatter.svg"] = scatter_svg(cloud, truth)
    params = {
        "preset": args.preset,
        "points_per_cluster": args.points_per_cluster,
        "noise_fraction": args.noise_fraction,
        "seed": args.seed,
        "svg": args.svg,
    }
    files["manifest.json"] = _manifest("generate", params, None, list(files) + ["manifest.json"])
    return files


def _algorithm_params(args) -> dict:
    if args.algorithm == "linscan":
        return {
            "ecc_pts": args.ecc_pts,
            "min_pts": args.min_pts,
            "xi": args.xi,
            "eps": args.eps,
            "tau": args.tau,
        }
    if not math.isfinite(args.eps):
        raise ValueError("the optics baseline needs a finite --eps")
    return {"eps": args.eps, "min_pts": args.min_pts, "tau": args.tau}


def _cmd_benchmark(args) -> dict[str, str]:
    test_sets = evaluation.make_test_sets(
        args.test_sets, args.seed, points_per_cluster=args.points_per_cluster
    )
    params = _algorithm_params(args)
    result = evaluation.benchmark(params, test_sets, args.algorithm)
    results = {
        "algorithm": args.algorithm,
        "params": {key: _json_safe(value) for key, value in sorted(params.items())},
        "mean_ari": result.mean_ari,
        "per_set": result.per_set,
    }
    files = {"results.json": json.dumps(results, sort_keys=True, indent=2) + "\n"}
    run_params = dict(params)
    run_params.update(
        algorithm=args.algorithm,
        test_sets=args.test_sets,
        points_per_cluster=args.points_per_cluster,
        seed=args.seed,
    )
    files["manifest.json"] = _manifest("benchmark", run_params, None, list(files) + ["manifest.json"])
    return files


def _cmd_search(args) -> dict[str, str]:
    validation_sets = evaluation.make_validation_sets(
        args.validation_sets, args.seed, points_per_cluster=args.points_per_cluster
    )
    if args.algorithm == "linscan":
        space = evaluation.linscan_search_space()
    else:
        space = evaluation.optics_search_space(evaluation.data_diameter(validation_sets))
    result = evaluation.random_search(
        space, args.trials, validation_sets, args.algorithm, seed=args.seed
    )
    names = sorted(space.params)
    lines = ["trial,mean_ari," + ",".join(names)]
    for record in result.trials:
        row = [str(record["trial"]), format_float(record["mean_ari"])]
        row += [_fmt_value(record["params"][name]) for name in names]
        lines.append(",".join(row))
    best = {
        "algorithm": args.algorithm,
        "params": {key: _json_safe(value) for key, value in sorted(result.best_params.items())},
        "validation_ari": result.validation_ari,
    }
    files = {
        "trials.csv": "\n".join(lines) + "\n",
        "best.json": json.dumps(best, sort_keys=True, indent=2) + "\n",
    }
    run_params = {
        "algorithm": args.algorithm,
        "trials": args.trials,
        "validation_sets": args.validation_sets,
        "points_per_cluster": args.points_per_cluster,
        "seed": args.seed,
    }
    files["manifest.json"] = _manifest("search", run_params, None, list(files) + ["manifest.json"])
    return files


_HANDLERS = {
    "dbscan": _cmd_dbscan,
    "optics": _cmd_optics,
    "linscan": _cmd_linscan,
    "generate": _cmd_generate,
    "benchmark": _cmd_benchmark,
    "search": _cmd_search,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory")


def _add_svg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--svg", action="store_true", help="also write a scatter plot")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linscan",
        description="Density clustering for point catalogs, with a local-covariance "
        "embedding that keeps crossing linear features apart.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("dbscan", help="Euclidean DBSCAN on a point catalog")
    p.add_argument("--input", required=True, help="2-column point file")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--min-pts", type=int, default=DEFAULTS["min_pts"])
    _add_seed(p)
    _add_svg(p)
    _add_out(p)

    p = sub.add_parser("optics", help="Euclidean OPTICS ordering plus xi extraction")
    p.add_argument("--input", required=True)
    p.add_argument("--eps", type=float, default=math.inf)
    p.add_argument("--min-pts", type=int, default=DEFAULTS["min_pts"])
    p.add_argument("--xi", type=float, default=DEFAULTS["xi"])
    _add_seed(p)
    _add_svg(p)
    _add_out(p)

    p = sub.add_parser("linscan", help="local-Gaussian embedding pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--ecc-pts", type=int, default=DEFAULTS["ecc_pts"])
    p.add_argument("--min-pts", type=int, default=DEFAULTS["min_pts"])
    p.add_argument("--xi", type=float, default=DEFAULTS["xi"])
    p.add_argument("--eps", type=float, default=math.inf)
    p.add_argument("--tau", type=float, default=DEFAULTS["tau"])
    p.add_argument("--no-prune", action="store_true", help="disable the mean-distance prune")
    _add_seed(p)
    _add_svg(p)
    _add_out(p)

    p = sub.add_parser("generate", help="emit a synthetic benchmark dataset")
    p.add_argument("--preset", choices=("benchmark", "crossing"), default="benchmark")
    p.add_argument("--points-per-cluster", type=int, default=100)
    p.add_argument("--noise-fraction", type=float, default=0.0)
    _add_seed(p)
    _add_svg(p)
    _add_out(p)

    p = sub.add_parser("benchmark", help="score fixed parameters on held-out datasets")
    p.add_argument("--algorithm", choices=("linscan", "optics"), default="linscan")
    p.add_argument("--test-sets", type=int, default=10)
    p.add_argument("--points-per-cluster", type=int, default=100)
    p.add_argument("--ecc-pts", type=int, default=DEFAULTS["ecc_pts"])
    p.add_argument("--min-pts", type=int, default=DEFAULTS["min_pts"])
    p.add_argument("--xi", type=float, default=DEFAULTS["xi"])
    p.add_argument("--eps", type=float, default=math.inf)
    p.add_argument("--tau", type=float, default=DEFAULTS["tau"])
    _add_seed(p)
    _add_out(p)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("--algorithm", choices=("linscan", "optics"), default="linscan")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--validation-sets", type=int, default=5)
    p.add_argument("--points-per-cluster", type=int, default=100)
    _add_seed(p)
    _add_out(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        files = _HANDLERS[args.subcommand](args)
        _write_outputs(args.out, files)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
