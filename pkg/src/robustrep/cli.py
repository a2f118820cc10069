"""Command-line front end: ``robustrep {rpca,cluster,gen}``.

File conventions
----------------
* CSV: no header, comma-separated, one matrix row per line, written with 17
  significant digits so a save/load round trip is exact.
* ``rpca`` reads ``Y`` with one column per frame. ``cluster`` reads one data
  point per row. Either command also accepts a directory of PGM/PNG images
  (one frame or one point per image, vectorised column-major).
* Emitted images map the ``[min, max]`` range of the whole matrix to 0-255,
  so brightness is comparable across frames. Masks are 0/255.
* Every command writes ``report.json`` with the command line, the resolved
  parameters, the seed, objective traces (if a solver ran) and wall time.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._backend import BACKEND
from .clustering import (
    ClusterAssignment,
    build_similarity,
    clustering_error,
    gaussian_affinity,
    spectral_cluster,
    subspace_represent,
)
from .datagen import gen_dynamic_background, gen_five_clusters, gen_union_of_subspaces
from .penalties import PenaltySpec
from .rpca import RpcaInput, foreground_mask, rpca_solve
from .solver import SolveConfig

IMAGE_SUFFIXES = (".pgm", ".png")
DEFAULT_BANDWIDTH = 0.2


class IngestError(Exception):
    """Base class for frame-directory problems."""


class EmptyDirectory(IngestError):
    pass


class UnreadableImage(IngestError):
    pass


class MixedDimensions(IngestError):
    pass


class UsageError(Exception):
    """Bad flag combination detected after argparse; maps to exit code 2."""


@dataclass
class FrameStack:
    """Equal-sized grayscale frames with pixel values in [0, 1].

    ``frames`` has shape ``(m, height, width)``.
    """

    frames: np.ndarray
    names: list

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]

    @property
    def Y(self):
        """``(height * width, m)`` matrix of column-major vectorised frames."""
        m = self.frames.shape[0]
        return np.ascontiguousarray(self.frames.transpose(2, 1, 0).reshape(-1, m))


def _read_gray(path):
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            arr = np.asarray(im)
            mode = im.mode
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc
    if mode in ("1",):
        return arr.astype(np.float64)
    if np.issubdtype(arr.dtype, np.integer):
        top = 65535.0 if arr.dtype.itemsize > 1 or mode.startswith("I;16") else 255.0
        arr = arr.astype(np.float64) / top
    else:
        arr = arr.astype(np.float64)
    if arr.ndim == 3:
        channels = 3 if mode in ("RGB", "RGBA", "RGBX") else (1 if mode == "LA" else arr.shape[2])
        arr = arr[:, :, :channels].mean(axis=2)
    return arr


def ingest_frames(dir_path, limit=None):
    """Load every ``.pgm``/``.png`` file in ``dir_path`` in lexicographic order.

    Colour images become grayscale by an unweighted mean of the colour
    channels; alpha is ignored.

    Raises
    ------
    EmptyDirectory, UnreadableImage, MixedDimensions
    """
    if not os.path.isdir(dir_path):
        raise EmptyDirectory(f"{dir_path} is not a directory")
    names = sorted(n for n in os.listdir(dir_path) if n.lower().endswith(IMAGE_SUFFIXES))
    if limit is not None:
        names = names[:limit]
    if not names:
        raise EmptyDirectory(f"no PGM or PNG images in {dir_path}")
    frames = []
    for name in names:
        arr = _read_gray(os.path.join(dir_path, name))
        if frames and arr.shape != frames[0].shape:
            raise MixedDimensions(f"{name} is {arr.shape}, expected {frames[0].shape}")
        frames.append(arr)
    return FrameStack(frames=np.stack(frames), names=names)


def read_csv(path):
    M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return M


def write_csv(path, M, fmt="%.17g"):
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    np.savetxt(path, M, delimiter=",", fmt=fmt)


def _quantize(M):
    lo, hi = float(np.min(M)), float(np.max(M))
    if hi <= lo:
        return np.zeros(M.shape, dtype=np.uint8)
    return np.rint((M - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def write_frames(directory, M, height, width, prefix, binary=False):
    """Write each column of ``M`` as a PNG of shape ``(height, width)``."""
    from PIL import Image

    os.makedirs(directory, exist_ok=True)
    Q = (np.asarray(M, dtype=bool).astype(np.uint8) * 255) if binary else _quantize(M)
    for t in range(Q.shape[1]):
        frame = Q[:, t].reshape(height, width, order="F")
        Image.fromarray(frame, mode="L").save(os.path.join(directory, f"{prefix}_{t:04d}.png"))


def _write_report(out_dir, report):
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _solve_config(args):
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("--config must hold a JSON object")
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        return SolveConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad --config: {exc}") from exc


def _penalty(args, kappa=None):
    kappa = args.kappa if kappa is None else kappa
    if kappa is None:
        raise UsageError("--kappa is required")
    name = args.penalty or "huber"
    try:
        if name == "huber":
            if args.sigma is not None:
                raise UsageError("--sigma only applies to --penalty tiber")
            return PenaltySpec.huber(kappa)
        return PenaltySpec.tiber(kappa, 1.0 if args.sigma is None else args.sigma)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _prepare_output(args):
    out = args.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _base_report(args, argv):
    return {"command": ["robustrep"] + list(argv), "subcommand": args.command,
            "version": __version__, "backend": BACKEND}


def _parse_shape(text):
    try:
        h, w = (int(x) for x in text.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"--frame-shape must look like HxW, got {text!r}") from exc
    return h, w


# ---------------------------------------------------------------------------
def cmd_rpca(args, argv):
    t0 = time.perf_counter()
    if args.kappa is None:
        raise UsageError("--kappa is required")
    spec = _penalty(args)
    config = _solve_config(args)
    if os.path.isdir(args.input):
        stack = ingest_frames(args.input, args.limit)
        Y, shape = stack.Y, (stack.height, stack.width)
    else:
        Y = read_csv(args.input)
        if args.limit is not None:
            Y = Y[:, : args.limit]
        shape = _parse_shape(args.frame_shape) if args.frame_shape else None
        if shape and shape[0] * shape[1] != Y.shape[0]:
            raise UsageError(f"--frame-shape {args.frame_shape} does not match {Y.shape[0]} rows")
    try:
        inp = RpcaInput(Y, args.rank, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = rpca_solve(inp, config, init=args.init, restarts=args.restarts)
    mask = foreground_mask(res.S)

    out = _prepare_output(args)
    write_csv(os.path.join(out, "L.csv"), res.L)
    write_csv(os.path.join(out, "S.csv"), res.S)
    write_csv(os.path.join(out, "mask.csv"), mask.astype(np.uint8), fmt="%d")
    if shape is not None:
        write_frames(os.path.join(out, "L"), res.L, *shape, prefix="L")
        write_frames(os.path.join(out, "S"), res.S, *shape, prefix="S")
        write_frames(os.path.join(out, "mask"), mask, *shape, prefix="mask", binary=True)
    report = _base_report(args, argv)
    report.update({
        "parameters": {"penalty": spec.to_dict(), "rank": inp.rank, "init": args.init,
                       "restarts": args.restarts, "config": config.to_dict(),
                       "shape": list(Y.shape), "frame_shape": list(shape) if shape else None},
        "seed": config.seed,
        "objective_trace": res.report.objective_trace,
        "iterations": res.report.iterations,
        "converged": res.report.converged,
        "foreground_fraction": float(mask.mean()),
        "wall_time": time.perf_counter() - t0,
    })
    _write_report(out, report)
    return 0


def _load_points(args):
    """Return the data with one point per column."""
    if os.path.isdir(args.input):
        return ingest_frames(args.input, args.limit).Y
    P = read_csv(args.input)
    if args.limit is not None:
        P = P[: args.limit]
    return P.T.copy()


def _load_truth(path):
    with open(path) as fh:
        data = json.load(fh)
    labels = data["labels"] if isinstance(data, dict) else data
    return ClusterAssignment(np.asarray(labels, dtype=np.int64), int(np.max(labels)) + 1)


def cmd_cluster(args, argv):
    t0 = time.perf_counter()
    config = _solve_config(args)
    Y = _load_points(args)
    m = Y.shape[1]
    if not 1 <= args.k <= m:
        raise UsageError(f"--k must lie in [1, {m}] for {m} points")
    traces = {}
    params = {"mode": args.mode, "k": args.k, "robust": args.robust, "config": config.to_dict(),
              "points": m, "dimension": Y.shape[0]}
    if args.mode == "subspace":
        if args.lam is None:
            raise UsageError("--lambda is required for --mode subspace")
        spec = _penalty(args)
        C, rep = subspace_represent(Y, args.lam, spec, config)
        traces["subspace"] = rep.objective_trace
        W = build_similarity(C)
        params.update({"penalty": spec.to_dict(), "lambda": args.lam})
    else:
        if args.lam is not None:
            raise UsageError("--lambda only applies to --mode subspace")
        bandwidth = DEFAULT_BANDWIDTH if args.bandwidth is None else args.bandwidth
        if not bandwidth > 0:
            raise UsageError("--bandwidth must be positive")
        W = gaussian_affinity(Y.T, bandwidth)
        params["bandwidth"] = bandwidth

    spectral_spec = None
    if args.robust:
        kappa = args.spectral_kappa if args.spectral_kappa is not None else args.kappa
        if kappa is None:
            raise UsageError("--robust needs --kappa or --spectral-kappa")
        spectral_spec = _penalty(args, kappa)
        params["spectral_penalty"] = spectral_spec.to_dict()
    seed = config.seed
    result = spectral_cluster(W, args.k, robust=args.robust, penalty=spectral_spec,
                              config=config, seed=seed)
    if result.report is not None:
        traces["spectral"] = result.report.objective_trace

    out = _prepare_output(args)
    with open(os.path.join(out, "labels.csv"), "w") as fh:
        fh.write(result.to_csv())
    write_csv(os.path.join(out, "similarity.csv"), W)
    write_csv(os.path.join(out, "embedding.csv"), result.embedding)
    report = _base_report(args, argv)
    report.update({"parameters": params, "seed": seed, "objective_trace": traces,
                   "inertia": result.inertia})
    if args.truth:
        truth = _load_truth(args.truth)
        if truth.labels.shape[0] != m:
            raise UsageError(f"truth has {truth.labels.shape[0]} labels for {m} points")
        report["clustering_error"] = clustering_error(result, truth)
    report["wall_time"] = time.perf_counter() - t0
    _write_report(out, report)
    return 0


def cmd_gen(args, argv):
    t0 = time.perf_counter()
    seed = 0 if args.seed is None else args.seed
    out = _prepare_output(args)
    truth = {"generator": args.generator, "seed": seed}
    if args.generator == "five-clusters":
        ds = gen_five_clusters(seed)
        write_csv(os.path.join(out, "data.csv"), ds.Y.T)
        truth.update(ds.params, labels=ds.truth_labels.tolist())
    elif args.generator == "union-subspaces":
        ds = gen_union_of_subspaces(num_subspaces=args.subspaces, seed=seed)
        write_csv(os.path.join(out, "data.csv"), ds.Y.T)
        write_csv(os.path.join(out, "clean.csv"), ds.truth_L.T)
        write_csv(os.path.join(out, "support.csv"), ds.truth_S_support.T.astype(np.uint8), fmt="%d")
        truth.update(ds.params, labels=ds.truth_labels.tolist())
    else:
        kwargs = {} if args.frames is None else {"frames": args.frames}
        ds = gen_dynamic_background(seed=seed, **kwargs)
        h, w = ds.params["height"], ds.params["width"]
        write_csv(os.path.join(out, "data.csv"), ds.Y)
        write_csv(os.path.join(out, "support.csv"), ds.truth_S_support.astype(np.uint8), fmt="%d")
        _write_unit_frames(os.path.join(out, "frames"), ds.Y, h, w)
        truth.update(ds.params, support_file="support.csv", frames_dir="frames")
    with open(os.path.join(out, "truth.json"), "w") as fh:
        json.dump(truth, fh, indent=2, default=_json_default)
        fh.write("\n")
    report = _base_report(args, argv)
    report.update({"parameters": truth, "seed": seed, "objective_trace": None,
                   "wall_time": time.perf_counter() - t0})
    _write_report(out, report)
    return 0


def _write_unit_frames(directory, Y, height, width):
    """Frames with values in [0, 1] written as ``round(255 * value)``."""
    from PIL import Image

    os.makedirs(directory, exist_ok=True)
    Q = np.rint(np.clip(Y, 0.0, 1.0) * 255.0).astype(np.uint8)
    for t in range(Q.shape[1]):
        Image.fromarray(Q[:, t].reshape(height, width, order="F"), mode="L").save(
            os.path.join(directory, f"frame_{t:04d}.png"))


# ---------------------------------------------------------------------------
def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for outputs (created if needed)")
    common.add_argument("--seed", type=_nonneg_int, help="seed for initialisation, k-means and generators")
    common.add_argument("--config", help="JSON file with SolveConfig fields")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--input", required=True, help="CSV file or directory of PGM/PNG images")
    solver.add_argument("--penalty", choices=["huber", "tiber"], default=None, help="default: huber")
    solver.add_argument("--kappa", type=float, help="penalty threshold parameter")
    solver.add_argument("--sigma", type=float, help="Tiber scale (default 1)")
    solver.add_argument("--limit", type=_positive_int, help="use only the first N frames or points")

    parser = argparse.ArgumentParser(prog="robustrep", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rpca", parents=[common, solver], help="robust PCA background/foreground split")
    p.add_argument("--rank", type=_positive_int, default=10)
    p.add_argument("--init", choices=["svd", "random"], default="svd")
    p.add_argument("--restarts", type=_nonneg_int, default=0, help="extra random starts")
    p.add_argument("--frame-shape", help="HxW of each frame when --input is a CSV file")

    p = sub.add_parser("cluster", parents=[common, solver], help="spectral or subspace clustering")
    p.add_argument("--mode", choices=["spectral", "subspace"], default="spectral")
    p.add_argument("--k", type=_positive_int, required=True, help="number of clusters")
    p.add_argument("--lambda", dest="lam", type=float, help="L1 weight for --mode subspace")
    p.add_argument("--robust", action="store_true", help="robust eigen-factorization of W")
    p.add_argument("--spectral-kappa", type=float, help="kappa for --robust (default: --kappa)")
    p.add_argument("--bandwidth", type=float,
                   help=f"Gaussian affinity bandwidth for --mode spectral (default {DEFAULT_BANDWIDTH})")
    p.add_argument("--truth", help="JSON sidecar with a 'labels' list; adds clustering_error")

    p = sub.add_parser("gen", parents=[common], help="write a synthetic dataset")
    p.add_argument("generator", choices=["five-clusters", "union-subspaces", "dynamic-bg"])
    p.add_argument("--subspaces", type=_positive_int, default=3)
    p.add_argument("--frames", type=_positive_int)
    return parser


_COMMANDS = {"rpca": cmd_rpca, "cluster": cmd_cluster, "gen": cmd_gen}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return _COMMANDS[args.command](args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"robustrep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, OSError, ValueError, ArithmeticError, RuntimeError,
            np.linalg.LinAlgError, KeyError) as exc:
        print(f"robustrep {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
