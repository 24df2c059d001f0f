"""oahash command line: program generation, hashing, retrieval, sweeps, reports.

Exit status: 0 success, 1 usage error, 2 data or integrity error.
"""

import argparse
import os
import re
import sys
from pathlib import Path

import yaml

from . import curves, evaluation, hashing, imaging, localisation, privacy
from .errors import OAHashError
from .rng import derive_seed

OUTPUT_DIR_ENV = "OAHASH_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _output(path, default_name):
    if path:
        return Path(path)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, [])]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _check_inputs(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"input file not found: {p}")


def _check_output(path):
    parent = Path(path).parent
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")


def _write(path, data):
    path = Path(path)
    if isinstance(data, str):
        path.write_text(data)
    else:
        path.write_bytes(data)


def _read_program(path):
    return curves.load_program(Path(path).read_bytes())


# subcommand handlers ---------------------------------------------------------

def cmd_program_gen(args):
    _need(args, "kind", "n", "width", "height", "seed")
    out = _output(args.output, "camera.oaprog")
    _check_output(out)
    if args.kind == curves.LINE and (args.rmin is not None or args.rmax is not None):
        raise UsageError("--rmin/--rmax only apply to --kind circle")
    prog = curves.gen_program(args.kind, args.n, args.width, args.height, args.seed, args.rmin, args.rmax)
    _write(out, curves.save_program(prog))
    print(f"wrote {out}: {prog.curve_kind} n={prog.n} {prog.width}x{prog.height} "
          f"seed={prog.seed} digest={prog.digest:016x}")


def cmd_hash(args):
    _need(args, "program", "image")
    _check_inputs(args.program, *args.image)
    multi = len(args.image) > 1
    if multi:
        outdir = _output(args.output, "")
        if not outdir.is_dir():
            raise UsageError(f"with several images -o must be an existing directory: {outdir}")
        outs = [outdir / (Path(p).stem + ".oahf") for p in args.image]
    else:
        outs = [_output(args.output, Path(args.image[0]).stem + ".oahf")]
        _check_output(outs[0])
    prog = _read_program(args.program)

    def one(i):
        img = imaging.load_grayscale(args.image[i])
        seed = None
        if args.per_image_seed is not None:
            seed = derive_seed(args.per_image_seed, i) if multi else args.per_image_seed
        return hashing.save_fingerprint(hashing.fingerprint(img, prog, seed))

    blobs = evaluation._pmap(one, range(len(args.image)), args.jobs)
    for out, blob in zip(outs, blobs):
        _write(out, blob)
    mode = "randomized" if args.per_image_seed is not None else "fixed"
    print(f"hashed {len(blobs)} image(s) with {prog.curve_kind} n={prog.n} ({mode}) -> "
          f"{outs[0] if not multi else outs[0].parent}")


def _fingerprint_ids(paths):
    nums = []
    for p in paths:
        found = re.findall(r"\d+", Path(p).stem)
        nums.append(int(found[-1]) if found else None)
    if None not in nums and len(set(nums)) == len(nums):
        return nums
    return list(range(len(paths)))


def cmd_index_build(args):
    _need(args, "fingerprints")
    paths = sorted(args.fingerprints, key=lambda p: evaluation.natural_key(Path(p).name))
    _check_inputs(*paths)
    out = _output(args.output, "index.oacb")
    _check_output(out)
    fps = [hashing.load_fingerprint(Path(p).read_bytes()) for p in paths]
    ids = _fingerprint_ids(paths)
    cb = localisation.train_codebook(fps, args.k, args.seed)
    index = localisation.build_index(list(zip(ids, fps)), cb)
    _write(out, localisation.save_index(index))
    print(f"wrote {out}: k={cb.k} images={len(index)} pairs={cb.trained_on} seed={args.seed}")


def cmd_query(args):
    _need(args, "index", "fingerprint")
    _check_inputs(args.index, args.fingerprint)
    if args.output:
        _check_output(args.output)
    index = localisation.load_index(Path(args.index).read_bytes())
    fp = hashing.load_fingerprint(Path(args.fingerprint).read_bytes())
    ranked = localisation.query(index, fp, args.top)
    if args.output:
        _write(args.output, "rank,image_id,similarity\n" +
               "".join(f"{r},{i},{s:.9f}\n" for r, (i, s) in enumerate(ranked, 1)))
    else:
        for r, (i, s) in enumerate(ranked, 1):
            print(f"{r}\t{i}\t{s:.6f}")
    print(f"best match: image {ranked[0][0]} (similarity {ranked[0][1]:.6f})")


def cmd_eval_sweep(args):
    if (args.dir is None) == (args.synthetic is None):
        raise UsageError("give exactly one of --dir or --synthetic")
    out = _output(args.output, "report.csv")
    _check_output(out)
    if args.per_query:
        _check_output(args.per_query)
    if args.dir is not None and not Path(args.dir).is_dir():
        raise UsageError(f"dataset directory not found: {args.dir}")
    config = evaluation.EvalConfig(stride=args.stride, tolerance=args.tolerance,
                                   n_values=tuple(args.n), curve_kinds=tuple(args.kind),
                                   modes=tuple(args.mode), k=args.k, seed=args.seed,
                                   r_min=args.rmin if args.rmin is not None else curves.DEFAULT_RADII[0],
                                   r_max=args.rmax if args.rmax is not None else curves.DEFAULT_RADII[1],
                                   baseline=args.baseline)
    if args.dir is not None:
        report = evaluation.evaluate(args.dir, config, args.jobs)
    else:
        frames = evaluation.synthetic_trajectory(args.synthetic, seed=args.seed)
        report = evaluation.evaluate_frames(frames, config, args.jobs)
    _write(out, report.to_csv())
    if args.per_query:
        _write(args.per_query, report.per_query_csv())
    best = max(report.rows, key=lambda r: r.accuracy)
    print(f"wrote {out}: {len(report.rows)} rows, best {best.kind}/{best.mode} n={best.n} "
          f"accuracy={best.accuracy:.4f}")


def cmd_viz_kde(args):
    _need(args, "fingerprint")
    _check_inputs(args.fingerprint)
    out = _output(args.output, Path(args.fingerprint).stem + "_kde.pgm")
    _check_output(out)
    if args.csv:
        _check_output(args.csv)
    fp = hashing.load_fingerprint(Path(args.fingerprint).read_bytes())
    grid = hashing.kde_render(fp, args.resolution, args.bandwidth)
    _write(out, grid.to_pgm())
    if args.csv:
        _write(args.csv, grid.to_csv())
    print(f"wrote {out}: {grid.resolution}x{grid.resolution} density from n={fp.n} pairs")


def cmd_viz_coverage(args):
    _need(args, "program", "image")
    _check_inputs(args.program, args.image)
    out = _output(args.output, Path(args.image).stem + "_coverage.pgm")
    _check_output(out)
    prog = _read_program(args.program)
    rep = privacy.coverage_map(imaging.load_grayscale(args.image), prog)
    _write(out, rep.mask_pgm())
    print(f"wrote {out}: coverage={rep.coverage_fraction:.6f} tv_divergence={rep.divergence:.6f}")


def cmd_census(args):
    if args.program:
        _check_inputs(args.program)
    out = _output(args.output, "census.csv")
    _check_output(out)
    if args.program:
        prog = _read_program(args.program)
        width, height = prog.width, prog.height
    else:
        _need(args, "width", "height", "n")
        width, height = args.width, args.height
        radii = (args.rmin, args.rmax) if args.kind == curves.CIRCLE else (None, None)
        prog = curves.gen_program(args.kind, args.n, width, height, args.seed, *radii)
    census = privacy.collision_census(width, height, args.levels, prog, jobs=args.jobs)
    _write(out, census.to_csv())
    print(f"wrote {out}: {census.summary()}")


def cmd_audit(args):
    _need(args, "fingerprint")
    _check_inputs(args.fingerprint)
    result = privacy.leak_audit(Path(args.fingerprint).read_bytes(), args.width, args.height)
    print(result.summary())


def cmd_synth(args):
    out = Path(args.output) if args.output else _output(None, "frames")
    if not out.is_dir():
        raise UsageError(f"output directory does not exist: {out}")
    frames = evaluation.synthetic_trajectory(args.frames, args.width, args.height, seed=args.seed)
    for i, f in enumerate(frames):
        imaging.save_pgm(f, out / f"frame{i:04d}.pgm")
    print(f"wrote {len(frames)} frames of {args.width}x{args.height} to {out}")


# parser ------------------------------------------------------------------------

def _add_common(p, jobs=False):
    p.add_argument("--config", help="YAML file of option values; flags given on the command line win")
    p.add_argument("-o", "--output", help=f"output path (default under ${OUTPUT_DIR_ENV} or .)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")


def build_parser():
    parser = _Parser(prog="oahash", description="Simulated privacy-preserving extrema-hashing camera.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    leaves = {}

    prog = sub.add_parser("program", help="camera programs").add_subparsers(dest="action", parser_class=_Parser)
    p = prog.add_parser("gen", help="generate a fixed random curve set (.oaprog: 'OAPG' header + u16 curve records)")
    _add_common(p)
    p.add_argument("--kind", choices=[curves.LINE, curves.CIRCLE])
    p.add_argument("--n", type=int, help="number of curves")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--rmin", type=int, help="smallest circle radius (default 15)")
    p.add_argument("--rmax", type=int, help="largest circle radius (default 50)")
    p.add_argument("--seed", type=int, help="64-bit splitmix64 seed")
    p.set_defaults(handler=cmd_program_gen)
    leaves["program gen"] = p

    p = sub.add_parser("hash", help="fingerprint images (.oahf: 'OAHF' header + sorted (min,max) bytes)")
    _add_common(p, jobs=True)
    p.add_argument("--program", help="camera program file")
    p.add_argument("--image", nargs="+", help="PNG or PGM image(s); with several, -o is a directory")
    p.add_argument("--per-image-seed", type=int,
                   help="draw fresh curves per image from this seed instead of using the program's")
    p.set_defaults(handler=cmd_hash)
    leaves["hash"] = p

    idx = sub.add_parser("index", help="retrieval indexes").add_subparsers(dest="action", parser_class=_Parser)
    p = idx.add_parser("build", help="train a codebook and build a TF-IDF index (.oacb)")
    _add_common(p)
    p.add_argument("--fingerprints", nargs="+",
                   help="fingerprint files; image id = last number in the file name, else sorted position")
    p.add_argument("--k", type=int, default=localisation.DEFAULT_K, help="vocabulary size (default 64)")
    p.add_argument("--seed", type=int, default=0, help="k-means seeding seed")
    p.set_defaults(handler=cmd_index_build)
    leaves["index build"] = p

    p = sub.add_parser("query", help="rank indexed images against a fingerprint")
    _add_common(p)
    p.add_argument("--index")
    p.add_argument("--fingerprint")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(handler=cmd_query)
    leaves["query"] = p

    ev = sub.add_parser("eval", help="evaluation").add_subparsers(dest="action", parser_class=_Parser)
    p = ev.add_parser("sweep", help="accuracy over n / curve kind / mode; CSV kind,mode,n,k,accuracy,queries,seed")
    _add_common(p, jobs=True)
    p.add_argument("--dir", help="directory of PNG/PGM frames in natural-sort trajectory order")
    p.add_argument("--synthetic", type=int, help="use a synthetic panning trajectory of this many frames")
    p.add_argument("--stride", type=int, default=20)
    p.add_argument("--tolerance", type=int, default=30)
    p.add_argument("--n", type=_int_list, default=[4, 16, 64, 256, 1024, 4096], help="comma-separated curve counts")
    p.add_argument("--kind", type=_str_list, default=[curves.CIRCLE], help="comma-separated: line,circle")
    p.add_argument("--mode", type=_str_list, default=[evaluation.FIXED], help="comma-separated: fixed,random")
    p.add_argument("--k", type=int, default=localisation.DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rmin", type=int)
    p.add_argument("--rmax", type=int)
    p.add_argument("--baseline", action="store_true", help="add a SIFT-lite keypoint row")
    p.add_argument("--per-query", help="also write query_id,predicted_id,correct CSV here")
    p.set_defaults(handler=cmd_eval_sweep)
    leaves["eval sweep"] = p

    viz = sub.add_parser("viz", help="visualisations").add_subparsers(dest="action", parser_class=_Parser)
    p = viz.add_parser("kde", help="smoothed extrema-pair density as PGM (and CSV row,col,value)")
    _add_common(p)
    p.add_argument("--fingerprint")
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--bandwidth", type=float, help="kernel width in intensity units (default Silverman)")
    p.add_argument("--csv", help="also write the grid as CSV")
    p.set_defaults(handler=cmd_viz_kde)
    leaves["viz kde"] = p

    p = viz.add_parser("coverage", help="PGM mask of pixels that supplied an extremum")
    _add_common(p)
    p.add_argument("--program")
    p.add_argument("--image")
    p.set_defaults(handler=cmd_viz_coverage)
    leaves["viz coverage"] = p

    p = sub.add_parser("census", help="exhaustive hash-collision census on a tiny frame (CSV preimage_size,hash_count)")
    _add_common(p, jobs=True)
    p.add_argument("--program", help="existing program; otherwise one is generated")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--kind", choices=[curves.LINE, curves.CIRCLE], default=curves.LINE)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rmin", type=int)
    p.add_argument("--rmax", type=int)
    p.set_defaults(handler=cmd_census)
    leaves["census"] = p

    p = sub.add_parser("audit", help="check a fingerprint file exposes only sorted extrema bytes")
    p.add_argument("--config", help="YAML file of option values")
    p.add_argument("fingerprint", nargs="?")
    p.add_argument("--width", type=int, help="source image width, for the payload/pixel ratio")
    p.add_argument("--height", type=int)
    p.set_defaults(handler=cmd_audit)
    leaves["audit"] = p

    p = sub.add_parser("synth", help="write a synthetic panning trajectory as PGM frames")
    _add_common(p)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_synth)
    leaves["synth"] = p
    return parser, leaves


def _leaf_name(args):
    return args.command if getattr(args, "action", None) is None else f"{args.command} {args.action}"


def load_config(path, leaf):
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping of option names to values")
    known = {a.dest: a for a in leaf._actions if a.dest not in ("help", "config", "handler")}
    values = {}
    for key, value in data.items():
        dest = str(key).replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown key {key!r} in config {path}")
        action = known[dest]
        if action.type is not None and isinstance(value, (str, int, float)) and not isinstance(value, bool):
            try:
                value = action.type(value if action.type not in (_int_list, _str_list) else str(value))
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for {key!r} in config {path}: {exc}") from None
        elif isinstance(value, list) and action.type in (_int_list, _str_list):
            value = action.type(",".join(str(v) for v in value))
        if action.nargs == "+" and not isinstance(value, list):
            value = [value]
        values[dest] = value
    return values


def parse_args(argv):
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    leaf = leaves.get(_leaf_name(args))
    if leaf is None:
        raise UsageError("missing subcommand; see --help")
    if getattr(args, "config", None):
        leaf.set_defaults(**load_config(args.config, leaf))
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OAHashError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
