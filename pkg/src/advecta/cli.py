"""Command-line front end for running transport experiments."""

import argparse
import os
import shutil
import sys
import tempfile

from .harness import ConfigError, RunConfig, run_case

_BOOL_KEYS = {"seed_check", "dump_mesh"}
_INT_KEYS = {"nx", "ny"}
_FLOAT_KEYS = {"dt", "t_end", "h0"}
_STR_KEYS = {"case", "scheme", "mesh", "out"}
_ALL_KEYS = _BOOL_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


class _ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors raise ConfigError instead of exiting.

    argparse exits with status 2 on bad usage, which would collide with
    the exit code reserved for diverged runs; configuration problems of
    any kind must exit 1.
    """

    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _ArgumentParser(
        prog="advecta",
        description="Scalar transport experiments on distorted meshes.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser(
        "run", help="run one experiment and print its summary line")
    run.add_argument("--config", metavar="FILE",
                     help="key=value file supplying defaults for any flag; "
                          "explicit flags override it")
    run.add_argument("--case", choices=("solid_body", "orography", "deform"))
    run.add_argument("--scheme", choices=("split", "mol-implicit", "mol-rk2"))
    run.add_argument("--mesh", choices=("orthogonal", "distorted"))
    run.add_argument("--nx", type=int, help="cells in x")
    run.add_argument("--ny", type=int, help="cells in y (default: nx)")
    run.add_argument("--dt", type=float, help="time step")
    run.add_argument("--t-end", type=float, dest="t_end",
                     help="override the case's end time")
    run.add_argument("--h0", type=float,
                     help="mountain height in metres (orography only)")
    run.add_argument("--out", metavar="DIR",
                     help="directory for field CSVs, run log and summary")
    run.add_argument("--seed-check", action="store_true", default=None,
                     help="determinism check: run twice into scratch "
                          "directories and byte-compare every output file")
    run.add_argument("--dump-mesh", action="store_true", default=None,
                     help="also write the mesh vertex CSV into --out")
    return parser


def _parse_config_file(path):
    """Read a key=value file; '#' starts a comment, blank lines ignored."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("cannot read config file: %s" % exc) from None
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("%s:%d: expected key=value, got %r"
                              % (path, lineno, raw.strip()))
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _convert(key, value):
    """Turn a config-file string into the value type its flag expects."""
    if key not in _ALL_KEYS:
        raise ConfigError("unknown config key %r" % key)
    if key in _BOOL_KEYS:
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError("config key %s: expected a boolean, got %r"
                          % (key, value))
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError("config key %s: cannot parse %r"
                          % (key, value)) from None
    return value


def _merge(args):
    """Combine config-file values with flags; flags win."""
    merged = {}
    if args.config:
        for key, value in _parse_config_file(args.config).items():
            merged[key] = _convert(key, value)
    for key in _ALL_KEYS:
        cli = getattr(args, key)
        if cli is not None:
            merged[key] = cli
    for key in ("case", "scheme", "nx", "dt"):
        if merged.get(key) is None:
            raise ConfigError("missing required option --%s"
                              % key.replace("_", "-"))
    return merged


def _run_config(merged, out):
    return RunConfig(case=merged["case"], scheme=merged["scheme"],
                     nx=merged["nx"], ny=merged.get("ny") or 0,
                     dt=merged["dt"],
                     mesh=merged.get("mesh") or "orthogonal",
                     t_end=merged.get("t_end"), h0=merged.get("h0"),
                     out=out, dump_mesh=bool(merged.get("dump_mesh")))


def _compare_trees(dir_a, dir_b):
    """Byte-compare two output directories; return mismatch descriptions."""
    names_a = sorted(os.listdir(dir_a))
    names_b = sorted(os.listdir(dir_b))
    if names_a != names_b:
        return ["file lists differ: %s vs %s" % (names_a, names_b)]
    mismatches = []
    for name in names_a:
        with open(os.path.join(dir_a, name), "rb") as fh_a, \
                open(os.path.join(dir_b, name), "rb") as fh_b:
            if fh_a.read() != fh_b.read():
                mismatches.append("file %s differs between runs" % name)
    return mismatches


def _seed_check(merged):
    """Run the case twice and byte-compare everything both runs wrote."""
    dirs = [tempfile.mkdtemp(prefix="advecta-seed-") for _ in range(2)]
    try:
        results = [run_case(_run_config(merged, out=d)) for d in dirs]
        print(results[0].summary)
        mismatches = _compare_trees(dirs[0], dirs[1])
        if results[0].summary != results[1].summary:
            mismatches.insert(0, "summary lines differ")
        if mismatches:
            for text in mismatches:
                print("seed-check: %s" % text, file=sys.stderr)
            return 1
        print("seed-check: %d files identical across repeated runs"
              % len(os.listdir(dirs[0])))
        return 0 if results[0].completed else 2
    finally:
        for d in dirs:
            shutil.rmtree(d, ignore_errors=True)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        merged = _merge(args)
        if merged.get("seed_check"):
            return _seed_check(merged)
        result = run_case(_run_config(merged, out=merged.get("out")))
        print(result.summary)
        return 0 if result.completed else 2
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
