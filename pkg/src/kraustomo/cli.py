"""Command-line front end: synth, reconstruct, fidelity, benchmark.

Exit codes: 0 success, 2 usage error, 3 method/data incompatibility,
4 numerical failure.  The QPT_SEED environment variable overrides --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import bench, cv, data, dv, gd, pls
from .core import ChoiMatrix, KrausStack, kraus_to_choi, process_fidelity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCOMPATIBLE = 3
EXIT_NUMERICAL = 4

SCHEMA_VERSION = 1


def _seed(args):
    env = os.environ.get("QPT_SEED")
    return int(env) if env else args.seed


def _parse_grid(text):
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(
            "grid must be re_min,re_max,im_min,im_max,rows,cols")
    return cv.CvGrid(float(parts[0]), float(parts[1]), float(parts[2]),
                     float(parts[3]), int(parts[4]), int(parts[5]))


def _parse_phases(text):
    return [float(p) for p in text.split(",")]


def cmd_synth(args):
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    if args.kind == "dv":
        ens = dv.pauli_ensemble(args.qubits)
        process = dv.random_process(ens.dim, args.rank, rng)
        tomogram = data.synthesize(
            process, ens.probes, ens.measurements, args.noise, rng,
            kind="dv", seed=seed,
            probe_spec={"type": "pauli", "n_qubits": args.qubits},
            meas_spec={"type": "pauli", "n_qubits": args.qubits})
    else:
        if args.process != "snap-displace":
            raise argparse.ArgumentTypeError(
                f"unknown CV process {args.process!r}")
        phases = _parse_phases(args.theta) if args.theta else cv.DEFAULT_PHASES
        process = cv.snap_displace_process(args.alpha, phases, args.dim)
        probe_grid = args.probe_grid or cv.probe_grid()
        meas_grid = args.meas_grid or cv.measurement_grid()
        probes = [cv.coherent_state(a, args.dim) for a in probe_grid.points]
        meas = [cv.displaced_parity(b, args.dim) for b in meas_grid.points]
        tomogram = data.synthesize(
            process, probes, meas, args.noise, rng, kind="cv", seed=seed,
            probe_spec={"type": "coherent_grid", "grid": probe_grid.to_dict()},
            meas_spec={"type": "displaced_parity_grid",
                       "grid": meas_grid.to_dict()})
    if args.gamma is not None:
        tomogram = data.subsample(tomogram, args.gamma, rng)
    data.save(tomogram, args.out)
    if args.csv:
        data.export_csv(tomogram, args.csv)
    print(f"wrote {args.out}: {tomogram.num_probes} probes x "
          f"{tomogram.num_measurements} measurements, noise {args.noise}")
    return EXIT_OK


def _print_and_store_fidelity(doc, tomogram, est_choi):
    if tomogram.truth is not None:
        metric = process_fidelity(kraus_to_choi(tomogram.truth), est_choi)
        doc["fidelity"] = metric.fidelity
        print(f"fidelity {metric.fidelity:.6f}  "
              f"infidelity {metric.infidelity:.6e}")


def cmd_reconstruct(args):
    tomogram = data.load(args.data)
    t0 = time.perf_counter()
    if args.method == "gd":
        cfg = gd.GdConfig(k=args.kraus, eta0=args.lr, decay=args.decay,
                          lam=args.l1, max_iters=args.iters,
                          batch_size=args.batch, seed=_seed(args))
        est, trace = gd.fit(tomogram, cfg)
        doc = {
            "schema_version": SCHEMA_VERSION,
            "method": "gd",
            "config": cfg.to_dict(),
            "kraus": [data.complex_to_json(k) for k in est.blocks],
            "trace": {"loss": trace.loss, "tp_defect": trace.tp_defect,
                      "iter_time_s": trace.iter_time_s},
            "wall_time_s": time.perf_counter() - t0,
        }
        _print_and_store_fidelity(doc, tomogram, kraus_to_choi(est))
    else:
        cfg = pls.PlsConfig(dykstra_max_iters=args.proj_iters,
                            dykstra_tol=args.proj_tol)
        result = pls.fit_pls(tomogram, cfg)
        doc = {
            "schema_version": SCHEMA_VERSION,
            "method": "pls",
            "config": cfg.to_dict(),
            "choi": data.complex_to_json(result.choi.mat),
            "converged": result.converged,
            "projection_cycles": result.cycles,
            "wall_time_s": time.perf_counter() - t0,
        }
        _print_and_store_fidelity(doc, tomogram, result.choi)
        print(f"converged: {str(result.converged).lower()} "
              f"({result.cycles} projection cycles)")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh)
        print(f"wrote {args.out}")
    return EXIT_OK


def _choi_from_file(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise data.SchemaError(f"malformed JSON in {path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise data.SchemaError(f"unsupported schema_version in {path}")
    if doc.get("method") == "gd" or "kraus" in doc:
        blocks = np.array([data.complex_from_json(k) for k in doc["kraus"]])
        return kraus_to_choi(KrausStack(blocks))
    if doc.get("method") == "pls" or "choi" in doc:
        return ChoiMatrix(data.complex_from_json(doc["choi"]))
    if "truth" in doc:
        blocks = np.array([data.complex_from_json(k)
                           for k in doc["truth"]["kraus"]])
        return kraus_to_choi(KrausStack(blocks))
    raise data.SchemaError(f"no Kraus or Choi payload in {path}")


def cmd_fidelity(args):
    metric = process_fidelity(_choi_from_file(args.file_a),
                              _choi_from_file(args.file_b))
    print(f"{metric.fidelity:.12f}")
    print(f"{metric.infidelity:.12e}")
    return EXIT_OK


def cmd_benchmark(args):
    spec = bench.SweepSpec.from_json(args.spec)
    rows, summary = bench.run_benchmark(spec, args.out_csv, args.out_json,
                                        jobs=args.jobs)
    failed = sum(1 for r in rows if r["method"] == "error")
    print(f"{len(rows)} rows -> {args.out_csv} ({failed} failed cells), "
          f"summary -> {args.out_json}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qpt", description="Quantum process tomography toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a tomogram dataset")
    p.add_argument("--kind", choices=["dv", "cv"], required=True)
    p.add_argument("--qubits", type=int, default=2)
    p.add_argument("--rank", type=int, default=16)
    p.add_argument("--dim", type=int, default=cv.DEFAULT_CUTOFF)
    p.add_argument("--process", default="snap-displace")
    p.add_argument("--alpha", type=float, default=cv.DEFAULT_ALPHA)
    p.add_argument("--theta", help="comma-separated SNAP phases")
    p.add_argument("--probe-grid", type=_parse_grid)
    p.add_argument("--meas-grid", type=_parse_grid)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--gamma", type=float, help="keep a fraction of the data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also export the data matrix as CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="reconstruct a process from data")
    p.add_argument("--method", choices=["gd", "pls"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--kraus", type=int, default=3)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--decay", type=float, default=0.999)
    p.add_argument("--l1", type=float, default=1e-3)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proj-iters", type=int, default=1000)
    p.add_argument("--proj-tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fidelity", help="process fidelity between two files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("benchmark", help="run a sweep from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except pls.InformationIncompleteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (argparse.ArgumentTypeError, data.SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
