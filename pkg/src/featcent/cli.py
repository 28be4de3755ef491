"""Command-line surface.

Every command is deterministic given its inputs and flags and emits a run
manifest (command line, parameters, SHA-256 digests of the inputs, tool
version, wall-clock duration) next to its primary output so reruns are
verifiable.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.

Set FEATCENT_NUM_THREADS to cap the BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

if os.environ.get("FEATCENT_NUM_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["FEATCENT_NUM_THREADS"])

import numpy as np

from . import __version__
from .centralize import AggregateParams, NfcParams, aggregate, nfc, pipeline
from .cleanse import build_manifests, outlier_filter
from .core import l2_normalize
from .errors import DataError, NumericalError
from .evaluation import EvalProtocol, evaluate, id2, k_reciprocal_rerank
from .fileio import read_aux, read_embeddings, read_keypoints, write_aux, write_embeddings
from .synth import SynthConfig, generate, split_query_gallery

USAGE_ERROR, DATA_ERROR, NUMERICAL_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(anchor_path, argv, params: dict, inputs: list, started: float):
    manifest = {
        "command": argv,
        "parameters": params,
        "inputs": {str(p): _sha256(p) for p in inputs if Path(p).exists()},
        "tool_version": __version__,
        "duration_s": round(time.monotonic() - started, 6),
    }
    path = Path(str(anchor_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


def _load_normalized(path):
    return l2_normalize(read_embeddings(path))


def _cmd_nfc(args, argv):
    started = time.monotonic()
    fset = _load_normalized(args.input)
    out = nfc(fset, NfcParams(args.k1, args.k2))
    write_embeddings(out, args.output)
    _write_manifest(args.output, argv, {"k1": args.k1, "k2": args.k2}, [args.input], started)
    return 0


def _cmd_aggregate(args, argv):
    started = time.monotonic()
    fset = _load_normalized(args.input)
    aux = read_aux(args.aux)
    out = aggregate(fset, aux, AggregateParams(args.eta))
    write_embeddings(out, args.output)
    _write_manifest(args.output, argv, {"eta": args.eta}, [args.input, args.aux], started)
    return 0


def _cmd_pipeline(args, argv):
    started = time.monotonic()
    fset = _load_normalized(args.input)
    aux = read_aux(args.aux) if args.aux else None
    agg = AggregateParams(args.eta) if aux is not None else None
    nfc_params = NfcParams(args.k1, args.k2) if args.k1 is not None else None
    result = pipeline(fset, aux, agg, nfc_params)
    write_embeddings(result.features, args.output)
    inputs = [args.input] + ([args.aux] if args.aux else [])
    manifest = _write_manifest(args.output, argv, {"stages": list(result.stages)}, inputs, started)
    print(json.dumps(manifest["parameters"]))
    return 0


def _cmd_eval(args, argv):
    started = time.monotonic()
    query = _load_normalized(args.query)
    gallery = _load_normalized(args.gallery)
    protocol = EvalProtocol(cam_filter=not args.no_cam_filter, max_rank=args.max_rank)
    distances = None
    if args.rerank:
        distances = k_reciprocal_rerank(query, gallery, args.rk1, args.rk2, getattr(args, "lambda"))
    result = evaluate(query, gallery, protocol, distances)
    union = np.vstack([query.features, gallery.features])
    from .core import FeatureSet

    union_set = FeatureSet(union, np.concatenate([query.ids, gallery.ids]))
    density = id2(union_set)

    ranks = [1, 5, 10]
    lines = [
        f"queries evaluated : {result.n_valid_queries}",
        f"mAP               : {result.map:.4f}",
    ]
    for r in ranks:
        if r <= protocol.max_rank:
            lines.append(f"Rank-{r:<13}: {result.cmc[r - 1]:.4f}")
    lines.append(f"ID^2 (query+gal)  : {density:.4f}")
    report_text = "\n".join(lines) + "\n"
    Path(args.report).write_text(report_text, encoding="utf-8")
    payload = {
        "map": result.map,
        "cmc": result.cmc.tolist(),
        "id2": density,
        "n_valid_queries": result.n_valid_queries,
        "rerank": bool(args.rerank),
    }
    Path(str(args.report) + ".json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_manifest(
        args.report, argv,
        {"cam_filter": protocol.cam_filter, "max_rank": protocol.max_rank,
         "rerank": bool(args.rerank), "rk1": args.rk1, "rk2": args.rk2,
         "lambda": getattr(args, "lambda")},
        [args.query, args.gallery], started,
    )
    sys.stdout.write(report_text)
    return 0


def _cmd_id2(args, argv):
    started = time.monotonic()
    sets = [read_embeddings(p) for p in args.input]
    from .core import FeatureSet

    union = FeatureSet(
        np.vstack([s.features for s in sets]),
        np.concatenate([s.ids for s in sets]),
    )
    value = id2(union)
    manifest = {
        "command": argv,
        "inputs": {str(p): _sha256(p) for p in args.input},
        "tool_version": __version__,
        "duration_s": round(time.monotonic() - started, 6),
    }
    print(json.dumps({"id2": value, "manifest": manifest}))
    return 0


def _report_payload(report):
    return {
        "kept": [int(i) for i in report.kept],
        "removed": [{"index": i, "reason": r} for i, r in report.removed],
        "per_id_bounds": {str(k): list(v) for k, v in report.per_id_bounds.items()},
        "too_few_ids": list(report.too_few_ids),
    }


def _cmd_cleanse(args, argv):
    started = time.monotonic()
    fset = _load_normalized(args.input)
    if args.keypoints:
        poses = read_keypoints(args.keypoints)
        s_ref, s_trg = build_manifests(fset, poses, args.quantile)
        pose_screen = True
    else:
        s_ref = outlier_filter(fset, args.quantile)
        s_trg = s_ref
        pose_screen = False
    for path, report in ((args.out_ref, s_ref), (args.out_trg, s_trg)):
        payload = _report_payload(report)
        payload["pose_screen"] = pose_screen
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    inputs = [args.input] + ([args.keypoints] if args.keypoints else [])
    _write_manifest(args.out_ref, argv, {"quantile": args.quantile, "pose_screen": pose_screen},
                    inputs, started)
    return 0


def _cmd_select_representative(args, argv):
    started = time.monotonic()
    fset = _load_normalized(args.input)
    from .centralize import select_representative

    reps = {}
    for lab in np.unique(fset.ids):
        if lab < 0:
            continue
        idx = select_representative(fset, int(lab))
        reps[str(int(lab))] = {
            "index": idx,
            "name": None if fset.names is None else fset.names[idx],
        }
    Path(args.report).write_text(json.dumps({"representatives": reps}, indent=2) + "\n", encoding="utf-8")
    _write_manifest(args.report, argv, {}, [args.input], started)
    return 0


def _cmd_synth(args, argv):
    started = time.monotonic()
    config = SynthConfig(
        n_ids=args.ids, samples_per_id=args.per_id, dim=args.dim, sigma=args.sigma,
        aux_per_sample=args.aux_m, aux_sigma=args.aux_sigma, seed=args.seed,
    )
    fset, aux = generate(config)
    queries_per_id = min(2, max(args.per_id - 1, 1))
    query, gallery, q_aux, g_aux = split_query_gallery(fset, aux, queries_per_id)
    prefix = args.out_prefix
    write_embeddings(gallery, f"{prefix}_gallery.p2id")
    write_embeddings(query, f"{prefix}_query.p2id")
    outputs = [f"{prefix}_gallery.p2id", f"{prefix}_query.p2id"]
    if args.aux_m > 0:
        write_aux(g_aux, gallery, f"{prefix}_gallery_aux.p2id")
        write_aux(q_aux, query, f"{prefix}_query_aux.p2id")
        outputs += [f"{prefix}_gallery_aux.p2id", f"{prefix}_query_aux.p2id"]
    params = {
        "n_ids": args.ids, "samples_per_id": args.per_id, "dim": args.dim,
        "sigma": args.sigma, "aux_per_sample": args.aux_m, "aux_sigma": args.aux_sigma,
        "seed": args.seed, "queries_per_id": queries_per_id, "outputs": outputs,
    }
    _write_manifest(f"{prefix}_gallery.p2id", argv, params, [], started)
    print(json.dumps({"outputs": outputs}))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="featcent", description="Feature centralization and ReID evaluation toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nfc", help="mutual-neighbor feature centralization")
    p.add_argument("--input", required=True)
    p.add_argument("--k1", type=int, default=2, help="outward neighbor count (default 2)")
    p.add_argument("--k2", type=int, default=2, help="reciprocal check depth (default 2)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_nfc)

    p = sub.add_parser("aggregate", help="auxiliary-feature aggregation")
    p.add_argument("--input", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--eta", type=float, default=1.0, help="auxiliary quality coefficient (default 1.0)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("pipeline", help="aggregation followed by neighbor centralization")
    p.add_argument("--input", required=True)
    p.add_argument("--aux")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("eval", help="mAP / CMC / identity-density evaluation")
    p.add_argument("--query", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--rerank", action="store_true", help="apply k-reciprocal re-ranking")
    p.add_argument("--rk1", type=int, default=20)
    p.add_argument("--rk2", type=int, default=6)
    p.add_argument("--lambda", type=float, default=0.3, help="blend toward the original distance")
    p.add_argument("--no-cam-filter", action="store_true")
    p.add_argument("--max-rank", type=int, default=50)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("id2", help="identity density of one or more sets (unioned)")
    p.add_argument("--input", nargs="+", required=True)
    p.set_defaults(func=_cmd_id2)

    p = sub.add_parser("cleanse", help="Mahalanobis quantile filter and pose screen")
    p.add_argument("--input", required=True)
    p.add_argument("--keypoints")
    p.add_argument("--quantile", type=float, required=True)
    p.add_argument("--out-ref", required=True)
    p.add_argument("--out-trg", required=True)
    p.set_defaults(func=_cmd_cleanse)

    p = sub.add_parser("select-representative", help="closest-to-center sample per identity")
    p.add_argument("--input", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_select_representative)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--ids", type=int, default=50)
    p.add_argument("--per-id", type=int, default=10)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--aux-m", type=int, default=0)
    p.add_argument("--aux-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        return args.func(args, ["featcent"] + argv)
    except NumericalError as exc:
        print(f"featcent: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (DataError, FileNotFoundError, ValueError) as exc:
        print(f"featcent: data error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
