"""Command-line interface: build, lift, inspect, forward, train.

Exit codes: 0 success, 2 data/validation error, 64 usage error. Logs go to
stderr; --json switches stdout to JSON lines. TOPOMP_THREADS caps numeric
parallelism (default 1) and must be set before numpy is first imported.
"""

from __future__ import annotations

import os

_threads = os.environ.get("TOPOMP_THREADS", "1")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, _threads)

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import neighborhoods as nb
from .complex import ValidationError
from .harness import permutation_deviation
from .io_formats import (
    SchemaError,
    dumps_canonical,
    read_complex,
    read_hyperedge_list,
    read_off_mesh,
    write_complex,
)
from .layers import init_model_params, model_from_config
from .lifting import clique_lift, cycle_lift, graph_of, group_lift, hyperedge_augment
from .engine import forward_model
from .training import load_dataset, train

USAGE_ERROR = 64
DATA_ERROR = 2

_MATRIX_RE = re.compile(r"^(B|Bt|Ldown|Lup|H|Aup|Adown|D)_?(\d+)$")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _log(msg: str):
    print(msg, file=sys.stderr)


def _emit(args, payload: dict, plain: str):
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(plain)


def _load_any(path: str, fmt: str):
    if fmt == "json":
        return read_complex(path)
    if fmt == "hyperedges":
        return read_hyperedge_list(path), None
    if fmt == "off":
        return read_off_mesh(path)
    raise SchemaError(f"unknown format {fmt!r}")


def _matrix_by_name(complex, name: str):
    m = _MATRIX_RE.match(name)
    if not m:
        raise ValidationError(
            f"cannot parse matrix name {name!r}; use e.g. B_1, Bt_1, Ldown_1, "
            "Lup_0, H_1, Aup_0, Adown_1, D_0"
        )
    kind, r = m.group(1), int(m.group(2))
    ops = {
        "B": nb.incidence,
        "Bt": nb.coboundary,
        "Ldown": nb.down_laplacian,
        "Lup": nb.up_laplacian,
        "H": nb.hodge_laplacian,
        "Aup": nb.adjacency_up,
        "Adown": nb.adjacency_down,
        "D": nb.degree,
    }
    return ops[kind](complex, r)


def cmd_build(args) -> int:
    cx, feats = _load_any(args.input, args.format)
    write_complex(cx, feats, args.output)
    _emit(args, {"event": "build", "shape": list(cx.shape)}, f"cells: {' '.join(map(str, cx.shape))}")
    return 0


def cmd_lift(args) -> int:
    cx, feats = read_complex(args.input)
    if args.method == "clique":
        vs, es = graph_of(cx)
        out = clique_lift(vs, es, args.max_rank)
    elif args.method == "cycles":
        vs, es = graph_of(cx)
        out = cycle_lift(vs, es, args.max_len)
    elif args.method == "groups":
        if not args.groups:
            raise _UsageError("--groups PATH is required for the groups method")
        groups = json.loads(Path(args.groups).read_text(encoding="utf-8"))
        vs, es = graph_of(cx)
        out = group_lift(vs, es, groups, keep_edges=not args.drop_edges)
    elif args.method == "augment":
        if not args.cells:
            raise _UsageError("--cells PATH is required for the augment method")
        extra = json.loads(Path(args.cells).read_text(encoding="utf-8"))
        out = hyperedge_augment(cx, [(tuple(c["vertices"]), int(c["rank"])) for c in extra])
    else:  # pragma: no cover - argparse choices
        raise _UsageError(f"unknown method {args.method!r}")
    kept = feats if feats is not None and args.method == "augment" else None
    write_complex(out, kept, args.output)
    _emit(
        args,
        {"event": "lift", "method": args.method, "shape": list(out.shape)},
        f"cells: {' '.join(map(str, out.shape))}",
    )
    return 0


def cmd_inspect(args) -> int:
    cx, _feats = read_complex(args.input)
    shape = list(cx.shape)
    payload = {"event": "inspect", "kind": cx.kind.value, "shape": shape}
    lines = [f"kind: {cx.kind.value}", f"cells: {' '.join(map(str, shape))}"]
    if args.betti:
        bettis = [nb.betti(cx, r) for r in range(cx.max_rank + 1)]
        payload["betti"] = bettis
        lines.append("betti: " + " ".join(map(str, bettis)))
    if args.degrees:
        hist = {}
        for r in range(cx.max_rank + 1):
            diag = nb.degree(cx, r).matrix.diagonal()
            values, counts = np.unique(diag, return_counts=True)
            hist[str(r)] = {str(int(v)): int(c) for v, c in zip(values, counts)}
            lines.append(
                f"degrees rank {r}: "
                + " ".join(f"{int(v)}x{int(c)}" for v, c in zip(values, counts))
            )
        payload["degrees"] = hist
    if args.export:
        matrix = _matrix_by_name(cx, args.export)
        text = nb.to_coo_text(matrix)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
            _emit(args, payload, "\n".join(lines))
        else:
            # the export owns stdout; the summary moves to stderr
            sys.stdout.write(text)
            _log("\n".join(lines))
    else:
        _emit(args, payload, "\n".join(lines))
    return 0


def _required_feature_ranks(layers) -> set:
    ranks = set()
    for layer in layers:
        for stage in layer.stages:
            for msg in stage.messages:
                ranks.add(msg.selector.source_rank)
                if msg.message_type in ("attentional", "general"):
                    ranks.add(msg.selector.target_rank)
                if stage.update.residual or stage.update.recurrent:
                    ranks.add(msg.selector.target_rank)
    return ranks


def _load_model(path: str):
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc.msg}") from exc
    return model_from_config(cfg)


def cmd_forward(args) -> int:
    layers, rspec = _load_model(args.model)
    cx, feats = read_complex(args.complex)
    if feats is None:
        raise ValidationError(f"{args.complex}: forward needs a 'features' block")
    missing = sorted(
        r for r in _required_feature_ranks(layers) if r not in feats and cx.n_cells(r) > 0
    )
    if missing:
        raise ValidationError(
            f"model reads features at ranks {missing} that the complex file lacks"
        )
    params = init_model_params(layers, rspec, seed=args.seed)
    if args.check_equivariance:
        dev = permutation_deviation(cx, layers, params, feats, seed=args.seed)
        _emit(args, {"event": "equivariance", "deviation": dev}, f"equivariance deviation: {dev:.3e}")
        if dev >= 1e-9:
            _log("permutation equivariance violated")
            return DATA_ERROR
    out = forward_model(cx, layers, feats, params)
    write_complex(cx, out, args.output)
    _emit(args, {"event": "forward", "ranks": sorted(out)}, f"wrote features for ranks {sorted(out)}")
    return 0


def cmd_train(args) -> int:
    layers, rspec = _load_model(args.model)
    try:
        doc = json.loads(Path(args.data).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.data}: invalid JSON: {exc.msg}") from exc
    data = load_dataset(doc)
    if data.task != args.task:
        raise ValidationError(f"dataset is for task {data.task!r}, not {args.task!r}")
    params = init_model_params(layers, rspec, seed=args.seed)

    def log(entry):
        _emit(
            args,
            {"event": "epoch", **entry},
            "epoch {epoch}: loss {loss:.6f} acc {train_acc:.4f}".format(**entry)
            + (f" test {entry['test_acc']:.4f}" if "test_acc" in entry else ""),
        )

    result = train(
        data, layers, rspec, params,
        epochs=args.epochs, lr=args.lr, seed=args.seed, batch_size=args.batch_size,
        log=log,
    )
    _emit(
        args,
        {"event": "result", "test_accuracy": result.test_accuracy},
        f"test accuracy: {result.test_accuracy:.4f}",
    )
    if args.output:
        doc = {name: [list(row) for row in p.value] for name, p in result.params.items()}
        Path(args.output).write_text(dumps_canonical(doc), encoding="utf-8")
    return 0


class _UsageError(Exception):
    pass


def make_parser() -> _Parser:
    p = _Parser(prog="topomp", description=__doc__)
    p.add_argument("--version", action="version", version=f"topomp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="parse, validate and write canonical JSON")
    b.add_argument("--input", required=True)
    b.add_argument("--format", choices=["json", "hyperedges", "off"], default="json")
    b.add_argument("--output", required=True)
    b.add_argument("--json", action="store_true")
    b.set_defaults(fn=cmd_build)

    l = sub.add_parser("lift", help="lift a complex into a richer domain")
    l.add_argument("--input", required=True)
    l.add_argument("--method", choices=["clique", "cycles", "groups", "augment"], required=True)
    l.add_argument("--max-rank", type=int, default=2)
    l.add_argument("--max-len", type=int, default=4)
    l.add_argument("--groups", help="JSON list of vertex groups")
    l.add_argument("--cells", help="JSON list of {vertices, rank} hyper-cells")
    l.add_argument("--drop-edges", action="store_true")
    l.add_argument("--output", required=True)
    l.add_argument("--json", action="store_true")
    l.set_defaults(fn=cmd_lift)

    i = sub.add_parser("inspect", help="cell counts, Betti numbers, degrees, exports")
    i.add_argument("--input", required=True)
    i.add_argument("--betti", action="store_true")
    i.add_argument("--degrees", action="store_true")
    i.add_argument("--export", metavar="MATRIX", help="e.g. B_1, Lup_0, H_1")
    i.add_argument("--output", help="destination for --export text")
    i.add_argument("--json", action="store_true")
    i.set_defaults(fn=cmd_inspect)

    f = sub.add_parser("forward", help="run a model config over a complex")
    f.add_argument("--model", required=True)
    f.add_argument("--complex", required=True)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--output", required=True)
    f.add_argument("--check-equivariance", action="store_true")
    f.add_argument("--json", action="store_true")
    f.set_defaults(fn=cmd_forward)

    t = sub.add_parser("train", help="train a model on a dataset file")
    t.add_argument("--task", choices=["trajectory", "node-class", "complex-class"], required=True)
    t.add_argument("--model", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--output", help="write final parameters as JSON")
    t.add_argument("--json", action="store_true")
    t.set_defaults(fn=cmd_train)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.fn(args)
    except _UsageError as exc:
        _log(f"usage error: {exc}")
        return USAGE_ERROR
    except (ValidationError, SchemaError, FileNotFoundError) as exc:
        _log(f"error: {exc}")
        return DATA_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
