"""Command-line entry point: ``sedproxy <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input or usage, 2 for I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Optional, Sequence

from .arch import KernelSpec, PoolSpec, StrideSpec, ValidationError
from .bench import BenchmarkError, emit_report, kendall, load_records, rank_report, spearman
from .entropy import DomainError, verify_prop1, verify_prop2, verify_prop3, verify_prop4_random
from .parse import ParseError, load_space
from .search import ConfigError, SearchConfig, build, enumerate_encodings, search, select
from .sed import batch_score, sed

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _threads() -> Optional[int]:
    raw = os.environ.get("SED_THREADS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SED_THREADS must be an integer, got {raw!r}") from None


def _emit(doc, out: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, ensure_ascii=False, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(v):
    if isinstance(v, float):
        return None if math.isnan(v) else v
    return str(v)


def _clean(doc):
    """NaN is not JSON; report it as null."""
    if isinstance(doc, dict):
        return {k: _clean(v) for k, v in doc.items()}
    if isinstance(doc, list):
        return [_clean(v) for v in doc]
    if isinstance(doc, float) and math.isnan(doc):
        return None
    return doc


def _read_encodings(args) -> list[str]:
    encs = list(args.arch or [])
    if args.file:
        fh = sys.stdin if args.file == "-" else open(args.file, encoding="utf-8")
        with fh:
            encs += [line.strip() for line in fh if line.strip()]
    if not encs:
        raise UsageError("score: give --arch or --file")
    return encs


def cmd_score(args) -> int:
    space = load_space(args.space)
    encs = _read_encodings(args)
    archs = [build(space, e) for e in encs]
    count_none = not args.exclude_none
    if args.explain:
        docs = []
        for arch in archs:
            doc = sed(arch, space, count_none=count_none).to_dict()
            doc["encoding"] = arch.encoding
            docs.append(doc)
        _emit(docs[0] if len(docs) == 1 else docs, args.out)
        return EXIT_OK
    results = batch_score(archs, space, threads=_threads(), count_none=count_none)
    for _, value in results:
        if isinstance(value, Exception):
            raise value
    if args.out:
        _emit([{"encoding": a.encoding, "sed": v} for a, (_, v) in zip(archs, results)], args.out)
    elif len(results) == 1:
        print(repr(results[0][1]))
    else:
        for arch, (_, value) in zip(archs, results):
            print(f"{value!r}\t{arch.encoding}")
    return EXIT_OK


def _scored_records(args):
    space = load_space(args.space)
    records = load_records(args.bench, args.format)
    archs = [build(space, r.encoding) for r in records]
    results = batch_score(archs, space, threads=_threads(), count_none=not args.exclude_none)
    scores = {}
    for rec, (_, value) in zip(records, results):
        if isinstance(value, Exception):
            raise value
        scores[rec.arch_id] = value
    datasets = args.dataset or sorted({d for r in records for d in r.metrics})
    return records, scores, datasets


def cmd_rank(args) -> int:
    records, scores, datasets = _scored_records(args)
    reports = [rank_report(records, scores, d, k=min(args.k, len(records))) for d in datasets]
    if args.out and len(reports) == 1 and args.report_format:
        emit_report(reports[0], args.out, args.report_format)
        return EXIT_OK
    docs = [_clean(r.to_dict()) for r in reports]
    _emit(docs[0] if len(docs) == 1 else docs, args.out)
    return EXIT_OK


def cmd_correlate(args) -> int:
    records, scores, datasets = _scored_records(args)
    out = {}
    for d in datasets:
        rows = [r for r in records if d in r.metrics]
        xs = [scores[r.arch_id] for r in rows]
        ys = [r.metrics[d] for r in rows]
        out[d] = {"n": len(rows), "spearman": spearman(xs, ys), "kendall": kendall(xs, ys)}
    _emit(_clean(out), args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    space = load_space(args.space)
    config = SearchConfig(space, args.n, args.seed, args.out, args.dedup, _threads())
    result = search(config)
    if not args.out:
        _emit(_clean(result.to_dict()), None)
    else:
        print(result.best_encoding)
        print(f"SED {result.best_sed!r}  scoring {result.elapsed:.4f} s over {result.n_scored} architectures")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    space = load_space(args.space)
    encs = list(enumerate_encodings(space))
    if not args.time:
        text = "\n".join(encs) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    start = time.perf_counter()
    archs = [build(space, e) for e in encs]
    parse_s = time.perf_counter() - start
    best, scores, elapsed = select(archs, space, _threads())
    _emit(
        {
            "space": space.name,
            "count": len(encs),
            "parse_seconds": parse_s,
            "scoring_seconds": elapsed,
            "scoring_hours": elapsed / 3600.0,
            "seconds_per_arch": elapsed / len(encs),
            "best_encoding": archs[best].encoding,
            "best_sed": scores[best][1],
        },
        args.out,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    stride = StrideSpec(args.stride, args.stride)
    if args.prop == 1:
        report = verify_prop1(KernelSpec(args.kernel, args.kernel), args.trials, args.seed)
    elif args.prop == 2:
        report = verify_prop2(
            args.w, args.h, PoolSpec(args.pool, args.pool), stride, args.trials, args.seed,
            distribution=args.distribution,
        )
    elif args.prop == 3:
        sizes = [tuple(int(v) for v in s.split("x")) for s in args.sizes.split(",")]
        report = verify_prop3(args.model, sizes, seed=args.seed, sigma2=args.sigma2, rho=args.rho)
    else:
        report = verify_prop4_random(args.trials, args.seed, max_dim=args.max_dim)
    doc = report.to_dict()
    if not args.details:
        doc.pop("details")
    _emit(doc, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sedproxy", description="Topology-only SED scoring for architecture search.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def space_arg(sp, default=None):
        sp.add_argument("--space", default=default, required=default is None,
                        help="bundled space name (tss, darts, darts-search) or JSON path")

    sp = sub.add_parser("score", help="SED of one or more encodings")
    space_arg(sp)
    sp.add_argument("--arch", action="append", help="encoding (repeatable)")
    sp.add_argument("--file", help="file with one encoding per line ('-' for stdin)")
    sp.add_argument("--explain", action="store_true", help="emit the per-block breakdown as JSON")
    sp.add_argument("--exclude-none", action="store_true", help="leave 'none' out of the total-operation term")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_score)

    for name, func, helptext in (
        ("rank", cmd_rank, "selection report against an accuracy table"),
        ("correlate", cmd_correlate, "rank correlation against an accuracy table"),
    ):
        sp = sub.add_parser(name, help=helptext)
        space_arg(sp)
        sp.add_argument("--bench", required=True, help="accuracy table (CSV or JSON)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--dataset", action="append", help="dataset column (repeatable; default all)")
        sp.add_argument("--exclude-none", action="store_true")
        sp.add_argument("--out")
        if name == "rank":
            sp.add_argument("--k", type=int, default=10, help="top-k size for the mean accuracy")
            sp.add_argument("--report-format", choices=("json", "csv"),
                            help="write a single report with emit_report in this format")
        sp.set_defaults(func=func)

    sp = sub.add_parser("search", help="best-SED architecture out of random samples")
    space_arg(sp)
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dedup", action="store_true", help="sample without replacement")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("enumerate", help="list every cell of a topology space")
    space_arg(sp, "tss")
    sp.add_argument("--time", action="store_true", help="score the whole space and report timing")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("verify-entropy", help="numerical proposition checks")
    sp.add_argument("--prop", type=int, choices=(1, 2, 3, 4), required=True)
    sp.add_argument("--w", type=int, default=32)
    sp.add_argument("--h", type=int, default=32)
    sp.add_argument("--pool", type=int, default=3)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--kernel", type=int, default=3)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--distribution", choices=("normal", "discrete"), default="normal")
    sp.add_argument("--model", choices=("iid", "toeplitz", "random"), default="iid")
    sp.add_argument("--sizes", default="3x3x1,1x1x1", help="comma-separated window sizes, e.g. 3x3x1,1x1x1")
    sp.add_argument("--sigma2", type=float, default=1.0)
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--max-dim", type=int, default=16)
    sp.add_argument("--details", action="store_true", help="include per-case details")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"sedproxy: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ParseError, ConfigError, BenchmarkError, DomainError, ValueError) as exc:
        print(f"sedproxy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(cli_main())
