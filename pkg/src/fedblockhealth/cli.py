"""``fedblockhealth`` command-line entry point.

Exit codes: 0 success, 1 domain failure (verification failure, aborted
round), 2 usage or I/O error. Failures print exactly one line on stderr of
the form ``error: <kind>: <message>``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, parse_config_text
from .errors import DomainError, FedBlockError, FormatError

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    """Bad invocation or unusable input files (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind: str, message) -> None:
    text = " ".join(str(message).split())
    print(f"error: {kind}: {text}", file=sys.stderr)


# ---------------------------------------------------------------- train

_FLAG_TYPES = {"int": int, "float": float, "str": str}


def _add_config_flags(p):
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(flag, dest=f.name, type=_FLAG_TYPES[f.type], default=None, metavar=f.name.upper())


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file or manifest, then explicit flags."""
    base = RunConfig()
    if args.manifest:
        try:
            doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            base = parse_config_text(doc["config_text"])
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.config:
        try:
            base = load_config(args.config, base)
        except DomainError as exc:
            raise UsageError(f"invalid configuration in {args.config}: {exc}") from exc
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    flags = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    try:
        return base.with_overrides(**flags)
    except DomainError as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc


def load_splits(config: RunConfig):
    """(train, test, validation) datasets for ``config``."""
    from .data import SplitSpec, load_idx_dir, split, synth_digits

    spec = SplitSpec(config.train_size, config.test_size, config.val_size, config.seed)
    total = config.train_size + config.test_size + config.val_size
    if config.synthetic:
        data = synth_digits(max(total, 10), config.seed)
    else:
        if not config.dataset_dir:
            raise UsageError("no dataset: pass --dataset-dir or --synthetic")
        try:
            data = load_idx_dir(config.dataset_dir)
        except OSError as exc:
            raise UsageError(str(exc)) from exc
        if len(data) < total:
            raise UsageError(f"dataset has {len(data)} samples, split needs {total}")
    return split(data, spec)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, config: RunConfig, names) -> dict:
    """Manifest: full config, seed, per-file digests and a digest over the file list."""
    files = {n: _sha256_file(out / n) for n in sorted(names)}
    listing = "".join(f"{digest}  {name}\n" for name, digest in files.items())
    doc = {
        "version": __version__,
        "seed": config.seed,
        "config": config.as_dict(),
        "config_text": config.to_text(),
        "files": files,
        "content_digest": hashlib.sha256(listing.encode("utf-8")).hexdigest(),
    }
    (out / MANIFEST_NAME).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return doc


def cmd_train(args) -> int:
    from .federation import metrics_csv, run_training, validate_model_hook
    from .ledger import dumps_chain
    from .nn import dumps_checkpoint

    config = resolve_config(args)
    out = Path(args.out)
    train, test, val = load_splits(config)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from exc
    (out / "config.txt").write_text(config.to_text(), encoding="utf-8")
    written = ["config.txt", "metrics.csv"]
    reports = []

    def write_metrics():
        (out / "metrics.csv").write_text(metrics_csv(reports, config.record_timings), encoding="utf-8")

    try:
        result = run_training(config, train, test, on_round=reports.append)
    finally:
        write_metrics()
    chain = result.chain
    if len(val):
        record = validate_model_hook(result.model, val, chain, round_index=len(result.reports))
        (out / "validation.json").write_text(json.dumps({
            "auditor": record.auditor, "accuracy": record.accuracy, "loss": record.loss,
            "checkpoint_sha256": record.checkpoint_digest}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append("validation.json")
    (out / "model.fbh").write_bytes(dumps_checkpoint(result.model))
    written.append("model.fbh")
    if chain is not None:
        if chain.pool:
            chain.mine_all()
        (out / "chain.jsonl").write_text(dumps_chain(chain.blocks, chain.difficulty), encoding="utf-8")
        written.append("chain.jsonl")
    doc = write_manifest(out, config, written)
    last = result.reports[-1] if result.reports else None
    summary = f"rounds={len(result.reports)}"
    if last is not None:
        summary += f" test_accuracy={last.test_accuracy:.4f} test_loss={last.test_loss:.4f}"
    print(f"{summary} content_digest={doc['content_digest']}")
    return EXIT_OK


# ---------------------------------------------------------------- demo-elgamal

def cmd_demo_elgamal(args) -> int:
    from .crypto import decrypt, dlog_recover, encode, encrypt, generate_group, hom_combine, keygen
    from .rng import spawn

    if args.m1 < 0 or args.m2 < 0:
        raise UsageError("m1 and m2 must be non-negative")
    if args.m1 + args.m2 > args.bound:
        raise UsageError(f"m1 + m2 = {args.m1 + args.m2} exceeds --bound {args.bound}")
    params = generate_group(args.bits, seed=args.seed)
    rng = spawn(args.seed, 40)
    kp = keygen(params, rng)
    ca = encrypt(kp.pk, encode(args.m1, params), params, rng)
    cb = encrypt(kp.pk, encode(args.m2, params), params, rng)
    combined = hom_combine(ca, cb, params)
    element = decrypt(kp.sk, combined, params)
    recovered = dlog_recover(element, args.bound, params)
    print(f"group: {params.bits}-bit p={params.p:x} g={params.g:x}")
    print(f"v1 = {args.m1}")
    print(f"v2 = {args.m2}")
    print(f"E(v1) = ({ca.c1:x}, {ca.c2:x})")
    print(f"E(v2) = ({cb.c1:x}, {cb.c2:x})")
    print(f"E(v1)*E(v2) = ({combined.c1:x}, {combined.c2:x})")
    print(f"D(E(v1)*E(v2)) = g^m = {element:x}")
    print(f"recovered m = {recovered}")
    return EXIT_OK


# ---------------------------------------------------------------- verify-chain

def cmd_verify_chain(args) -> int:
    from .ledger import loads_chain, verify_chain

    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {args.path}: {exc}") from exc
    try:
        blocks, difficulty = loads_chain(text)
    except FormatError as exc:
        raise UsageError(f"{args.path}: {exc}") from exc
    bad = verify_chain(blocks, difficulty)
    if bad is None:
        print(f"ok blocks={len(blocks)} difficulty={difficulty}")
        return EXIT_OK
    print(f"invalid first_bad_block={bad}")
    return EXIT_DOMAIN


# ---------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    from .bench import bench_crypto, bench_kernels, bench_mining, rows_csv

    rows = list(bench_crypto(args.bits, args.bound, args.iterations, args.seed))
    rows += list(bench_mining(args.difficulty, args.blocks))
    if args.kernels:
        rows += list(bench_kernels(max(1, args.iterations // 10), args.seed))
    text = rows_csv(rows)
    if args.output:
        try:
            Path(args.output).parent.mkdir(parents=True, exist_ok=True)
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- export-synth

def cmd_export_synth(args) -> int:
    from .data import synth_digits, write_idx

    data = synth_digits(args.n, args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_idx(data, out / f"{args.prefix}-images-idx3-ubyte", out / f"{args.prefix}-labels-idx1-ubyte")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from exc
    print(f"wrote {len(data)} samples to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fedblockhealth", description="Encrypted federated learning with an audit ledger.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-round progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="run federated training and export metrics, model and chain")
    p.add_argument("--config", help="key=value config file (flags override it)")
    p.add_argument("--manifest", help="reuse the configuration recorded in a previous run's manifest.json")
    p.add_argument("--out", default="runs/latest", help="output directory (default: %(default)s)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("demo-elgamal", help="encrypt two values, combine, decrypt and recover the sum")
    p.add_argument("--m1", type=int, default=4)
    p.add_argument("--m2", type=int, default=5)
    p.add_argument("--bits", type=int, default=128, help="safe-prime size (default: %(default)s)")
    p.add_argument("--bound", type=int, default=2 ** 20, help="discrete-log search bound")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_elgamal)

    p = sub.add_parser("verify-chain", help="verify an exported chain (exit 1 names the first bad block)")
    p.add_argument("path")
    p.set_defaults(func=cmd_verify_chain)

    p = sub.add_parser("bench", help="time crypto, mining and kernel hot paths; emits CSV")
    p.add_argument("--bits", type=int, default=128)
    p.add_argument("--bound", type=int, default=2 ** 20)
    p.add_argument("--difficulty", type=int, default=8)
    p.add_argument("--blocks", type=int, default=20)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernels", action=argparse.BooleanOptionalAction, default=True,
                   help="also compare compiled and pure-Python kernels")
    p.add_argument("--output", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-synth", help="write synthetic digits as IDX files")
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="synth")
    p.add_argument("--out", default="data/synth")
    p.set_defaults(func=cmd_export_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _fail("usage", exc)
        return EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        _fail("usage", exc)
        return EXIT_USAGE
    except FormatError as exc:
        _fail("format", exc)
        return EXIT_USAGE
    except FedBlockError as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_DOMAIN
    except OSError as exc:
        _fail("io", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
