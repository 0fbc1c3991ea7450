"""``commitgen`` command line.

Every failure prints one line ``error: <Category>: <message>`` to stderr and
exits with status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .errors import CommitGenError


def _lines(path) -> List[List[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def _write_lines(path, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(" ".join(r) + "\n" for r in rows)


# -- commands ---------------------------------------------------------------------

def cmd_prepare(args):
    from .corpus import build_vocabulary, load_parallel_corpus, reduce_vocabulary, truncate_sequences, write_prefix, CorpusSplit
    split = load_parallel_corpus(args.diff, args.msg, Path(args.out_prefix).name, skip_empty=args.skip_empty)
    split = CorpusSplit(split.name, [truncate_sequences(c, args.max_diff, args.max_msg) for c in split], split.diagnostics)
    write_prefix(split, args.out_prefix)
    diff_vocab = build_vocabulary(split, "diff", args.min_count)
    msg_vocab = build_vocabulary(split, "msg", args.min_count)
    if args.reduce:
        msg_vocab, diff_vocab = reduce_vocabulary(msg_vocab, diff_vocab, args.reduce)
    diff_vocab.save(args.out_prefix + ".diff.vocab")
    msg_vocab.save(args.out_prefix + ".msg.vocab")
    print(f"{len(split)} examples, diff vocab {len(diff_vocab)}, msg vocab {len(msg_vocab)}")
    for k, v in sorted(split.diagnostics.items()):
        print(f"{k}\t{v}")


def cmd_split(args):
    from .corpus import load_prefix, split_by_file_type, write_prefix
    split = load_prefix(args.prefix)
    out = Path(args.out_dir)
    for ft, sub in split_by_file_type(split, args.scenario).items():
        write_prefix(sub, str(out / ft.value))
        (out / f"{ft.value}.ids").write_text("".join(f"{c.id}\n" for c in sub), encoding="utf-8")
        print(f"{ft.value}\t{len(sub)}")


def cmd_sketch(args):
    from .sketch import decode_sketch, encode_sketch, example_seed, read_dictionaries, write_dictionaries
    if args.action == "encode":
        from .corpus import load_parallel_corpus
        split = load_parallel_corpus(args.diff, args.msg, "sketch")
        examples = [encode_sketch(c, indexed=not args.unindexed, diagnostics=split.diagnostics) for c in split]
        _write_lines(args.out_prefix + ".diff", [e.sketched_diff for e in examples])
        _write_lines(args.out_prefix + ".msg", [e.sketched_msg for e in examples])
        write_dictionaries([e.dictionary for e in examples], args.out_prefix + ".dict")
        for k, v in sorted(split.diagnostics.items()):
            print(f"{k}\t{v}", file=sys.stderr)
    else:
        preds = _lines(args.pred)
        dicts = read_dictionaries(args.dict)
        from .sketch import PlaceholderDictionary
        out = []
        for i, pred in enumerate(preds):
            d = dicts.get(i, PlaceholderDictionary({}, i))
            out.append(decode_sketch(pred, d, list(d.entries.values()), example_seed(args.seed, i)))
        _write_lines(args.out, out)


def cmd_train(args):
    from .corpus import load_prefix
    from .pipeline import load_config, train_from_config
    cfg = load_config(args.config)
    train = load_prefix(args.train_prefix, "train")
    valid = load_prefix(args.valid_prefix, "valid") if args.valid_prefix else None
    ckpt = train_from_config(cfg, train, valid, args.seed)
    ckpt.save(args.out)
    print(f"saved {args.out} at step {ckpt.step} ({ckpt.parameter_count()} parameters)")


def cmd_predict(args):
    from .nmt.checkpoint import Checkpoint
    from .nmt.decoding import decode
    ckpt = Checkpoint.load(args.ckpt)
    out = []
    if args.sketch:
        from .corpus import Commit, UNK
        from .sketch import decode_sketch, encode_sketch, example_seed
        for i, src in enumerate(_lines(args.src)):
            ex = encode_sketch(Commit(i, src, ()))
            pred = decode(ckpt, ex.sketched_diff or [UNK], args.beam, args.len_penalty)
            out.append(decode_sketch(pred, ex.dictionary, ex.names, example_seed(args.seed, i)))
    else:
        from .corpus import UNK
        out = [decode(ckpt, src or [UNK], args.beam, args.len_penalty) for src in _lines(args.src)]
    _write_lines(args.out, out)


def cmd_nngen(args):
    from .corpus import Commit, CorpusSplit, load_parallel_corpus
    from .nngen import build_index, generate_nngen
    index = build_index(load_parallel_corpus(args.train_diff, args.train_msg, "train"))
    _write_lines(args.out, [generate_nngen(index, q, args.nn_k).message for q in _lines(args.test_diff)])


def cmd_evaluate(args):
    from .corpus import FileType, classify_file_type
    from .evaluation import format_table, per_type_bleu, write_tsv
    hyps, refs = _lines(args.pred), _lines(args.ref)
    if args.diff:
        types = [classify_file_type(d) for d in _lines(args.diff)]
    else:
        types = [FileType.OTHERS] * len(refs)
    if len(types) != len(refs):
        raise ValueError(f"{args.diff} has {len(types)} lines but {args.ref} has {len(refs)}")
    report = per_type_bleu(hyps, refs, types)
    report.run_id = args.run_id
    print(format_table(report))
    if args.tsv:
        write_tsv(report, args.tsv)


def cmd_aggregate(args):
    from .evaluation import aggregate
    for label, (count, bleu) in aggregate(args.reports).items():
        print(f"{label}\t{count}\t{bleu:.4f}")


def cmd_run_experiment(args):
    from .evaluation import format_table
    from .pipeline import run_experiment
    result = run_experiment(args.config, seed=args.seed)
    print(format_table(result.report))
    print(json.dumps(result.timing, sort_keys=True))


def cmd_bpe(args):
    from .bpe import BpeModel, apply_bpe, decode_bpe, learn_bpe
    if args.action == "learn":
        if args.separate:
            for path in args.input:
                out = f"{args.out}.{Path(path).name}"
                learn_bpe(_lines(path), args.size).save(out)
                print(out)
        else:
            corpus = [row for path in args.input for row in _lines(path)]
            learn_bpe(corpus, args.size).save(args.out)
    elif args.action == "apply":
        model = BpeModel.load(args.model)
        _write_lines(args.out, [apply_bpe(model, row) for row in _lines(args.input)])
    else:
        _write_lines(args.out, [decode_bpe(row) for row in _lines(args.input)])


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="commitgen", description="Commit message generation from diffs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="truncate a parallel corpus and build vocabularies")
    s.add_argument("--diff", required=True)
    s.add_argument("--msg", required=True)
    s.add_argument("--out-prefix", required=True)
    s.add_argument("--max-diff", type=int, default=100)
    s.add_argument("--max-msg", type=int, default=30)
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--reduce", type=int, choices=(1, 2))
    s.add_argument("--skip-empty", action="store_true")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("split", help="partition a corpus by file type")
    s.add_argument("--prefix", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--scenario", choices=("top5", "top9"), default="top9")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("sketch", help="sketch Java diffs or restore identifiers")
    ss = s.add_subparsers(dest="action", required=True)
    e = ss.add_parser("encode")
    e.add_argument("--diff", required=True)
    e.add_argument("--msg", required=True)
    e.add_argument("--out-prefix", required=True)
    e.add_argument("--unindexed", action="store_true")
    e.add_argument("--seed", type=int, default=0)
    d = ss.add_parser("decode")
    d.add_argument("--pred", required=True)
    d.add_argument("--dict", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sketch)

    s = sub.add_parser("train", help="train a translation model")
    s.add_argument("--config", required=True)
    s.add_argument("--train-prefix", required=True)
    s.add_argument("--valid-prefix")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="decode messages with a trained model")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--src", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int, default=10)
    s.add_argument("--len-penalty", type=float, default=1.0)
    s.add_argument("--sketch", action="store_true", help="sketch inputs and restore identifiers")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("nngen", help="nearest-neighbour retrieval baseline")
    s.add_argument("--train-diff", required=True)
    s.add_argument("--train-msg", required=True)
    s.add_argument("--test-diff", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--nn-k", type=int, default=5)
    s.set_defaults(func=cmd_nngen)

    s = sub.add_parser("evaluate", help="corpus BLEU-4, broken down by file type")
    s.add_argument("--pred", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--diff", help="test diffs, for the per-type breakdown")
    s.add_argument("--tsv")
    s.add_argument("--run-id")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("aggregate", help="mean BLEU over several TSV reports")
    s.add_argument("reports", nargs="+")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("run-experiment", help="run a declarative experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_run_experiment)

    s = sub.add_parser("bpe", help="byte-pair encoding")
    ss = s.add_subparsers(dest="action", required=True)
    e = ss.add_parser("learn")
    e.add_argument("--input", nargs="+", required=True)
    e.add_argument("--size", type=int, required=True)
    e.add_argument("--out", required=True, help="merge table (with --bpe-separate, a prefix)")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--bpe-joint", dest="separate", action="store_false", help="one model over all inputs (default)")
    g.add_argument("--bpe-separate", dest="separate", action="store_true", help="one model per input file")
    e.set_defaults(separate=False)
    e = ss.add_parser("apply")
    e.add_argument("--model", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--out", required=True)
    e = ss.add_parser("decode")
    e.add_argument("--input", required=True)
    e.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bpe)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CommitGenError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
