"""Command-line front end for the whole pipeline.

Subcommands: grammar-count, synth, augment, stats, upsample, resolve,
score.  Every generating subcommand takes a seed (default 0) and is fully
deterministic given its flags, including across thread counts.  Exit codes:
0 success, 1 validation error, 2 I/O error.  Diagnostics go to stderr; data
goes to the declared output files (or stdout for the two query commands).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import augmenter, corpus as corpus_mod, metrics, resolver, synthesizer
from .errors import DisambigError, SchemaMismatch
from .grammar import count_language, load_grammar_file


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _counts(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = [parts[0], parts[0], parts[0]]
    if len(parts) != 3 or any(p < 0 for p in parts):
        raise argparse.ArgumentTypeError("expected TRAIN,DEV,TEST nonnegative counts")
    return tuple(parts)


def _guard_outputs(inputs: list[str | None], outputs: list[str | None]) -> None:
    resolved_inputs = {Path(p).resolve() for p in inputs if p}
    for out in outputs:
        if out and Path(out).resolve() in resolved_inputs:
            raise SchemaMismatch(f"output path {out!r} would overwrite an input")


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from a JSON config whose keys mirror flag names."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as handle:
        overrides = json.load(handle)
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise SchemaMismatch(f"config file key {key!r} matches no flag of this subcommand")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="disambig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grammar-count", help="count the language of a grammar start symbol")
    p.add_argument("grammar", help="grammar source file")
    p.add_argument("--start", required=True, help="start symbol or rule name")

    p = sub.add_parser("synth", help="synthesize single-turn disambiguation datasets")
    p.add_argument("--db", default=None, help="database JSON (default: data/database.json)")
    p.add_argument("--grammar", default=None, help="grammar file (default: grammars/disambiguation.cfg)")
    p.add_argument("--out", required=True, help="output directory for train/dev/test JSONL")
    p.add_argument("--total", type=_counts, default=None,
                   help="split totals TRAIN,DEV,TEST with methods cycled (default 100000,10000,10000)")
    p.add_argument("--per-method", type=_counts, default=None, help="per-method counts TRAIN,DEV,TEST")
    p.add_argument("--methods", default=None,
                   help="comma list among exact,positional,partial,typo,multiple,attribute")
    p.add_argument("--splits", default="train,dev,test", help="which splits to emit")
    p.add_argument("--seed", type=int, default=None, help="generation seed (default 0)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config mirroring these flags")

    p = sub.add_parser("augment", help="inject disambiguation turns into a corpus")
    p.add_argument("--in", dest="input", required=True, help="input corpus")
    p.add_argument("--format", default="native", choices=["native", "sgd", "multiwoz22"])
    p.add_argument("--db", default=None)
    p.add_argument("--grammar", default=None)
    p.add_argument("--out", required=True, help="output directory (corpus.jsonl, records.jsonl, stats.json)")
    p.add_argument("--allow-list", default=None, help="JSON file with a list of augmentable domains")
    p.add_argument("--mix-methods", action="store_true",
                   help="vary the user-prefix addressing method instead of always using the exact name")
    p.add_argument("--seed", type=int, default=None, help="generation seed (default 0)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("stats", help="multi-result proportions of a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", default="native", choices=["native", "sgd", "multiwoz22"])
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("upsample", help="duplicate augmented dialogs up to a multiple of the corpus size")
    p.add_argument("--in", dest="input", required=True, help="augmented native corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=float, default=1.0,
                   help="target augmented-row count as a multiple of the corpus size")

    p = sub.add_parser("resolve", help="run the rule-based resolver over examples or records")
    p.add_argument("--in", dest="input", required=True, help="SingleTurnExample or AugmentationRecord JSONL")
    p.add_argument("--out", required=True, help="prediction JSONL")
    p.add_argument("--kind", choices=["examples", "records"], default=None,
                   help="input schema (default: sniffed from the first row)")
    p.add_argument("--max-fuzzy", type=float, default=resolver.DEFAULT_MAX_FUZZY)

    p = sub.add_parser("score", help="score a prediction file against gold")
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True, help="native corpus or SingleTurnExample JSONL")
    p.add_argument("--records", default=None, help="records.jsonl defining the augmented subset")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")

    return parser


def _default_path(value: str | None, fallback: str) -> str:
    if value:
        return value
    candidate = Path(fallback)
    if not candidate.exists():
        raise SchemaMismatch(f"no --db/--grammar given and default {fallback!r} not found")
    return str(candidate)


def _parse_methods(text: str | None) -> tuple[synthesizer.AddressingMethod, ...]:
    if not text:
        return synthesizer.METHODS
    try:
        return tuple(synthesizer.AddressingMethod(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise SchemaMismatch(f"unknown addressing method in {text!r}") from exc


def _sniff_kind(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                row = json.loads(line)
                return "records" if "dialog_id" in row else "examples"
    raise SchemaMismatch(f"{path} is empty")


def _load_gold(path: str) -> corpus_mod.Corpus:
    with open(path, encoding="utf-8") as handle:
        first = ""
        for line in handle:
            if line.strip():
                first = line
                break
    if not first:
        raise SchemaMismatch(f"{path} is empty")
    row = json.loads(first)
    if "system" in row and "candidates" in row:
        return synthesizer.examples_to_corpus(synthesizer.read_examples(path))
    return corpus_mod.load_corpus(path, format="native")


def _cmd_grammar_count(args) -> int:
    grammar = load_grammar_file(args.grammar)
    print(count_language(grammar, args.start))
    return 0


def _cmd_synth(args) -> int:
    args = _apply_config_file(args)
    db = corpus_mod.load_database(_default_path(args.db, "data/database.json"))
    grammar = load_grammar_file(_default_path(args.grammar, "grammars/disambiguation.cfg"))
    config = synthesizer.SynthConfig(
        totals=tuple(args.total) if args.total else ((100_000, 10_000, 10_000) if not args.per_method else None),
        per_method=tuple(args.per_method) if args.per_method else None,
        methods=_parse_methods(args.methods),
        seed=args.seed if args.seed is not None else 0,
        threads=args.threads if args.threads is not None else 1,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits = [s.strip() for s in args.splits.split(",") if s.strip()]
    _guard_outputs(
        [args.db, args.grammar, args.config],
        [str(out_dir / f"{split}.jsonl") for split in splits],
    )
    for split in splits:
        if split not in ("train", "dev", "test"):
            raise SchemaMismatch(f"unknown split {split!r}")
        examples = synthesizer.synthesize_split(db, grammar, config, split)
        target = out_dir / f"{split}.jsonl"
        synthesizer.write_examples(examples, str(target))
        _log(f"wrote {len(examples)} examples to {target}")
    return 0


def _load_allow_list(path: str | None) -> frozenset[str]:
    if not path:
        return augmenter.DEFAULT_ALLOWED
    with open(path, encoding="utf-8") as handle:
        names = json.load(handle)
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise SchemaMismatch(f"{path}: allow-list must be a JSON list of domain names")
    return frozenset(names)


def _cmd_augment(args) -> int:
    args = _apply_config_file(args)
    dialog_corpus = corpus_mod.load_corpus(args.input, format=args.format)
    db = corpus_mod.load_database(_default_path(args.db, "data/database.json"))
    grammar = load_grammar_file(_default_path(args.grammar, "grammars/disambiguation.cfg"))
    allowed = _load_allow_list(args.allow_list)
    methods = augmenter.AUGMENT_METHODS if args.mix_methods else (synthesizer.AddressingMethod.EXACT,)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [out_dir / "corpus.jsonl", out_dir / "records.jsonl", out_dir / "stats.json"]
    _guard_outputs([args.input, args.db, args.grammar, args.allow_list], [str(p) for p in outputs])

    seed = args.seed if args.seed is not None else 0
    threads = args.threads if args.threads is not None else 1
    new_corpus, records, stats = augmenter.augment_corpus(
        dialog_corpus, db, grammar, seed, allowed, methods, threads=threads
    )

    corpus_mod.write_corpus(new_corpus, str(outputs[0]))
    augmenter.write_records(records, str(outputs[1]))
    outputs[2].write_text(json.dumps(stats.to_json(), ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _log(f"modified {stats.turns_modified} of {stats.turns_total} turns "
         f"across {stats.dialogs_modified} of {stats.dialogs_total} dialogs")
    return 0


def _cmd_stats(args) -> int:
    report = augmenter.multi_result_report(corpus_mod.load_corpus(args.input, format=args.format))
    text = json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        _guard_outputs([args.input], [args.out])
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_upsample(args) -> int:
    _guard_outputs([args.input], [args.out])
    base = corpus_mod.load_corpus(args.input, format="native")
    augmented = [d for d in base.dialogs if any("disambig" in t.extras for t in d.turns)]
    if not augmented:
        raise SchemaMismatch("corpus has no augmented dialogs to upsample")
    if args.factor < 0:
        raise SchemaMismatch("--factor must be nonnegative")
    target = round(args.factor * len(base.dialogs))
    dialogs = list(base.dialogs)
    extra_needed = max(0, target - len(augmented))
    for i in range(extra_needed):
        source = augmented[i % len(augmented)]
        clone = corpus_mod.Dialog.from_json(source.to_json())
        clone.id = f"{source.id}~up{i // len(augmented) + 1}"
        dialogs.append(clone)
    out = corpus_mod.Corpus(dialogs=dialogs, split_name=base.split_name, source_format=base.source_format)
    corpus_mod.write_corpus(out, args.out)
    _log(f"upsampled {len(augmented)} augmented dialogs with {extra_needed} duplicates (target {target})")
    return 0


def _cmd_resolve(args) -> int:
    _guard_outputs([args.input], [args.out])
    kind = args.kind or _sniff_kind(args.input)
    rows: list[metrics.PredictionRow] = []
    if kind == "examples":
        for index, example in enumerate(synthesizer.read_examples(args.input)):
            names = resolver.predict_names(example.candidates, example.user_utterance, max_fuzzy=args.max_fuzzy)
            rows.append(metrics.PredictionRow(
                dialog_id=synthesizer.example_dialog_id(index), turn_index=0, entities=names,
            ))
    else:
        for record in augmenter.read_records(args.input):
            if record.skipped_reason is not None:
                continue
            names = resolver.predict_names(record.candidates, record.user_prefix, max_fuzzy=args.max_fuzzy)
            rows.append(metrics.PredictionRow(
                dialog_id=record.dialog_id, turn_index=record.turn_index, entities=names,
            ))
    metrics.write_predictions(rows, args.out)
    _log(f"resolved {len(rows)} rows from {args.input}")
    return 0


def _cmd_score(args) -> int:
    preds = metrics.read_predictions(args.preds)
    gold = _load_gold(args.gold)
    records = augmenter.read_records(args.records) if args.records else None
    report = metrics.score(preds, gold, records)
    text = json.dumps(report.to_json(), ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        _guard_outputs([args.preds, args.gold, args.records], [args.out])
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


_COMMANDS = {
    "grammar-count": _cmd_grammar_count,
    "synth": _cmd_synth,
    "augment": _cmd_augment,
    "stats": _cmd_stats,
    "upsample": _cmd_upsample,
    "resolve": _cmd_resolve,
    "score": _cmd_score,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DisambigError as exc:
        _log(f"error: {exc}")
        return 1
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return 2


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
