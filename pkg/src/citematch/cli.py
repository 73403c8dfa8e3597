"""Command-line entry point.

Options come from three places, highest precedence first: command-line
flags, then ``key=value`` lines of the file named by ``--config`` (keys are
the long option names, with ``-`` or ``_``), then built-in defaults.

Exit codes: 0 success, 2 usage error, 3 data error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .clustering import (
    cluster_from_scores,
    cluster_recall,
    format_report,
    pairwise_metrics,
    read_clustering,
    write_clustering,
)
from .mapred.engine import JobError
from .mapred.seqfile import SeqFileError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4

log = logging.getLogger("citematch")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# -- config ------------------------------------------------------------------


def read_config(path) -> Dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: List[str], config: Dict[str, str]):
    """Fill options not given on the command line from ``config``."""
    given = set()
    for action in parser._actions:
        if any(a == opt or a.startswith(opt + "=") for a in argv for opt in action.option_strings):
            given.add(action.dest)
    actions = {a.dest: a for a in parser._actions if a.option_strings}
    for key, raw in config.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"config key {key!r} is not an option of this command")
        if key in given:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise UsageError(f"config key {key!r} needs a boolean")
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            value = [v.strip() for v in raw.split(",") if v.strip()]
        else:
            try:
                value = action.type(raw) if action.type else raw
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} is not one of {sorted(action.choices)}")
        setattr(args, key, value)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


def _existing(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} {p} does not exist")
    return p


def _dicts(args):
    from .parsing.dictionaries import Dictionaries

    overrides = {}
    for spec in args.dict or []:
        name, sep, path = spec.partition("=")
        if not sep or not name:
            raise UsageError(f"--dict expects NAME=PATH, got {spec!r}")
        overrides[name] = _existing(path, "dictionary file")
    return Dictionaries.bundled(overrides)


def _print_timings(timings: Dict[str, float], out=None):
    out = out or sys.stdout
    width = max(len(k) for k in timings) + 2
    for name, secs in timings.items():
        print(f"  {name:<{width}}{secs:9.2f}s", file=out)


def _item(doc_id: str, ref_index: int) -> str:
    return f"{doc_id}#{ref_index}"


# -- commands ----------------------------------------------------------------


def cmd_ingest(args) -> int:
    from .mapred.jobs import ingest_jsonl

    _require(args, "docs", "out")
    src = _existing(args.docs, "corpus")
    report = ingest_jsonl(src, args.out)
    for lineno, msg in report.rejected:
        print(f"{src}:{lineno}: rejected: {msg}", file=sys.stderr)
    print(f"ingested {report.count} documents, rejected {len(report.rejected)} lines")
    return EXIT_DATA if report.rejected else EXIT_OK


def cmd_build_index(args) -> int:
    from .mapred.jobs import job_build_index

    _require(args, "docs", "out")
    docs = _existing(args.docs, "document file")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    res = job_build_index(docs, args.out, workers=args.workers, scratch=args.scratch, interval=args.interval)
    print(f"index {res.index_dir}: {res.entries} entries")
    _print_timings(res.timings)
    print(f"  {'Total':<{max(len(k) for k in res.timings) + 2}}{sum(res.timings.values()):9.2f}s")
    return EXIT_OK


def cmd_match(args) -> int:
    from .mapred.jobs import job_match, sort_results
    from .match_model import LinearModel
    from .parsing.tagger import TaggerModel

    _require(args, "docs", "index", "match_model", "out")
    docs = _existing(args.docs, "document file")
    index = _existing(args.index, "index directory")
    model_path = _existing(args.match_model, "match model")
    parser_path = _existing(args.parser_model, "parser model") if args.parser_model else None
    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError("--threshold must lie in [0, 1]")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    model = LinearModel.load(model_path)
    tagger = TaggerModel.load(parser_path) if parser_path else None
    out = Path(args.out)
    seq_out = Path(args.seq_out) if args.seq_out else out.with_name(out.name + ".seq")
    res = job_match(docs, index, model, tagger, seq_out, dicts=_dicts(args), threshold=args.threshold,
                    workers=args.workers, scratch=args.scratch, verify=args.verify)
    results = sort_results(res.results)
    with open(out, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")
    if not args.seq_out:
        seq_out.unlink()
    print(f"citations processed: {len(results)}")
    print(f"matched: {res.matched}")
    print(f"unmatched: {len(results) - res.matched}")
    _print_timings(res.timings)
    print(f"  {'Total':<{max(len(k) for k in res.timings) + 2}}{sum(res.timings.values()):9.2f}s")
    return EXIT_OK


def cmd_train_parser(args) -> int:
    from .labeled import read_labeled
    from .parsing.tagger import train_tagger

    _require(args, "data", "out")
    data = read_labeled(_existing(args.data, "labeled file"))
    if not data:
        raise DataError(f"{args.data}: no labeled citations")
    t = time.perf_counter()
    model = train_tagger([(c.tokens, c.labels) for c in data], args.epochs, _dicts(args), seed=args.seed)
    model.save(args.out)
    print(f"trained on {len(data)} citations in {time.perf_counter() - t:.2f}s; "
          f"{len(model.feature_index)} weighted features")
    return EXIT_OK


def cmd_train_matcher(args) -> int:
    from .match_model import load_training_file, train, training_accuracy

    _require(args, "data", "out")
    data = load_training_file(_existing(args.data, "training file"))
    model = train(data, epochs=args.epochs, lam=args.lam, seed=args.seed, calibrate=not args.no_calibrate)
    model.save(args.out)
    print(f"trained {model.mode.value} model on {len(data)} pairs; "
          f"training accuracy {100 * training_accuracy(model, data):.2f}%")
    return EXIT_OK


def cmd_make_pairs(args) -> int:
    from .experiment import matcher_pairs
    from .mapred.jobs import open_index, read_docs, to_citation
    from .match_model import write_training_file
    from .parsing.citation import ReferenceParser
    from .parsing.tagger import TaggerModel
    from .similarity import Mode

    _require(args, "docs", "index", "gold", "out")
    docs = list(read_docs(_existing(args.docs, "document file")))
    index = open_index(_existing(args.index, "index directory"), in_memory=True)
    gold = read_clustering(_existing(args.gold, "gold file"))
    parser = None
    if args.parser_model:
        parser = ReferenceParser(TaggerModel.load(_existing(args.parser_model, "parser model")), _dicts(args))
    by_id = {d.id: d for d in docs}
    cited = []
    for doc in docs:
        for i, ref in enumerate(doc.references):
            target = gold.get(_item(doc.id, i))
            if target is None:
                continue
            if target not in by_id:
                raise DataError(f"gold target {target!r} of {_item(doc.id, i)} is not in the corpus")
            cited.append((to_citation(ref, parser), target))
    if not cited:
        raise DataError("no reference of the corpus appears in the gold file")
    pairs = matcher_pairs(cited, index, by_id, Mode(args.mode))
    write_training_file(args.out, pairs)
    print(f"wrote {len(pairs)} pairs ({sum(lab for _, lab in pairs)} matches) from {len(cited)} citations")
    return EXIT_OK


def _read_scores(path):
    triples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected item<TAB>item<TAB>score")
        try:
            s = float(parts[2])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad score {parts[2]!r}") from None
        triples.append((parts[0].strip(), parts[1].strip(), s))
    return triples


def cmd_cluster(args) -> int:
    _require(args, "scores", "out")
    triples = _read_scores(_existing(args.scores, "score file"))
    items = {a for a, _, _ in triples} | {b for _, b, _ in triples}
    if args.items:
        lines = _existing(args.items, "item file").read_text(encoding="utf-8").splitlines()
        items |= {x.strip() for x in lines if x.strip()}
    clustering = cluster_from_scores(sorted(items), triples, args.threshold)
    write_clustering(args.out, clustering)
    print(f"{len(clustering)} items in {len(set(clustering.values()))} clusters")
    return EXIT_OK


def _pred_from_matches(path) -> Dict[str, str]:
    from .records import MatchResult

    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            r = MatchResult.from_json(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad match record: {exc}") from exc
        item = _item(r.source_doc_id, r.reference_index)
        # unmatched citations form singleton clusters
        out[item] = r.matched_doc_id if r.matched_doc_id is not None else "unmatched:" + item
    return out


def cmd_evaluate(args) -> int:
    _require(args, "gold")
    if bool(args.pred) == bool(args.matches):
        raise UsageError("evaluate needs exactly one of --pred and --matches")
    gold = read_clustering(_existing(args.gold, "gold file"))
    if args.pred:
        pred = read_clustering(_existing(args.pred, "clustering file"))
    else:
        pred = _pred_from_matches(_existing(args.matches, "match file"))
        missing = set(gold) - set(pred)
        if missing:
            raise DataError(f"{len(missing)} gold items have no match record, e.g. {sorted(missing)[0]}")
        pred = {k: pred[k] for k in gold}
    p = pairwise_metrics(gold, pred)
    print(format_report({"result": (cluster_recall(gold, pred), p.precision, p.recall, p.f1)}))
    return EXIT_OK


def cmd_crossval(args) -> int:
    from .experiment import cross_validate
    from .labeled import read_labeled
    from .similarity import Mode

    _require(args, "data")
    data = read_labeled(_existing(args.data, "labeled file"))
    rows = cross_validate(data, _dicts(args), mode=Mode(args.mode), seed=args.seed,
                          threshold=args.threshold, parser_epochs=args.epochs)
    print(format_report({k: m.row() for k, m in rows.items()}))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .labeled import ClusteredCitation, write_labeled
    from .records import canonical_json
    from .synth import make_corpus

    _require(args, "out")
    corpus = make_corpus(args.docs, seed=args.seed, n_citations=args.citations,
                         perturb=not args.no_perturb)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "wb") as fh:
        for doc in corpus.documents:
            fh.write(canonical_json(doc.to_json()) + b"\n")
    if args.gold:
        write_clustering(args.gold, {_item(*k): v for k, v in corpus.links.items()})
    if args.labeled:
        write_labeled(args.labeled, [ClusteredCitation(c.raw, c.tokens, c.labels, c.target) for c in corpus.citations])
    print(f"{len(corpus.documents)} documents, {len(corpus.citations)} citations")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="citematch", description="Citation matching over a document corpus.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file of defaults for this command")
    common.add_argument("-v", "--verbose", action="store_true")
    dicts = argparse.ArgumentParser(add_help=False)
    dicts.add_argument("--dict", action="append", metavar="NAME=PATH",
                       help="replace or add a word list (repeatable)")
    sub = ap.add_subparsers(dest="command", metavar="command")

    def add(name, func, help, parents=(common,)):
        p = sub.add_parser(name, help=help, parents=list(parents))
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "convert a JSON-lines corpus to a record file")
    p.add_argument("--docs", help="JSON-lines corpus")
    p.add_argument("--out", help="output record file")

    p = add("build-index", cmd_build_index, "build the author-token rotation index")
    p.add_argument("--docs", help="document record file")
    p.add_argument("--out", help="index directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--interval", type=int, default=128, help="sparse index sampling interval")
    p.add_argument("--scratch", help="directory for temporary files")

    p = add("match", cmd_match, "match every reference of the corpus", (common, dicts))
    p.add_argument("--docs", help="document record file")
    p.add_argument("--index", help="index directory")
    p.add_argument("--parser-model", help="tagger model (needed for raw references)")
    p.add_argument("--match-model", help="Pipeline-mode linear model")
    p.add_argument("--threshold", type=float, default=0.5, help="minimum score to report a match")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="JSON-lines match results")
    p.add_argument("--seq-out", help="also keep the raw record-file output here")
    p.add_argument("--verify", action="store_true", help="keep only exact substitution-distance index hits")
    p.add_argument("--scratch", help="directory for temporary files")

    p = add("train-parser", cmd_train_parser, "train the reference tagger", (common, dicts))
    p.add_argument("--data", help="labeled token file")
    p.add_argument("--out", help="model file")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)

    p = add("train-matcher", cmd_train_matcher, "train the pair classifier")
    p.add_argument("--data", help="CSV/TSV of feature columns plus label")
    p.add_argument("--out", help="model file")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lam", type=float, default=1e-3, help="regularisation strength")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-calibrate", action="store_true", help="skip logistic calibration of scores")

    p = add("make-pairs", cmd_make_pairs, "derive classifier training pairs from gold links", (common, dicts))
    p.add_argument("--docs", help="document record file")
    p.add_argument("--index", help="index directory")
    p.add_argument("--gold", help="DOC#REF<TAB>cited-doc file")
    p.add_argument("--parser-model", help="tagger model (needed for raw references)")
    p.add_argument("--mode", choices=["Full", "Pipeline"], default="Pipeline")
    p.add_argument("--out", help="CSV training file")

    p = add("cluster", cmd_cluster, "single-link clusters from pair scores")
    p.add_argument("--scores", help="item<TAB>item<TAB>score file")
    p.add_argument("--items", help="optional file of items, one per line")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", help="item<TAB>cluster file")

    p = add("evaluate", cmd_evaluate, "cluster recall and pairwise precision/recall/F1")
    p.add_argument("--gold", help="item<TAB>cluster file")
    p.add_argument("--pred", help="item<TAB>cluster file")
    p.add_argument("--matches", help="JSON-lines match results, scored against --gold")

    p = add("crossval", cmd_crossval, "three-slice cross-validation on a labeled file", (common, dicts))
    p.add_argument("--data", help="labeled token file with cluster headers")
    p.add_argument("--mode", choices=["Full", "Pipeline"], default="Full")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=15, help="tagger epochs")
    p.add_argument("--seed", type=int, default=0)

    p = add("synth", cmd_synth, "generate a synthetic corpus")
    p.add_argument("--docs", type=int, default=300)
    p.add_argument("--citations", type=int, help="total citations (default: 3-6 per document)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-perturb", action="store_true")
    p.add_argument("--out", help="JSON-lines corpus")
    p.add_argument("--gold", help="write DOC#REF<TAB>cited-doc links here")
    p.add_argument("--labeled", help="write the labeled citations here")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            sub = ap._subparsers._group_actions[0].choices[args.command]
            _apply_config(sub, args, argv, read_config(_existing(args.config, "config file")))
        return args.func(args)
    except UsageError as exc:
        print(f"citematch {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, KeyError, SeqFileError, JobError) as exc:
        print(f"citematch {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"citematch {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
