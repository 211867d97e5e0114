"""``phraseforge`` command-line entry point."""

import argparse
import logging
import os
import sys

from ._io import atomic_write_text, join_lines
from .aligner import load_phrase_table, load_word_alignment
from .config import describe_keys, load_config, parse_number_range
from .corpus import (build_vocabulary, filter_by_length, load_parallel_corpus, load_vocabulary,
                     read_sentences, write_parallel_corpus, write_vocabulary)
from .errors import ConfigError, PhraseforgeError
from .evaluation import (adequacy_average, corpus_bleu, count_untranslated, load_judgements,
                         pairwise_score, tally_pairwise)
from .pipeline import PipelineConfig, decode_corpus, format_trace, summarize, write_summary
from .rewriter import prepare_training_corpus, write_token_maps
from .selector import (SelectionConfig, format_selection_report, load_selection_report,
                       load_stop_words, mine_training_pairs)
from .stats import count_ngrams, dump_statistics, load_statistics
from .translators import load_lexicon, make_translator

log = logging.getLogger("phraseforge")


def _fmt(x):
    return repr(float(x))


def _load_train_corpus(cfg):
    cfg.require(("corpus", "train_source"), ("corpus", "train_target"))
    corpus = load_parallel_corpus(cfg.path("corpus", "train_source"),
                                  cfg.path("corpus", "train_target"),
                                  cfg.get("corpus", "source_lang"), cfg.get("corpus", "target_lang"))
    return filter_by_length(corpus, cfg.get("corpus", "max_tokens"))


def _selection_config(cfg, vocab_src, vocab_tgt, bound=None, max_len=None):
    top_n = cfg.get("selector", "stop_words_top_n")
    stop = []
    for key, vocab in (("stop_words_source", vocab_src), ("stop_words_target", vocab_tgt)):
        path = cfg.path("selector", key)
        stop.append(load_stop_words(path) if path else vocab.top(top_n))
    return SelectionConfig(
        max_phrase_len=max_len or cfg.get("selector", "max_phrase_len"),
        entropy_lower_bound=cfg.get("selector", "entropy_lower_bound") if bound is None else bound,
        stop_words_src=stop[0],
        stop_words_tgt=stop[1],
        substring_check=cfg.get("selector", "substring_check"),
    )


def _pipeline_config(cfg, bound=None, max_len=None):
    cfg.require(("aligner", "phrase_table"))
    vocab_src = load_vocabulary(cfg.path("stats", "source_vocab"), cfg.get("corpus", "vocab_cap"))
    vocab_tgt = load_vocabulary(cfg.path("stats", "target_vocab"), cfg.get("corpus", "vocab_cap"))
    return PipelineConfig(
        selection=_selection_config(cfg, vocab_src, vocab_tgt, bound, max_len),
        table=load_phrase_table(cfg.path("aligner", "phrase_table")),
        stats_src=load_statistics(cfg.path("stats", "source_stats")),
        stats_tgt=load_statistics(cfg.path("stats", "target_stats")),
        vocab_src=vocab_src,
        vocab_tgt=vocab_tgt,
        token_template=cfg.get("pipeline", "token_template"),
        use_smt_alignment=cfg.get("pipeline", "use_smt_alignment"),
    )


FILE_TRANSLATORS = ("dictionary", "phrase-greedy", "closed-vocab")


def _translator_spec(cfg, spec):
    kind, sep, arg = spec.partition(":")
    if kind in FILE_TRANSLATORS and arg:
        return f"{kind}{sep}{cfg.resolve(arg)}"
    return spec


def _translators(cfg, pcfg):
    specs = {role: _translator_spec(cfg, cfg.get("pipeline", role)) for role in ("smt", "nmt")}
    missing = [f"pipeline.{role}: required" for role, spec in specs.items() if not spec]
    if missing:
        raise ConfigError(missing)
    kw = dict(table=pcfg.table, vocab=pcfg.vocab_src, unk=cfg.get("pipeline", "unk"),
              template=pcfg.token_template)
    return make_translator(specs["smt"], **kw), make_translator(specs["nmt"], **kw)


def _training_alignments(cfg):
    path = cfg.path("aligner", "alignment")
    return load_word_alignment(path) if path else None


# -- subcommands -------------------------------------------------------------

def cmd_stats(args, cfg):
    corpus = _load_train_corpus(cfg)
    max_len = cfg.get("stats", "max_len")
    cap = cfg.get("corpus", "vocab_cap")
    for side, sentences in (("source", corpus.source), ("target", corpus.target)):
        log.info("counting %s side: %d sentences", side, len(sentences))
        dump_statistics(count_ngrams(sentences, max_len), cfg.path("stats", f"{side}_stats"))
        write_vocabulary(build_vocabulary(sentences, cap), cfg.path("stats", f"{side}_vocab"))
    return 0


def cmd_entropy(args, cfg):
    stats = load_statistics(cfg.path("stats", f"{args.side}_stats"))
    phrase = tuple(args.phrase.split())
    out = (f"phrase\t{' '.join(phrase)}\nfreq\t{stats.frequency(phrase)}\n"
           f"H_l\t{_fmt(stats.entropy_left(phrase))}\nH_r\t{_fmt(stats.entropy_right(phrase))}\n")
    sys.stdout.write(out)
    return 0


def _mine(cfg, jobs, corpus=None, alignments=None, bound=None, max_len=None, pcfg=None):
    pcfg = pcfg or _pipeline_config(cfg, bound, max_len)
    if corpus is None:
        corpus = _load_train_corpus(cfg)
        alignments = _training_alignments(cfg)
    selections, inventory = mine_training_pairs(
        corpus, pcfg.table, alignments, pcfg.stats_src, pcfg.stats_tgt,
        pcfg.vocab_src, pcfg.vocab_tgt, pcfg.selection, jobs=jobs)
    return corpus, selections, inventory


def cmd_mine(args, cfg):
    corpus, selections, inventory = _mine(cfg, args.jobs)
    atomic_write_text(cfg.path("output", "selection_report"), format_selection_report(selections))
    write_summary(summarize(corpus, selections, inventory), cfg.path("output", "summary"))
    return 0


def cmd_prepare(args, cfg):
    corpus = _load_train_corpus(cfg)
    selections = load_selection_report(cfg.path("output", "selection_report"), corpus)
    tokenized, maps = prepare_training_corpus(corpus, selections,
                                              cfg.get("pipeline", "token_template"))
    write_parallel_corpus(tokenized, cfg.path("output", "tokenized_source"),
                          cfg.path("output", "tokenized_target"))
    write_token_maps(maps, cfg.path("output", "token_maps"))
    return 0


def cmd_decode(args, cfg):
    pcfg = _pipeline_config(cfg)
    sentences = read_sentences(args.input)
    smt, nmt = _translators(cfg, pcfg)
    with smt, nmt:
        results = decode_corpus(sentences, smt, nmt, pcfg, jobs=args.jobs)
    atomic_write_text(args.output, join_lines(" ".join(final) for final, _ in results))
    if args.trace:
        atomic_write_text(args.trace, format_trace([t for _, t in results]))
    return 0


def _emit(args, text):
    if getattr(args, "output", None):
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)


def cmd_eval(args, cfg):
    if args.metric == "bleu":
        score = corpus_bleu(read_sentences(args.cand, allow_placeholders=True),
                            read_sentences(args.ref, allow_placeholders=True))
        _emit(args, f"BLEU\t{score:.4f}\n")
    elif args.metric == "untranslated":
        sources = read_sentences(args.src)
        outputs = read_sentences(args.out, allow_placeholders=True)
        if len(sources) != len(outputs):
            raise PhraseforgeError(f"{len(sources)} source lines vs {len(outputs)} output lines")
        lexicon = load_lexicon(args.lexicon)
        per = [count_untranslated(s, o, lexicon, args.unk) for s, o in zip(sources, outputs)]
        _emit(args, f"untranslated\t{sum(per)}\nsentences\t{len(per)}\n"
                    "definition\tunk literals + lexicon-covered source types without a "
                    "translation in the output\n")
    elif args.metric == "pairwise":
        w, l, t = tally_pairwise(load_judgements(args.judgements))
        _emit(args, f"W\t{w}\nL\t{l}\nT\t{t}\nscore\t{_fmt(pairwise_score(w, l, t))}\n")
    elif args.metric == "adequacy":
        scores = [label for _, label in load_judgements(args.judgements)]
        _emit(args, f"n\t{len(scores)}\nadequacy\t{_fmt(adequacy_average(scores))}\n")
    return 0


SWEEP_COLUMNS = ("max_len", "bound", "occurrences", "pair_types", "source_types",
                 "target_types", "bleu")


def sweep_rows(cfg, bounds, max_lens, jobs=1):
    cfg.require(("sweep", "validation_source"), ("sweep", "validation_target"))
    corpus = load_parallel_corpus(cfg.path("sweep", "validation_source"),
                                  cfg.path("sweep", "validation_target"))
    with_bleu = bool(cfg.get("pipeline", "smt") and cfg.get("pipeline", "nmt"))
    base = _pipeline_config(cfg)
    translators = _translators(cfg, base) if with_bleu else None
    rows = []
    try:
        for max_len in max_lens:
            for bound in bounds:
                pcfg = PipelineConfig(**{**base.__dict__, "selection": SelectionConfig(
                    max_len, bound, base.selection.stop_words_src, base.selection.stop_words_tgt,
                    base.selection.substring_check)})
                _, _, inv = _mine(cfg, jobs, corpus, None, pcfg=pcfg)
                bleu = "-"
                if translators:
                    results = decode_corpus(corpus.source, *translators, pcfg, jobs=jobs)
                    bleu = f"{corpus_bleu([f for f, _ in results], corpus.target):.4f}"
                rows.append((max_len, bound, inv, bleu))
    finally:
        if translators:
            for t in translators:
                t.close()
    return rows


def format_sweep(rows):
    lines = ["\t".join(SWEEP_COLUMNS)]
    for max_len, bound, inv, bleu in rows:
        lines.append("\t".join((str(max_len), _fmt(bound), str(inv.occurrences),
                                str(inv.pair_types), str(inv.source_types),
                                str(inv.target_types), bleu)))
    return "\n".join(lines) + "\n"


def cmd_sweep(args, cfg):
    try:
        bounds = parse_number_range(args.bound or cfg.get("sweep", "bounds"))
        lens_spec = args.max_len or cfg.get("sweep", "max_lens")
        max_lens = ([int(x) for x in lens_spec.split(",")] if lens_spec
                    else [cfg.get("selector", "max_phrase_len")])
    except ValueError as exc:
        raise ConfigError(f"sweep range: {exc}") from None
    _emit(args, format_sweep(sweep_rows(cfg, bounds, max_lens, args.jobs)))
    return 0


# -- argument parsing --------------------------------------------------------

def build_parser():
    epilog = describe_keys()
    fmt = argparse.RawDescriptionHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="configuration file (default: $PHRASEFORGE_CONFIG)")
    common.add_argument("--set", "-s", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration value (repeatable)")
    common.add_argument("--jobs", "-j", type=int, default=os.cpu_count() or 1,
                        help="worker count; outputs do not depend on it")
    common.add_argument("--verbose", "-v", action="count", default=0)

    parser = argparse.ArgumentParser(prog="phraseforge", epilog=epilog, formatter_class=fmt,
                                     description="Branching-entropy phrase selection and "
                                                 "placeholder translation pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help, epilog=epilog, formatter_class=fmt)
        p.set_defaults(func=func)
        return p

    add("stats", cmd_stats, "count n-grams and build vocabularies of the training corpus")
    p = add("entropy", cmd_entropy, "print frequency and branching entropies of a phrase")
    p.add_argument("--phrase", required=True)
    p.add_argument("--side", choices=("source", "target"), default="source")
    add("mine", cmd_mine, "select phrase pairs in the training corpus")
    add("prepare", cmd_prepare, "rewrite the training corpus with placeholder tokens")
    p = add("decode", cmd_decode, "translate with placeholder tokens")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--trace")
    p = add("sweep", cmd_sweep, "selection counts (and BLEU) over a range of entropy bounds")
    p.add_argument("--bound", help="a..b[:step] or comma list (default: sweep.bounds)")
    p.add_argument("--max-len", help="comma list of phrase lengths")
    p.add_argument("--output")

    p = add("eval", cmd_eval, "evaluation metrics")
    metrics = p.add_subparsers(dest="metric", required=True)
    m = metrics.add_parser("bleu", parents=[common])
    m.add_argument("--cand", required=True)
    m.add_argument("--ref", required=True)
    m.add_argument("--output")
    m = metrics.add_parser("untranslated", parents=[common])
    m.add_argument("--src", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--lexicon", required=True)
    m.add_argument("--unk", default="<unk>")
    m.add_argument("--output")
    for name in ("pairwise", "adequacy"):
        m = metrics.add_parser(name, parents=[common])
        m.add_argument("--judgements", required=True)
        m.add_argument("--output")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, args.set)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"phraseforge: error[{exc.kind}]: {exc}", file=sys.stderr)
        return 2
    except PhraseforgeError as exc:
        print(f"phraseforge: error[{exc.kind}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"phraseforge: error[io]: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"phraseforge: error[value]: {str(exc).splitlines()[0]}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
