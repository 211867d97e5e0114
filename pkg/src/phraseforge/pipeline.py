"""Training preparation and token-based decoding around black-box translators.

Decoding one sentence runs four steps: translate it with the phrase-based
system, select OOV phrase pairs between the input and that translation and
replace them by placeholders, translate the placeholder sentence with the
neural system, then expand the placeholders with the phrase translations.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from ._io import atomic_write_text, join_lines
from .aligner import CandidatePair, PhraseTable, align_candidates
from .corpus import DEFAULT_TOKEN_TEMPLATE, Vocabulary, write_parallel_corpus
from .errors import PhraseforgeError, UnknownTokenError
from .rewriter import (TokenEntry, TokenMap, find_placeholders, prepare_training_corpus,
                       replace_with_tokens, restore_tokens, write_token_maps)
from .selector import (PhrasePair, SelectionConfig, mine_training_pairs,
                       select_phrase_pairs, write_selection_report)
from .stats import NgramStatistics

log = logging.getLogger(__name__)

TRACE_VERSION = 1


@dataclass
class PipelineConfig:
    """Loaded resources shared by every decode and training-prep call."""

    selection: SelectionConfig
    table: PhraseTable
    stats_src: NgramStatistics
    stats_tgt: NgramStatistics
    vocab_src: Vocabulary
    vocab_tgt: Vocabulary
    token_template: str = DEFAULT_TOKEN_TEMPLATE
    use_smt_alignment: bool = False


@dataclass
class DecodeTrace:
    input: Tuple[str, ...]
    smt_output: Tuple[str, ...]
    smt_alignment: Optional[List[Tuple[int, int]]]
    selected: List[PhrasePair]
    tokenized_input: Tuple[str, ...]
    token_map: TokenMap
    nmt_output: Tuple[str, ...]
    final: Tuple[str, ...]
    dropped: List[int] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "version": TRACE_VERSION,
            "input": " ".join(self.input),
            "smt_output": " ".join(self.smt_output),
            "smt_alignment": None if self.smt_alignment is None
            else [list(link) for link in self.smt_alignment],
            "selected": [
                {
                    "src_start": p.src_start, "src_len": p.src_len,
                    "tgt_start": p.tgt_start, "tgt_len": p.tgt_len,
                    "source": " ".join(p.source), "target": " ".join(p.target),
                    "entropies": [p.h_left_src, p.h_right_src, p.h_left_tgt, p.h_right_tgt],
                    "provenance": p.candidate.provenance_label,
                }
                for p in self.selected
            ],
            "tokenized_input": " ".join(self.tokenized_input),
            "token_template": self.token_map.template,
            "token_map": [
                {"index": e.index, "source": " ".join(e.source), "translation": " ".join(e.target)}
                for e in self.token_map.entries
            ],
            "nmt_output": " ".join(self.nmt_output),
            "final": " ".join(self.final),
            "dropped": list(self.dropped),
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d):
        def toks(s):
            return tuple(s.split(" ")) if s else ()

        if d.get("version") != TRACE_VERSION:
            raise PhraseforgeError(f"unsupported trace version {d.get('version')!r}")
        selected = []
        for s in d["selected"]:
            cand = CandidatePair(s["src_start"], s["src_len"], s["tgt_start"], s["tgt_len"],
                                 toks(s["source"]), toks(s["target"]),
                                 frozenset(s["provenance"].split("+")))
            selected.append(PhrasePair(cand, *s["entropies"]))
        tmap = TokenMap(tuple(TokenEntry(e["index"], toks(e["source"]), toks(e["translation"]))
                              for e in d["token_map"]), d["token_template"])
        align = d["smt_alignment"]
        return cls(toks(d["input"]), toks(d["smt_output"]),
                   None if align is None else [tuple(x) for x in align],
                   selected, toks(d["tokenized_input"]), tmap, toks(d["nmt_output"]),
                   toks(d["final"]), list(d["dropped"]), list(d["diagnostics"]))


def replay_trace(trace):
    """Recompute the final sentence from the recorded NMT output and token map."""
    return restore_tokens(trace.nmt_output, trace.token_map)


def select_for_decoding(sentence, smt_output, smt_alignment, cfg, diagnostics=None):
    """Step 2 selection; the same code path as training-time mining."""
    pair = (tuple(sentence), tuple(smt_output))
    cands = align_candidates(pair, cfg.table, smt_alignment, cfg.selection.max_phrase_len)
    return select_phrase_pairs(pair, cands, cfg.stats_src, cfg.stats_tgt,
                               cfg.vocab_src, cfg.vocab_tgt, cfg.selection, diagnostics)


def decode_with_tokens(sentence, smt, nmt, cfg):
    """Translate ``sentence``; returns ``(final, trace)``.

    Placeholders that the neural system drops are listed in
    ``trace.dropped``; a placeholder it invents raises
    :class:`UnknownTokenError`.
    """
    sentence = tuple(sentence)
    if cfg.use_smt_alignment:
        smt_output, links = smt.translate_aligned(sentence)
    else:
        smt_output, links = smt.translate(sentence), None
    smt_output = tuple(smt_output)

    diagnostics = []
    selected = select_for_decoding(sentence, smt_output, links, cfg, diagnostics)
    (tokenized, _), tmap = replace_with_tokens((sentence, smt_output), selected,
                                               cfg.token_template)

    nmt_output = tuple(nmt.translate(tokenized))
    present = find_placeholders(nmt_output, cfg.token_template)
    introduced = {e.index for e in tmap.entries}
    unknown = set(present) - introduced
    if unknown:
        raise UnknownTokenError(unknown)
    dropped = sorted(introduced - set(present))
    if dropped:
        diagnostics.append(f"dropped tokens {dropped}")
    final = restore_tokens(nmt_output, tmap)
    trace = DecodeTrace(sentence, smt_output, None if links is None else sorted(links),
                        selected, tokenized, tmap, nmt_output, final, dropped, diagnostics)
    return final, trace


def decode_corpus(sentences, smt, nmt, cfg, jobs=1):
    """Decode many sentences, in parallel only if both translators allow it."""
    def one(s):
        return decode_with_tokens(s, smt, nmt, cfg)

    if jobs > 1 and smt.thread_safe and nmt.thread_safe:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(one, sentences))
    return [one(s) for s in sentences]


def format_trace(traces):
    return join_lines(json.dumps(t.to_dict(), ensure_ascii=False, sort_keys=True) for t in traces)


def write_trace(traces, path):
    """JSON Lines: one object per decoded sentence."""
    atomic_write_text(path, format_trace(traces))


def load_trace(path):
    with open(path, encoding="utf-8") as fh:
        return [DecodeTrace.from_dict(json.loads(line)) for line in fh if line.strip()]


@dataclass(frozen=True)
class TrainingOutputs:
    tokenized_source: Path
    tokenized_target: Path
    token_maps: Path
    selection_report: Path
    summary: Path


def summarize(corpus, selections, inventory):
    return {
        "sentence_pairs": len(corpus),
        "pairs_with_selection": sum(1 for s in selections if s),
        "max_tokens_per_pair": max((len(s) for s in selections), default=0),
        "inventory": inventory.as_dict(),
    }


def write_summary(summary, path):
    atomic_write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def prepare_outputs(corpus, selections, inventory, outputs, template=DEFAULT_TOKEN_TEMPLATE):
    tokenized, maps = prepare_training_corpus(corpus, selections, template)
    write_parallel_corpus(tokenized, outputs.tokenized_source, outputs.tokenized_target)
    write_token_maps(maps, outputs.token_maps)
    write_selection_report(selections, outputs.selection_report)
    write_summary(summarize(corpus, selections, inventory), outputs.summary)
    return tokenized, maps


def run_training_prep(corpus, cfg, outputs, alignments=None, jobs=1):
    """Mine phrase pairs over ``corpus`` and write the rewritten training data."""
    try:
        selections, inventory = mine_training_pairs(
            corpus, cfg.table, alignments, cfg.stats_src, cfg.stats_tgt,
            cfg.vocab_src, cfg.vocab_tgt, cfg.selection, jobs=jobs)
        prepare_outputs(corpus, selections, inventory, outputs, cfg.token_template)
    except OSError as exc:
        raise PhraseforgeError(f"{exc.filename}: {exc.strerror}") from exc
    return selections, inventory
