"""Corpus BLEU, untranslated-word counts and human-judgement arithmetic."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List

from ._io import read_lines
from .errors import EvaluationError, ParseError

MAX_ORDER = 4
PAIRWISE_LABELS = ("W", "L", "T")


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_statistics(candidates, references, max_order=MAX_ORDER):
    """Clipped n-gram matches, candidate n-gram totals and the two lengths."""
    if len(candidates) != len(references):
        raise EvaluationError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise EvaluationError("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            c = _ngrams(cand, n)
            r = _ngrams(ref, n)
            matches[n - 1] += sum(min(k, r[g]) for g, k in c.items())
            totals[n - 1] += max(0, len(cand) - n + 1)
    return matches, totals, cand_len, ref_len


def corpus_bleu(candidates, references, max_order=MAX_ORDER):
    """Unsmoothed single-reference corpus BLEU on a 0-100 scale.

    Orders for which the candidate corpus has no n-grams at all are left out
    of the geometric mean; any other zero precision gives 0.
    """
    matches, totals, c, r = bleu_statistics(candidates, references, max_order)
    if c == 0:
        return 0.0
    log_p = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        log_p.append(math.log(m / t))
    bp = math.exp(min(0.0, 1.0 - r / c))
    return 100.0 * bp * math.exp(sum(log_p) / len(log_p))


def count_untranslated(source, output, lexicon, unk_literal="<unk>"):
    """Unknown-word literals in ``output`` plus distinct lexicon-covered
    source tokens none of whose translations appear in ``output``."""
    produced = set(output)
    missing = {
        tok for tok in set(source)
        if tok in lexicon and produced.isdisjoint(lexicon[tok])
    }
    return list(output).count(unk_literal) + len(missing)


@dataclass
class EvalReport:
    bleu: float
    untranslated_count: int
    details: List[dict] = field(default_factory=list)


def evaluate(sources, outputs, references, lexicon, unk_literal="<unk>"):
    details = []
    total = 0
    for i, (src, out) in enumerate(zip(sources, outputs)):
        n = count_untranslated(src, out, lexicon, unk_literal)
        total += n
        details.append({"sentence": i, "untranslated": n})
    return EvalReport(corpus_bleu(outputs, references), total, details)


def pairwise_score(wins, losses, ties):
    """``100 * (W - L) / (W + L + T)``."""
    for name, v in (("wins", wins), ("losses", losses), ("ties", ties)):
        if v < 0:
            raise EvaluationError(f"{name} must be >= 0")
    total = wins + losses + ties
    if total < 1:
        raise EvaluationError("no judgements")
    return 100.0 * (wins - losses) / total


def adequacy_average(scores):
    scores = list(scores)
    if not scores:
        raise EvaluationError("no adequacy scores")
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, int) or not 1 <= s <= 5:
            raise EvaluationError(f"adequacy score out of range 1..5: {s!r}")
    return sum(scores) / len(scores)


def load_judgements(path):
    """Read ``id<TAB>label`` lines; labels are W/L/T or integers 1-5."""
    out = []
    for lineno, line in enumerate(read_lines(path), 1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("expected 'id<TAB>label'", path, lineno)
        ident, label = fields
        if label in PAIRWISE_LABELS:
            out.append((ident, label))
        elif label.isdigit():
            out.append((ident, int(label)))
        else:
            raise ParseError("unknown judgement label", path, lineno, label)
    return out


def tally_pairwise(judgements):
    counts = Counter(label for _, label in judgements)
    bad = [l for l in counts if l not in PAIRWISE_LABELS]
    if bad:
        raise EvaluationError(f"non-pairwise labels: {bad}")
    return counts["W"], counts["L"], counts["T"]
