"""Black-box translator ports and the builtin stand-ins used for testing.

A translator maps a tokenized sentence to a tokenized sentence. Real SMT/NMT
systems are wired in through :class:`SubprocessTranslator`, which speaks a
one-line-in, one-line-out protocol over stdin/stdout.
"""

import abc
import logging
import shlex
import subprocess
import threading

from ._io import read_lines
from .aligner import load_phrase_table
from .corpus import DEFAULT_TOKEN_TEMPLATE, placeholder_pattern
from .errors import ParseError, PhraseforgeError

log = logging.getLogger(__name__)


class Translator(abc.ABC):
    """Port for an external translation system.

    ``thread_safe`` declares whether :meth:`translate` may be called from
    several threads at once; orchestrators fall back to sequential calls
    when it is False.
    """

    thread_safe = True

    @abc.abstractmethod
    def translate(self, sentence):
        ...

    def translate_batch(self, sentences):
        return [self.translate(s) for s in sentences]

    def translate_aligned(self, sentence):
        """Return ``(translation, links)``; ``links`` is None when the system
        exposes no alignment or segmentation trace."""
        return self.translate(sentence), None

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class IdentityTranslator(Translator):
    def translate(self, sentence):
        return tuple(sentence)

    def translate_aligned(self, sentence):
        return tuple(sentence), frozenset((i, i) for i in range(len(sentence)))


def load_lexicon(path):
    """Read ``source<TAB>target`` lines into ``{source: [targets...]}``."""
    lexicon = {}
    for lineno, line in enumerate(read_lines(path), 1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise ParseError("expected 'source<TAB>target'", path, lineno)
        lexicon.setdefault(fields[0], [])
        if fields[1] not in lexicon[fields[0]]:
            lexicon[fields[0]].append(fields[1])
    return lexicon


class DictionaryTranslator(Translator):
    """Word-for-word lookup; unknown tokens pass through unchanged."""

    def __init__(self, lexicon):
        self.lexicon = {
            src: (tgt if isinstance(tgt, str) else tgt[0]) for src, tgt in lexicon.items()
        }

    @classmethod
    def from_file(cls, path):
        return cls(load_lexicon(path))

    def translate(self, sentence):
        return tuple(self.lexicon.get(tok, tok) for tok in sentence)

    def translate_aligned(self, sentence):
        return self.translate(sentence), frozenset((i, i) for i in range(len(sentence)))


class PhraseGreedyTranslator(Translator):
    """Left-to-right longest-match cover with the best phrase-table option.

    Uncovered tokens are copied. The segmentation is returned as alignment
    links (every source token of a segment linked to every target token).
    """

    def __init__(self, table, max_len=None):
        self.table = table
        self.max_len = max_len or table.max_source_len

    @classmethod
    def from_file(cls, path, max_len=None):
        return cls(load_phrase_table(path), max_len)

    def translate_aligned(self, sentence):
        sentence = tuple(sentence)
        out, links = [], set()
        i = 0
        while i < len(sentence):
            for n in range(min(self.max_len, len(sentence) - i), 0, -1):
                best = self.table.best(sentence[i:i + n])
                if best is not None:
                    break
            else:
                n, best = 1, (sentence[i],)
            start = len(out)
            out.extend(best)
            links.update((s, t) for s in range(i, i + n) for t in range(start, len(out)))
            i += n
        return tuple(out), frozenset(links)

    def translate(self, sentence):
        return self.translate_aligned(sentence)[0]


class ClosedVocabularyTranslator(Translator):
    """Stand-in for a fixed-vocabulary neural model.

    In-vocabulary tokens are translated through the lexicon, placeholder
    literals are copied, and everything else becomes ``unk``.
    """

    def __init__(self, lexicon, vocab, unk="<unk>", template=DEFAULT_TOKEN_TEMPLATE):
        self.lexicon = {
            src: (tgt if isinstance(tgt, str) else tgt[0]) for src, tgt in lexicon.items()
        }
        self.vocab = vocab
        self.unk = unk
        self._placeholder = placeholder_pattern(template)

    def translate(self, sentence):
        out = []
        for tok in sentence:
            if self._placeholder.fullmatch(tok):
                out.append(tok)
            elif tok in self.vocab:
                out.append(self.lexicon.get(tok, tok))
            else:
                out.append(self.unk)
        return tuple(out)

    def translate_aligned(self, sentence):
        return self.translate(sentence), frozenset((i, i) for i in range(len(sentence)))


class SubprocessTranslator(Translator):
    """Talks to an external command: one sentence per line in, one out."""

    thread_safe = False

    def __init__(self, command):
        self.command = command
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        log.info("starting translator process %s", argv)
        self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                      bufsize=0)
        self._lock = threading.Lock()

    def translate(self, sentence):
        line = (" ".join(sentence) + "\n").encode("utf-8")
        with self._lock:
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except BrokenPipeError:
                raise PhraseforgeError(f"translator process {self.command!r} exited") from None
            reply = self._proc.stdout.readline()
        if not reply:
            raise PhraseforgeError(f"translator process {self.command!r} closed its output")
        text = reply.decode("utf-8").rstrip("\n")
        return tuple(text.split(" ")) if text else ()

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


def builtin_translators():
    """Name -> factory for the translators selectable from configuration."""
    return {
        "identity": IdentityTranslator,
        "dictionary": DictionaryTranslator.from_file,
        "phrase-greedy": PhraseGreedyTranslator,
        "closed-vocab": ClosedVocabularyTranslator,
        "command": SubprocessTranslator,
    }


def make_translator(spec, table=None, vocab=None, unk="<unk>", template=DEFAULT_TOKEN_TEMPLATE):
    """Build a translator from a ``kind[:argument]`` string.

    ``identity``, ``dictionary:<lexicon>``, ``phrase-greedy[:<table>]``,
    ``closed-vocab:<lexicon>`` (uses ``vocab``) and ``command:<cmdline>``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "identity":
        return IdentityTranslator()
    if kind == "dictionary" and arg:
        return DictionaryTranslator.from_file(arg)
    if kind == "phrase-greedy":
        if arg:
            return PhraseGreedyTranslator.from_file(arg)
        if table is None:
            raise PhraseforgeError("phrase-greedy translator needs a phrase table")
        return PhraseGreedyTranslator(table)
    if kind == "closed-vocab" and arg:
        if vocab is None:
            raise PhraseforgeError("closed-vocab translator needs a source vocabulary")
        return ClosedVocabularyTranslator(load_lexicon(arg), vocab, unk, template)
    if kind == "command" and arg:
        return SubprocessTranslator(arg)
    raise PhraseforgeError(f"unknown translator spec {spec!r}")
