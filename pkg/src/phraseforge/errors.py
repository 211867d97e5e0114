"""Exception hierarchy shared by all phraseforge modules."""


class PhraseforgeError(Exception):
    """Base class for every error raised by this package."""

    kind = "error"


class CorpusAlignmentError(PhraseforgeError):
    kind = "alignment"

    def __init__(self, source_count, target_count, source_path=None, target_path=None):
        self.source_count = source_count
        self.target_count = target_count
        where = ""
        if source_path is not None:
            where = f" ({source_path} vs {target_path})"
        super().__init__(
            f"line counts differ: {source_count} source lines vs "
            f"{target_count} target lines{where}"
        )


class MalformedCorpusError(PhraseforgeError):
    kind = "malformed-corpus"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif loc:
            loc += " "
        super().__init__(loc + message)


class ParseError(PhraseforgeError):
    kind = "parse"

    def __init__(self, message, path=None, line=None, token=None):
        self.path = path
        self.line = line
        self.token = token
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        prefix = ", ".join(parts)
        if token is not None:
            message = f"{message} (token {token!r})"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class PhraseNotFound(PhraseforgeError, KeyError):
    """Phrase was never counted; distinct from a phrase with zero entropy."""

    kind = "not-found"

    def __init__(self, phrase):
        self.phrase = tuple(phrase)
        super().__init__(f"phrase not in statistics: {' '.join(self.phrase)!r}")

    def __str__(self):
        return self.args[0]


class OverlapError(PhraseforgeError):
    kind = "overlap"


class TokenCollisionError(PhraseforgeError):
    kind = "token-collision"


class MissingTranslationError(PhraseforgeError):
    kind = "missing-translation"

    def __init__(self, indices):
        self.indices = sorted(indices)
        super().__init__(
            "no translation for token indices " + ", ".join(map(str, self.indices))
        )


class UnknownTokenError(MissingTranslationError):
    """Translator output references a token index that was never introduced."""

    kind = "unknown-token"


class ConfigError(PhraseforgeError):
    kind = "config"

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class EvaluationError(PhraseforgeError, ValueError):
    kind = "evaluation"
