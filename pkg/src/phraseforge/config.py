"""Declarative run configuration.

The configuration file is INI-style with one section per module. Every key
has a type and a default; unset paths are required only by the subcommands
that read them. Relative paths are resolved against the configuration file's
directory. Overrides use ``section.key=value``.
"""

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import DEFAULT_TOKEN_TEMPLATE, placeholder_pattern
from .errors import ConfigError
from .stats import SUBSTRING_POLICIES

ENV_VAR = "PHRASEFORGE_CONFIG"


@dataclass(frozen=True)
class Key:
    type: str  # str | int | float | bool | path
    default: object
    doc: str


KEYS = {
    "corpus": {
        "source_lang": Key("str", "src", "language tag of the source side"),
        "target_lang": Key("str", "tgt", "language tag of the target side"),
        "train_source": Key("path", None, "training corpus, source side (stats, mine, prepare)"),
        "train_target": Key("path", None, "training corpus, target side (stats, mine, prepare)"),
        "max_tokens": Key("int", 40, "keep pairs with fewer tokens than this on both sides"),
        "vocab_cap": Key("int", 40000, "vocabulary size per side"),
    },
    "stats": {
        "max_len": Key("int", 7, "longest phrase counted"),
        "source_stats": Key("path", "stats/source.stats", "n-gram statistics dump, source"),
        "target_stats": Key("path", "stats/target.stats", "n-gram statistics dump, target"),
        "source_vocab": Key("path", "stats/source.vocab", "vocabulary file, source"),
        "target_vocab": Key("path", "stats/target.vocab", "vocabulary file, target"),
    },
    "aligner": {
        "phrase_table": Key("path", None, "phrase table 'src ||| tgt ||| score ...' (mine, decode, sweep)"),
        "alignment": Key("path", None, "word alignment of the training corpus (optional)"),
    },
    "selector": {
        "max_phrase_len": Key("int", 7, "longest selectable phrase"),
        "entropy_lower_bound": Key("float", 5.0, "branching entropy lower bound (bits)"),
        "stop_words_source": Key("path", None, "stop-word file, source (optional)"),
        "stop_words_target": Key("path", None, "stop-word file, target (optional)"),
        "stop_words_top_n": Key("int", 200, "top-N vocabulary stop words when no file is given"),
        "substring_check": Key("str", "all", "substring entropy test: all | inner"),
    },
    "pipeline": {
        "smt": Key("str", "", "phrase-based translator (identity, dictionary:F, "
                              "phrase-greedy[:F], closed-vocab:F, command:CMD)"),
        "nmt": Key("str", "", "neural translator, same forms as smt (decode)"),
        "token_template": Key("str", DEFAULT_TOKEN_TEMPLATE, "placeholder literal template"),
        "unk": Key("str", "<unk>", "unknown-word literal"),
        "use_smt_alignment": Key("bool", False, "use the smt translator's segmentation links"),
    },
    "output": {
        "selection_report": Key("path", "out/selection.tsv", "selection report"),
        "summary": Key("path", "out/summary.json", "inventory summary"),
        "tokenized_source": Key("path", "out/train.tok.src", "rewritten corpus, source"),
        "tokenized_target": Key("path", "out/train.tok.tgt", "rewritten corpus, target"),
        "token_maps": Key("path", "out/train.tokmap", "token maps"),
    },
    "sweep": {
        "validation_source": Key("path", None, "validation corpus, source side (sweep)"),
        "validation_target": Key("path", None, "validation corpus, target side (sweep)"),
        "bounds": Key("str", "1..10", "entropy bounds: a..b[:step] or a,b,c"),
        "max_lens": Key("str", "", "phrase lengths to sweep (comma list; empty = selector value)"),
    },
}

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def describe_keys():
    """Human-readable listing of every key with its default."""
    lines = ["configuration keys (section.key = default):"]
    for section, keys in KEYS.items():
        for name, key in keys.items():
            default = "<unset>" if key.default in (None, "") else key.default
            lines.append(f"  {section}.{name} = {default}  -- {key.doc}")
    return "\n".join(lines)


def _convert(key, raw):
    if key.type in ("str", "path"):
        return raw
    if key.type == "int":
        return int(raw)
    if key.type == "float":
        return float(raw)
    if key.type == "bool":
        return _BOOL[raw.strip().lower()]
    raise AssertionError(key.type)


class RunConfig:
    def __init__(self, values, base_dir):
        self._values = values
        self.base_dir = Path(base_dir)

    def get(self, section, name):
        return self._values[section][name]

    def path(self, section, name):
        return self.resolve(self._values[section][name])

    def resolve(self, value):
        """``value`` as a path relative to the configuration file, or None."""
        if value in (None, ""):
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def require(self, *refs):
        """Raise one ConfigError listing every unset required path."""
        missing = [f"{s}.{k}: required" for s, k in refs if self.path(s, k) is None]
        if missing:
            raise ConfigError(missing)

    def as_dict(self):
        return {s: dict(v) for s, v in self._values.items()}


def load_config(path=None, overrides=()):
    """Load and validate a configuration; ``path`` defaults to $PHRASEFORGE_CONFIG."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    raw = {s: {} for s in KEYS}
    problems = []
    base_dir = Path.cwd()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}".replace("\n", " ")) from None
        base_dir = Path(path).resolve().parent
        for section in parser.sections():
            if section not in KEYS:
                problems.append(f"{section}: unknown section")
                continue
            for name, value in parser.items(section):
                raw[section][name] = value
    for item in overrides:
        ref, sep, value = item.partition("=")
        section, dot, name = ref.partition(".")
        if not sep or not dot:
            problems.append(f"{item}: override must look like section.key=value")
            continue
        if section not in KEYS:
            problems.append(f"{section}: unknown section")
            continue
        raw[section][name] = value

    values = {}
    for section, keys in KEYS.items():
        values[section] = {}
        for name in raw[section]:
            if name not in keys:
                problems.append(f"{section}.{name}: unknown key")
        for name, key in keys.items():
            if name in raw[section]:
                try:
                    values[section][name] = _convert(key, raw[section][name])
                except (ValueError, KeyError):
                    problems.append(f"{section}.{name}: expected {key.type}, got {raw[section][name]!r}")
            else:
                values[section][name] = key.default
    problems.extend(_check_values(values))
    if problems:
        raise ConfigError(problems)
    return RunConfig(values, base_dir)


def _check_values(values):
    problems = []

    def at_least(section, name, lo):
        v = values[section].get(name)
        if isinstance(v, (int, float)) and v < lo:
            problems.append(f"{section}.{name}: must be >= {lo}")

    at_least("corpus", "max_tokens", 1)
    at_least("corpus", "vocab_cap", 1)
    at_least("stats", "max_len", 1)
    at_least("selector", "max_phrase_len", 1)
    at_least("selector", "entropy_lower_bound", 0)
    at_least("selector", "stop_words_top_n", 0)
    sel_len = values["selector"].get("max_phrase_len")
    stats_len = values["stats"].get("max_len")
    if isinstance(sel_len, int) and isinstance(stats_len, int) and sel_len > stats_len:
        problems.append("selector.max_phrase_len: exceeds stats.max_len")
    if values["selector"].get("substring_check") not in SUBSTRING_POLICIES:
        problems.append(f"selector.substring_check: must be one of {', '.join(SUBSTRING_POLICIES)}")
    template = values["pipeline"].get("token_template")
    if isinstance(template, str):
        try:
            placeholder_pattern(template)
        except ValueError:
            problems.append("pipeline.token_template: must contain exactly one '{}'")
    return problems


def parse_number_range(spec):
    """``"1..10"`` -> 1..10 step 1; ``"1..3:0.5"``; ``"1,2.5,5"``."""
    spec = spec.strip()
    if ".." in spec:
        span, _, step = spec.partition(":")
        lo, _, hi = span.partition("..")
        lo, hi = float(lo), float(hi)
        step = float(step) if step else 1.0
        if step <= 0 or hi < lo:
            raise ValueError(f"bad range {spec!r}")
        count = int(round((hi - lo) / step))
        return [lo + k * step for k in range(count + 1) if lo + k * step <= hi + 1e-9]
    return [float(x) for x in spec.split(",") if x.strip()]
