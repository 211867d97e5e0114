import os
import tempfile
from pathlib import Path


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a sibling temp file and rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_lines(path):
    """Return the LF-separated lines of a UTF-8 file, without terminators.

    A single trailing newline does not produce an extra empty line.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        data = fh.read()
    if not data:
        return []
    lines = data.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


def join_lines(lines):
    lines = list(lines)
    if not lines:
        return ""
    return "\n".join(lines) + "\n"
