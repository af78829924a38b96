"""
Artifact helpers: atomic writes, deterministic JSON, stage seeds
"""
import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def derive_seed(seed: int, stage: str) -> int:
    """Stage seed from the global seed; independent per stage name"""
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).hexdigest()
    return int(digest, 16) % (2 ** 32)


def hash_text(text: str) -> str:
    """SHA-256 hex digest of a text blob"""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_text_atomic(path: Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_json_atomic(path: Path, data) -> Path:
    return write_text_atomic(path, dumps_json(data))


def read_json(path: Path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text with repr-exact floats"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv_atomic(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return write_text_atomic(path, format_csv(header, rows))
