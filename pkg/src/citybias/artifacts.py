"""Versioned artifact files.

Every pipeline artifact opens with a header carrying the pipeline version and
the config hash: CSVs get a `# citybias/<version> config=<hash>` comment line,
NDJSON files a first-line header object, JSON files an embedded `_pipeline`
key.  Binary figures are covered by a manifest CSV next to them.  Writers are
fully deterministic: sorted keys, repr-exact floats, "\n" newlines.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable

from . import __version__
from .errors import StageError


def header_line(config_hash: str) -> str:
    return f"# citybias/{__version__} config={config_hash}"


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def write_csv(path: str | Path, columns: list[str], rows: Iterable[Iterable], config_hash: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    Path(path).write_text(header_line(config_hash) + "\n" + buf.getvalue(), encoding="utf-8")


def read_csv(path: str | Path) -> tuple[str, list[dict[str, str]]]:
    """Returns (config_hash, row dicts); raises if the header line is absent."""
    text = Path(path).read_text(encoding="utf-8")
    first, _, rest = text.partition("\n")
    if not first.startswith("# citybias/"):
        raise StageError("read", f"{path} lacks an artifact header line")
    config_hash = first.rsplit("config=", 1)[-1]
    reader = csv.DictReader(io.StringIO(rest))
    return config_hash, list(reader)


def write_ndjson(path: str | Path, name: str, objs: Iterable[dict], config_hash: str) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(
            {"artifact": name, "version": __version__, "config": config_hash},
            sort_keys=True) + "\n")
        for obj in objs:
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_ndjson(path: str | Path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        header_raw = fh.readline()
        try:
            header = json.loads(header_raw)
        except json.JSONDecodeError as exc:
            raise StageError("read", f"{path} lacks an NDJSON header object") from exc
        if not isinstance(header, dict) or "artifact" not in header:
            raise StageError("read", f"{path} lacks an NDJSON header object")
        objs = [json.loads(line) for line in fh if line.strip()]
    return header, objs


def write_json(path: str | Path, payload: dict, config_hash: str) -> None:
    wrapped = dict(payload)
    wrapped["_pipeline"] = {"version": __version__, "config": config_hash}
    Path(path).write_text(
        json.dumps(wrapped, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def read_json(path: str | Path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if "_pipeline" not in payload:
        raise StageError("read", f"{path} lacks a _pipeline header key")
    return payload


def check_hash(path: str | Path, found: str, expected: str) -> None:
    if found != expected:
        raise StageError(
            "resume",
            f"{path} was produced under config {found}, current config is "
            f"{expected}; rerun the upstream stages",
        )
