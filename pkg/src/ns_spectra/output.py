"""CSV/JSON rendering, atomic file writes and run manifests."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__

TOOL_NAME = "ns-spectra"


def fmt(value) -> str:
    """Render a CSV field; floats keep 17 significant digits so they round-trip exactly."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(header, rows) -> bytes:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return ("\n".join(lines) + "\n").encode("ascii")


def render_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n").encode("utf-8")


def write_atomic(path: Path, data: bytes):
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    except OSError as exc:
        raise OSError(exc.errno, exc.strerror, str(path)) from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def manifest_path(out: Path) -> Path:
    return Path(out).with_suffix(".manifest.json")


def build_manifest(command: str, config: dict, outputs: dict[str, bytes], timestamp: str | None = None) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "config": config,
        "master_seed": config.get("seed"),
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "checksums": {name: sha256(data) for name, data in sorted(outputs.items())},
    }


def write_outputs(command: str, config: dict, outputs: dict[Path, bytes]) -> Path:
    """Write every output plus one manifest next to the first; return the manifest path."""
    paths = list(outputs)
    for path, data in outputs.items():
        write_atomic(path, data)
    manifest = build_manifest(command, config, {p.name: d for p, d in outputs.items()})
    target = manifest_path(paths[0])
    write_atomic(target, render_json(manifest))
    return target
