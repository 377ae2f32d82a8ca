"""Atomic output files and the run manifest."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def to_json(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, default=_default, allow_nan=True) + "\n").encode()


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RunOutputs:
    """Collects outputs as ``<name>.partial`` and renames them on :meth:`commit`.

    If the run dies before commit, the ``.partial`` files stay behind.
    """

    def __init__(self, directory: os.PathLike):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hashes: Dict[str, str] = {}

    def write(self, name: str, data: bytes) -> None:
        atomic_write(self.dir / (name + ".partial"), data)
        self.hashes[name] = hashlib.sha256(data).hexdigest()

    def commit(self, manifest: Dict[str, Any]) -> None:
        for name in self.hashes:
            os.replace(self.dir / (name + ".partial"), self.dir / name)
        manifest = dict(manifest, outputs=dict(sorted(self.hashes.items())))
        atomic_write(self.dir / "manifest.json", to_json(manifest))


def versions(backend: str) -> Dict[str, str]:
    from . import __version__

    out = {
        "apamoeba": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "backend": backend,
    }
    if backend == "numba":
        import numba

        out["numba"] = numba.__version__
    return out


def file_digest(path: Optional[os.PathLike]) -> Optional[str]:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
