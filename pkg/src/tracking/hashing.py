"""Content Hashing for Reproducible Outputs"""

import hashlib
import json
from pathlib import Path
from typing import Any, Union

_CHUNK = 1 << 20


def canonical_json(data: Any) -> str:
    """Stable JSON text: sorted keys, no whitespace variation."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def sha256_content(data: Union[str, bytes]) -> str:
    """Hex digest of a string or byte payload."""
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    """Hex digest of a file, read in chunks."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(_CHUNK), b""):
            digest.update(block)
    return digest.hexdigest()


def config_digest(config: Any) -> str:
    """Digest of a configuration mapping or pydantic model."""
    if hasattr(config, "model_dump"):
        config = config.model_dump(mode="json")
    return sha256_content(canonical_json(config))
