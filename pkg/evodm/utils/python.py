import hashlib
import json
import os
import tempfile
from typing import Any, Dict


def compute_md5_hash_from_bytes(input_bytes: bytes) -> str:
    """Compute the MD5 hash of a byte array."""
    return str(hashlib.md5(input_bytes).hexdigest())


def compute_config_hash(config: Dict[str, Any]) -> str:
    """Hash a config dict independently of key order."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return compute_md5_hash_from_bytes(canonical.encode("utf-8"))


def atomic_write_bytes(path: str, data: bytes) -> None:
    # Write to a sibling temp file and swap it in, so readers never see a partial file
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_json(path: str, obj: Any) -> None:
    atomic_write_bytes(path, json.dumps(obj, indent=2, sort_keys=True).encode("utf-8"))
