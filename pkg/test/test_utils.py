import json
import os
from pathlib import Path

import numpy as np
import pytest

from evodm.utils.python import atomic_write_json, compute_config_hash, compute_md5_hash_from_bytes
from evodm.utils.random import StreamPurpose, derive_seed, stream


def test_streams_are_keyed() -> None:
    a = stream(7, StreamPurpose.EVALUATION, 3, 1).random(5)
    b = stream(7, StreamPurpose.EVALUATION, 3, 1).random(5)
    c = stream(7, StreamPurpose.EVALUATION, 3, 2).random(5)
    d = stream(7, StreamPurpose.MUTATION, 3, 1).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_streams_do_not_depend_on_consumption_order() -> None:
    first = stream(1, StreamPurpose.SELECTION, 0)
    first.random(1000)
    assert np.array_equal(stream(1, StreamPurpose.SELECTION, 1).random(3), stream(1, StreamPurpose.SELECTION, 1).random(3))


def test_stream_indices_must_be_non_negative() -> None:
    with pytest.raises(ValueError):
        stream(1, StreamPurpose.EVALUATION, -1)


def test_derive_seed() -> None:
    assert derive_seed(5, 0, 1) == derive_seed(5, 0, 1)
    assert derive_seed(5, 0, 1) != derive_seed(5, 1, 0)
    assert 0 <= derive_seed(5, 2, 3) < 2**64


def test_config_hash_ignores_key_order() -> None:
    assert compute_config_hash({"a": 1, "b": [1, 2]}) == compute_config_hash({"b": [1, 2], "a": 1})
    assert compute_config_hash({"a": 1}) != compute_config_hash({"a": 2})
    assert compute_md5_hash_from_bytes(b"") == "d41d8cd98f00b204e9800998ecf8427e"


def test_atomic_write_json(tmp_path: Path) -> None:
    path = str(tmp_path / "nested" / "state.json")
    atomic_write_json(path, {"b": 1, "a": 2})
    with open(path) as f:
        assert json.load(f) == {"a": 2, "b": 1}
    assert os.listdir(tmp_path / "nested") == ["state.json"]
