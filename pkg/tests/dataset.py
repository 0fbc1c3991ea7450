"""Locating the released commit corpus.

Set ``COMMITGEN_DATA`` to a directory holding ``train.diff``/``train.msg`` and
``test.diff``/``test.msg`` (a ``cleaned.`` filename prefix is also accepted).
Tests that need it are skipped when it is absent.
"""

import os
from pathlib import Path

import pytest

from commitgen.corpus import load_parallel_corpus


def data_dir():
    root = os.environ.get("COMMITGEN_DATA")
    return Path(root) if root else None


def split_files(name):
    root = data_dir()
    if root is None:
        return None
    for stem in (name, f"cleaned.{name}"):
        diff, msg = root / f"{stem}.diff", root / f"{stem}.msg"
        if diff.exists() and msg.exists():
            return diff, msg
    return None


def load_split(name):
    files = split_files(name)
    if files is None:
        pytest.skip(f"released corpus split {name!r} not found (set COMMITGEN_DATA)")
    return load_parallel_corpus(*files, name)
