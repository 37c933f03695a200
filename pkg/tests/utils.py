from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest
from cappa import argparse
from cappa.testing import CommandRunner, RunnerArgs
from typing_extensions import Unpack

from xychain.cli import Sim

backends = pytest.mark.parametrize("backend", [None, argparse.backend])

runner = CommandRunner(Sim, base_args=[])


def parse(*args: str, **kwargs: Unpack[RunnerArgs]) -> Sim:
    return runner.parse(*args, **kwargs)


def invoke(*args: str, **kwargs: Unpack[RunnerArgs]):
    return runner.invoke(*args, **kwargs)


def read_csv(path: Path) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(path.read_text())))


def read_json(path: Path):
    return json.loads(path.read_text())
