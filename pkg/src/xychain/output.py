"""Console output and on-disk artifacts (CSV, JSON, gnuplot scripts, run manifest)."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import sys
import tempfile
import typing
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import msgspec
import numpy as np
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from rich.theme import Theme

from xychain.errors import ConfigurationError

__all__ = [
    "SIGNIFICANT_DIGITS",
    "ArtifactWriter",
    "Output",
    "RunManifest",
    "format_number",
    "theme",
]

SIGNIFICANT_DIGITS: int = 12

theme: Theme = Theme(
    {
        "xychain.title": "dark_orange bold",
        "xychain.key": "cyan",
        "xychain.value": "",
        "xychain.path": "grey50",
        "xychain.warn": "yellow",
    }
)


@dataclass
class Output:
    """Output sink for summaries (stdout) and errors (stderr).

    Arguments:
        output_console: Output sink, defaults to printing to stdout.
        error_console: Error sink, defaults to printing to stderr.

    Examples:
        >>> output = Output().color(False)
    """

    output_console: Console = field(
        default_factory=lambda: Console(file=sys.stdout, theme=theme)
    )
    error_console: Console = field(
        default_factory=lambda: Console(file=sys.stderr, theme=theme)
    )

    def color(self, value: bool = True) -> Output:
        self.output_console.no_color = not value
        self.error_console.no_color = not value
        return self

    def output(self, message: typing.Any):
        self.output_console.print(message, overflow="ignore", crop=False)

    def error(self, message: typing.Any):
        self.error_console.print(
            f"[red]Error[/red]: {escape(str(message))}",
            overflow="ignore",
            crop=False,
        )

    def summary(self, title: str, values: typing.Mapping[str, typing.Any]):
        """Two-column key/value table."""
        table = Table(title=title, title_style="xychain.title", show_header=False)
        table.add_column(style="xychain.key")
        table.add_column(style="xychain.value")
        for key, value in values.items():
            table.add_row(key, format_value(value))
        self.output(table)


def format_number(value: float) -> str:
    """Fixed-precision text for a float.

    Examples:
        >>> format_number(1 / 3)
        '0.333333333333'
        >>> format_number(-0.0)
        '0'
    """
    if value == 0:
        return "0"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def format_value(value: typing.Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_number(float(value))
    if value is None:
        return ""
    return str(value)


def _rounded(value: typing.Any) -> typing.Any:
    """JSON-ready copy with floats at fixed precision and mapping keys sorted."""
    if isinstance(value, typing.Mapping):
        return {str(k): _rounded(value[k]) for k in sorted(value, key=str)}
    if isinstance(value, np.ndarray):
        return _rounded(value.tolist())
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(format_number(value))
    if isinstance(value, complex):
        return {"im": _rounded(value.imag), "re": _rounded(value.real)}
    return value


@dataclass
class ArtifactWriter:
    """Writes files inside one output directory, each atomically.

    Every written file is recorded with its sha256 digest.
    """

    directory: Path
    digests: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.directory = Path(self.directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        root = self.directory.resolve()
        target = (root / name).resolve()
        if not target.is_relative_to(root) or target == root:
            raise ConfigurationError(
                f"{name!r} is outside the output directory {root}", context="output"
            )
        return target

    def write_bytes(self, name: str, content: bytes) -> Path:
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)

        fd, temporary = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(content)
            os.replace(temporary, target)
        except BaseException:
            Path(temporary).unlink(missing_ok=True)
            raise

        self.digests[target.relative_to(self.directory.resolve()).as_posix()] = hashlib.sha256(
            content
        ).hexdigest()
        return target

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode())

    def write_csv(
        self,
        name: str,
        header: typing.Sequence[str],
        rows: typing.Iterable[typing.Sequence[typing.Any]],
    ) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ConfigurationError(
                    f"row of {len(row)} values for {len(header)} columns", context=name
                )
            writer.writerow([format_value(v) for v in row])
        return self.write_text(name, buffer.getvalue())

    def write_json(self, name: str, data: typing.Any, *, exact: bool = False) -> Path:
        """Pretty-printed JSON; floats keep full precision only when `exact` is set."""
        encoded = msgspec.json.encode(data if exact else _rounded(data))
        return self.write_bytes(name, msgspec.json.format(encoded, indent=2) + b"\n")

    def write_gnuplot(self, name: str, data_file: str, columns: typing.Sequence[str]) -> Path:
        """Plot script drawing every column of `data_file` against the first one."""
        lines = [
            "set datafile separator ','",
            "set key autotitle columnhead",
            f"set xlabel '{columns[0]}'",
            "plot " + ", \\\n     ".join(
                f"'{data_file}' using 1:{k + 1} with lines" for k in range(1, len(columns))
            ),
        ]
        return self.write_text(name, "\n".join(lines) + "\n")


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


class RunManifest(msgspec.Struct, kw_only=True):
    """What a run was configured with and what it wrote."""

    config: dict[str, typing.Any]
    seed: int
    versions: dict[str, str]
    wall_time: float
    files: dict[str, str]

    @classmethod
    def build(
        cls,
        config: dict[str, typing.Any],
        seed: int,
        wall_time: float,
        files: typing.Mapping[str, str],
    ) -> RunManifest:
        return cls(
            config=config,
            seed=seed,
            versions={p: _version(p) for p in ("xychain", "numpy", "scipy", "msgspec")},
            wall_time=wall_time,
            files=dict(sorted(files.items())),
        )

    def verify(self, directory: Path) -> list[str]:
        """Names of listed files whose content no longer matches its digest."""
        return [
            name
            for name, digest in self.files.items()
            if hashlib.sha256((Path(directory) / name).read_bytes()).hexdigest() != digest
        ]
