"""Parsers for the two gsbp CSV layouts."""

from __future__ import annotations

import numpy as np


class MissingColumnError(ValueError):
    """A required CSV column is absent."""

    def __init__(self, column: str, path):
        self.column = column
        super().__init__(f"{path}: missing required column {column!r}")


class Table:
    """Column-addressable float table."""

    def __init__(self, header, data, meta=None, path=""):
        self.header = list(header)
        self.data = data
        self.meta = meta or {}
        self.path = path

    def column(self, name: str) -> np.ndarray:
        if name not in self.header:
            raise MissingColumnError(name, self.path)
        return self.data[:, self.header.index(name)]

    def columns_prefixed(self, prefix: str) -> np.ndarray:
        names = [h for h in self.header if h.startswith(prefix)]
        if not names:
            raise MissingColumnError(prefix + "1", self.path)
        idx = [self.header.index(n) for n in sorted(names, key=lambda s: int(s.split("_")[-1]))]
        return self.data[:, idx]


def _read(path) -> Table:
    meta = {}
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = float(value)
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise ValueError(f"{path}: no tabular content")
    return Table(header, np.asarray(rows, dtype=float), meta, str(path))


def read_trajectory_csv(path) -> Table:
    """Trajectory export: t, q_1..q_n, p_1..p_n, H, F, mass [+ extras]."""
    table = _read(path)
    for required in ("t", "H"):
        if required not in table.header:
            raise MissingColumnError(required, path)
    return table


def read_split_csv(path) -> Table:
    """Split-audit export with its c/H/lambda/a/m header block."""
    table = _read(path)
    for required in ("t", "G", "Gstar"):
        if required not in table.header:
            raise MissingColumnError(required, path)
    for key in ("c", "H", "lambda"):
        if key not in table.meta:
            raise ValueError(f"{path}: missing '# {key}=' header entry")
    return table
