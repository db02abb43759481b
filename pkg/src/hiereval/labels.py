"""Per-instance label sets and the label file format."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .hierarchy import Hierarchy, UnknownNodeError


class LabelFileError(ValueError):
    def __init__(self, message, path=None, line=None):
        self.path, self.line = path, line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class InstanceLabels:
    truth: frozenset
    predicted: frozenset

    def __init__(self, truth: Iterable[int], predicted: Iterable[int]):
        object.__setattr__(self, "truth", frozenset(truth))
        object.__setattr__(self, "predicted", frozenset(predicted))

    def validate(self, h: Hierarchy) -> "InstanceLabels":
        if not self.truth:
            raise ValueError("an instance needs at least one true class")
        for n in self.truth | self.predicted:
            if n not in h.nodes:
                raise UnknownNodeError(n)
        return self

    @property
    def union_size(self) -> int:
        return len(self.truth | self.predicted)


def parse_label_lines(text: str, path=None) -> list[tuple[int, ...]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            rows.append(tuple(int(tok) for tok in line.split()))
        except ValueError:
            raise LabelFileError(f"non-integer class id in {line!r}", path, lineno) from None
        if any(x < 0 for x in rows[-1]):
            raise LabelFileError("class ids must be non-negative", path, lineno)
    return rows


def read_label_file(path) -> list[tuple[int, ...]]:
    return parse_label_lines(Path(path).read_text(encoding="utf-8"), path)


def format_label_lines(rows: Iterable[Iterable[int]]) -> str:
    return "".join(" ".join(str(x) for x in row) + "\n" for row in rows)
