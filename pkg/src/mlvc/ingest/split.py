"""Five-way partition of corpus shards by file-name glob."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

PARTS = ("train1", "validate1", "train2", "validate2", "test")

# glob "?" never matches the extension dot; validate rules are disjoint on the 9th character
RULES = (
    ("train1", re.compile(r"train[^.]{2}\.[^.]+")),
    ("validate1", re.compile(r"validatea[^.]\.[^.]+")),
    ("train2", re.compile(r"validate[^a0-9.][^.]\.[^.]+")),
    ("validate2", re.compile(r"validate[0-9][^.]\.[^.]+")),
    ("test", re.compile(r"test[^.]{2}\.[^.]+")),
)


@dataclass
class DatasetSplit:
    part: str
    files: list[str] = field(default_factory=list)


def classify(name: str) -> str | None:
    base = os.path.basename(name)
    for part, pattern in RULES:
        if pattern.fullmatch(base):
            return part
    return None


def split_files(names) -> tuple[list[DatasetSplit], list[str]]:
    """Assign each file to one part.  Returns the five splits and the unmatched names."""
    splits = {p: DatasetSplit(p) for p in PARTS}
    rejects = []
    for name in sorted(names):
        part = classify(name)
        if part is None:
            rejects.append(name)
        else:
            splits[part].files.append(name)
    return [splits[p] for p in PARTS], rejects
