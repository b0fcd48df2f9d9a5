from __future__ import annotations

from pathlib import Path


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


class KeyValueLog:
    """Append-only ``key=value`` lines."""

    def __init__(self, path, **context):
        self.path = Path(path)
        self.context = context

    def __call__(self, **fields) -> None:
        items = {**self.context, **fields}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(" ".join(f"{k}={_fmt(v)}" for k, v in items.items()) + "\n")


def read_log(path) -> list[dict[str, str]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        rows.append(dict(item.split("=", 1) for item in line.split()))
    return rows
