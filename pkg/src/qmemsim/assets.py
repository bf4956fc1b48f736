"""Access to bundled datasets and example programs."""

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    return Path(resources.files("qmemsim") / "data" / name)


def example_path(name: str) -> Path:
    return Path(resources.files("qmemsim") / "examples" / name)


def resolve(path_text: str) -> Path:
    """Resolve a user-supplied path, falling back to the bundled assets.

    `data/table1.csv` and `examples/foo.qmasm` work from any directory.
    """
    p = Path(path_text)
    if p.exists():
        return p
    parts = p.parts
    if len(parts) >= 2 and parts[-2] in ("data", "examples"):
        candidate = Path(resources.files("qmemsim") / parts[-2] / parts[-1])
        if candidate.exists():
            return candidate
    return p
