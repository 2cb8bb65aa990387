"""Bundled HAC model documents used by the simulation harness."""

from __future__ import annotations

from importlib import resources

from .. import hac
from ..errors import DataError
from ..hac import HacTree


def available() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".json"))


def load_model(name: str) -> HacTree:
    """Load a bundled model by name, with or without the ``.json`` suffix."""
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in available():
        raise DataError(f"no model file or bundled model named {name!r}; "
                        f"bundled: {', '.join(available())}")
    return hac.loads(resources.files(__name__).joinpath(stem + ".json").read_text("utf-8"))
