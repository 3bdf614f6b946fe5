"""Small named graphs bundled with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .graph import Graph, load_graph



def _root():
    return resources.files("nbspec") / "corpus"


def names() -> list[str]:
    files = _root().iterdir()
    return sorted(f.name[: -len(".edges")] for f in files if f.name.endswith(".edges"))


def text(name: str) -> str:
    ref = _root() / f"{name}.edges"
    if not ref.is_file():
        raise KeyError(f"no bundled graph named {name!r}; known: {', '.join(names())}")
    return ref.read_text()


def load(name: str) -> Graph:
    return load_graph(text(name))


def resolve(source: str) -> Graph:
    """A path to an edge-list file, or the name of a bundled graph."""
    p = Path(source)
    if p.is_file():
        return load_graph(p.read_text())
    stem = p.name[: -len(".edges")] if p.name.endswith(".edges") else p.name
    if stem in names():
        return load(stem)
    raise FileNotFoundError(f"{source}: no such file or bundled graph")


def all_graphs() -> dict[str, Graph]:
    return {n: load(n) for n in names()}
