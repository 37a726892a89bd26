"""Symbol tables: the name resolution context for parsing and printing."""

from __future__ import annotations

from typing import Iterable, Iterator

from .expr import PI, Symbol


class SymbolTable:
    """Ordered collection of symbols with unique names.

    The reserved constant `pi` is always resolvable.
    """

    def __init__(self, symbols: Iterable[Symbol] = ()):
        self._symbols: list[Symbol] = []
        self._by_name: dict[str, Symbol] = {"pi": PI}
        for s in symbols:
            self.add(s)

    def add(self, s: Symbol) -> Symbol:
        if s.name in self._by_name and self._by_name[s.name] != s:
            raise ValueError(f"duplicate symbol name '{s.name}'")
        if s.name not in self._by_name:
            self._symbols.append(s)
            self._by_name[s.name] = s
        return s

    def merge(self, other: "SymbolTable") -> "SymbolTable":
        out = SymbolTable(self._symbols)
        for s in other:
            out.add(s)
        return out

    def lookup(self, name: str) -> Symbol | None:
        return self._by_name.get(name)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self._symbols)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def names(self) -> list[str]:
        return [s.name for s in self._symbols]
