"""
First-order terms shared by the engine, the handler packs and the compilers
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Mapping, Optional, Tuple, Union

_fresh_ids = itertools.count(1)


@dataclass(frozen=True)
class Variable:
    """Logic variable, identified by its fresh id"""
    name: str
    id: int

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Atom:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True)
class IntLiteral:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class StrLiteral:
    value: str

    def __str__(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Variable, Atom, IntLiteral, StrLiteral, Compound]
Bindings = Mapping[int, Term]

NIL = Atom("[]")
TRUE = Atom("true")
FAIL = Atom("fail")

# Binary functors printed infix, loosest first
INFIX = ("=", "!=", "<", "=<", ">", ">=", "in", "notin")


def fresh_var(name: str = "_") -> Variable:
    """Allocate a variable with a globally unique id"""
    return Variable(name, next(_fresh_ids))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(".", (item, result))
    return result


def deref(term: Term, bindings: Bindings) -> Term:
    """Follow variable bindings until an unbound variable or a non-variable"""
    while isinstance(term, Variable):
        bound = bindings.get(term.id)
        if bound is None:
            return term
        term = bound
    return term


def resolve(term: Term, bindings: Bindings) -> Term:
    """Fully dereference a term, rebuilding compounds"""
    term = deref(term, bindings)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(resolve(arg, bindings) for arg in term.args))
    return term


def is_cons(term: Term) -> bool:
    return isinstance(term, Compound) and term.functor == "." and len(term.args) == 2


def list_items(term: Term, bindings: Bindings) -> Optional[List[Term]]:
    """Elements of a proper list, or None when the term is not one"""
    items: List[Term] = []
    term = deref(term, bindings)
    while is_cons(term):
        items.append(term.args[0])
        term = deref(term.args[1], bindings)
    if term == NIL:
        return items
    return None


def variables(term: Term, bindings: Bindings) -> Iterator[Variable]:
    term = deref(term, bindings)
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from variables(arg, bindings)


def is_ground(term: Term, bindings: Bindings) -> bool:
    return next(variables(term, bindings), None) is None


def occurs(var: Variable, term: Term, bindings: Bindings) -> bool:
    return any(v.id == var.id for v in variables(term, bindings))


def identical(a: Term, b: Term, bindings: Bindings) -> bool:
    """Syntactic identity after dereferencing"""
    a = deref(a, bindings)
    b = deref(b, bindings)
    if isinstance(a, Compound) and isinstance(b, Compound):
        return (a.functor == b.functor and len(a.args) == len(b.args)
                and all(identical(x, y, bindings) for x, y in zip(a.args, b.args)))
    return a == b


def sort_key(term: Term) -> tuple:
    """Total order used for canonical store listings"""
    if isinstance(term, Variable):
        return (0, term.name, term.id)
    if isinstance(term, IntLiteral):
        return (1, term.value)
    if isinstance(term, StrLiteral):
        return (2, term.value)
    if isinstance(term, Atom):
        return (3, term.symbol)
    return (4, term.functor, len(term.args), tuple(sort_key(arg) for arg in term.args))


def _format_list(term: Term) -> str:
    items = []
    while is_cons(term):
        items.append(format_term(term.args[0]))
        term = term.args[1]
    if term == NIL:
        return "[" + ", ".join(items) + "]"
    return "[" + ", ".join(items) + " | " + format_term(term) + "]"


def format_term(term: Term, nested: bool = False) -> str:
    if isinstance(term, Compound):
        if is_cons(term):
            return _format_list(term)
        if term.functor in INFIX and len(term.args) == 2:
            text = f"{format_term(term.args[0], True)} {term.functor} {format_term(term.args[1], True)}"
            return f"({text})" if nested else text
        if term.functor == "@" and len(term.args) == 2:
            text = f"{format_term(term.args[0], True)} @ {format_term(term.args[1], True)}"
            return f"({text})" if nested else text
        inner = ", ".join(format_term(arg) for arg in term.args)
        return f"{_format_functor(term.functor)}({inner})"
    if isinstance(term, Atom):
        return _format_functor(term.symbol)
    return str(term)


def _format_functor(name: str) -> str:
    if name == "[]" or name.replace("_", "a").isalnum() and name[:1].islower():
        return name
    return "'" + name.replace("'", "\\'") + "'"


def format_resolved(term: Term, bindings: Bindings) -> str:
    """Print a store term with variables shown as Name_id"""
    return format_term(_label_variables(resolve(term, bindings)))


def _label_variables(term: Term) -> Term:
    if isinstance(term, Variable):
        return Variable(f"{term.name}_{term.id}", term.id)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_label_variables(arg) for arg in term.args))
    return term
