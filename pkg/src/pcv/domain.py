"""
Finite event domains
The `.dom` reader, DomainSpec and ground event enumeration
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import pyparsing as pp
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import DomainError
from .expressions import literal_term
from .terms import Term, make_list

logger = logging.getLogger(__name__)

Value = Union[int, str]

UNIVERSE_KEYS = ("actors", "actions", "targets", "params")


class DomainSpec(BaseModel):
    """Named finite universes; all events are the product of them"""
    model_config = ConfigDict(frozen=True)

    name: str = "domain"
    actors: List[Value]
    actions: List[Value]
    targets: List[Value]
    params: List[Value] = []
    pars: int = 0
    horizon: int
    sets: Dict[str, List[Value]] = {}
    data: Dict[str, List[Value]] = {}

    @model_validator(mode="after")
    def check_universes(self) -> "DomainSpec":
        for key in ("actors", "actions", "targets"):
            if not getattr(self, key):
                raise ValueError(f"{key} universe is empty")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.pars < 0:
            raise ValueError("pars must be non-negative")
        if self.pars and not self.params:
            raise ValueError("params universe is empty but events carry parameters")
        for name, values in self.data.items():
            if not values:
                raise ValueError(f"data universe {name} is empty")
        return self

    @property
    def times(self) -> List[int]:
        return list(range(1, self.horizon + 1))

    def event_count(self) -> int:
        return (len(self.actors) * len(self.actions) * len(self.targets)
                * len(self.params) ** self.pars * self.horizon)

    def set_term(self, name: str) -> Optional[Term]:
        """Defined set as a list term, None when the domain leaves it open"""
        if name not in self.sets:
            return None
        return values_term(self.sets[name])

    def universe_term(self, key: str) -> Term:
        if key == "times":
            return values_term(self.times)
        return values_term(getattr(self, key))


def values_term(values) -> Term:
    return make_list([literal_term(v) for v in values])


@dataclass(frozen=True)
class GroundEvent:
    actor: Value
    action: Value
    target: Value
    pars: Tuple[Value, ...]
    time: int

    def par(self, index: int) -> Value:
        return self.pars[index - 1]

    def __str__(self) -> str:
        pars = ", ".join(_show(p) for p in self.pars)
        return f"event({_show(self.actor)}, {_show(self.action)}, {_show(self.target)}, [{pars}], {self.time})"


def _show(value: Value) -> str:
    return str(value) if isinstance(value, int) else f'"{value}"'


def enumerate_events(domain: DomainSpec) -> Iterator[GroundEvent]:
    """Every event of the domain, in declaration order"""
    for actor, action, target in itertools.product(domain.actors, domain.actions, domain.targets):
        for pars in itertools.product(domain.params, repeat=domain.pars):
            for time in domain.times:
                yield GroundEvent(actor, action, target, tuple(pars), time)


# ---------------------------------------------------------------------------
# .dom reader


def _line_grammar() -> pp.ParserElement:
    ident = pp.Regex(r"[A-Za-z_][A-Za-z0-9_\-]*")
    value = (pp.QuotedString('"', esc_char="\\")
             | pp.Regex(r"-?\d+").set_parse_action(lambda t: int(t[0]))
             | ident)
    values = pp.Group(pp.Optional(value + pp.ZeroOrMore(pp.Suppress(",") + value)))
    named = (pp.Keyword("set") | pp.Keyword("data")) + ident + pp.Suppress("=") + values
    plain = ident + pp.Suppress("=") + values
    line = named | plain
    line.ignore(pp.Regex(r"#.*"))
    return line


_LINE = _line_grammar()


def parse_domain(text: str, path: Optional[str] = None) -> DomainSpec:
    """Read a domain description, one declaration per line"""
    fields: Dict[str, object] = {"sets": {}, "data": {}}
    if path:
        fields["name"] = Path(path).stem
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = _LINE.parse_string(line, parse_all=True)
        except pp.ParseBaseException as err:
            raise DomainError(f"invalid declaration: {err.msg}", path, number, err.col) from err
        if tokens[0] in ("set", "data"):
            kind, name, values = tokens[0], tokens[1], list(tokens[2])
            table = fields["sets" if kind == "set" else "data"]
            if name in table:
                raise DomainError(f"{kind} {name} declared twice", path, number)
            table[name] = values
            continue
        key, values = tokens[0], list(tokens[1])
        if key in UNIVERSE_KEYS:
            fields[key] = values
        elif key in ("pars", "horizon"):
            if len(values) != 1 or not isinstance(values[0], int):
                raise DomainError(f"{key} needs one integer", path, number)
            fields[key] = values[0]
        elif key == "name":
            fields["name"] = str(values[0]) if values else fields.get("name", "domain")
        else:
            raise DomainError(f"unknown declaration {key}", path, number)
    try:
        domain = DomainSpec(**fields)
    except ValidationError as err:
        problems = "; ".join(e["msg"] for e in err.errors())
        raise DomainError(f"invalid domain: {problems}", path) from err
    logger.info(f"Loaded domain {domain.name} with {domain.event_count()} events")
    return domain


def load_domain(path: Union[str, Path]) -> DomainSpec:
    path = Path(path)
    return parse_domain(path.read_text(encoding="utf-8"), str(path))
