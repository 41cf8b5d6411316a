"""Line-oriented text format for threshold automata and specifications.

    ta Voting
    params n t f
    resilience n > 3*t && t >= f
    size n - f                      # optional, defaults to n - f
    thresholds t                    # optional extra interval boundaries
    shared x0 x1
    locations v0* v1* wait d0 d1    # '*' marks initial locations
    rule r0: v0 -> wait when true update x0 += 1
    rule r2: wait -> d0 when x0 >= n - t
    rule r4: d0 -> v0 when x1 < t update x0 -= 1 reset x1

Guards only admit ``x >= term`` and ``x < term``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .model import (
    AtomKind,
    Comparison,
    Conjunction,
    Coverability,
    Disjunction,
    Formula,
    GeneralCoverability,
    Guard,
    GuardAtom,
    LinearTerm,
    Reachability,
    Rule,
    Specification,
    ThresholdAutomaton,
    TRUE_FORMULA,
)


class FormatError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected: Sequence[str] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        where = f"line {line}, column {column}"
        hint = f" (expected {' or '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}: {message}{hint}")


class TASyntaxError(FormatError):
    pass


class TASemanticError(FormatError):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_.']*)
  | (?P<op>->|&&|\|\||>=|<=|==|!=|\+=|-=|[<>=+\-*/(),:;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num | id | op | end
    text: str
    line: int
    column: int


def tokenize(line: str, lineno: int) -> list[Token]:
    code = line.split("#", 1)[0]
    pos, out = 0, []
    while pos < len(code):
        m = _TOKEN.match(code, pos)
        if not m:
            raise TASyntaxError(f"unexpected character {code[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), lineno, pos + 1))
        pos = m.end()
    out.append(Token("end", "", lineno, len(code.rstrip()) + 1))
    return out


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        t = self.peek
        return t.kind in ("op", "id") and t.text in texts

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def fail(self, expected: Sequence[str], message: str | None = None) -> TASyntaxError:
        t = self.peek
        found = "end of line" if t.kind == "end" else repr(t.text)
        return TASyntaxError(message or f"unexpected {found}", t.line, t.column, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail([repr(text)])
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        if self.peek.kind != "id":
            raise self.fail([what])
        return self.next()

    def end(self) -> None:
        if self.peek.kind != "end":
            raise self.fail(["end of line"])


# -- linear terms and formulas ----------------------------------------------------


def _parse_linear(cur: _Cursor) -> tuple[LinearTerm, list[Token]]:
    """Sum of products; products may have at most one non-constant factor."""
    names: list[Token] = []
    sign = 1
    if cur.at("-"):
        cur.next()
        sign = -1
    total = _parse_product(cur, names).scale(sign)
    while cur.at("+", "-"):
        op = cur.next().text
        term = _parse_product(cur, names)
        total = total + term if op == "+" else total - term
    return total, names


def _parse_product(cur: _Cursor, names: list[Token]) -> LinearTerm:
    start = cur.peek
    value = _parse_factor(cur, names)
    while cur.at("*", "/"):
        op = cur.next().text
        rhs = _parse_factor(cur, names)
        if op == "*":
            if value.is_constant:
                value = rhs.scale(value.constant)
            elif rhs.is_constant:
                value = value.scale(rhs.constant)
            else:
                raise TASyntaxError("product of two parameters is not linear", start.line, start.column)
        else:
            if not rhs.is_constant or rhs.constant == 0:
                raise TASyntaxError("division only by a nonzero constant", start.line, start.column)
            value = value.scale(1 / rhs.constant)
    return value


def _parse_factor(cur: _Cursor, names: list[Token]) -> LinearTerm:
    t = cur.peek
    if t.kind == "num":
        cur.next()
        return LinearTerm.const(int(t.text))
    if t.kind == "id" and t.text not in _KEYWORDS:
        cur.next()
        names.append(t)
        return LinearTerm.param(t.text)
    if cur.at("("):
        cur.next()
        term, inner = _parse_linear(cur)
        names.extend(inner)
        cur.expect(")")
        return term
    if cur.at("-"):
        cur.next()
        return -_parse_factor(cur, names)
    raise cur.fail(["number", "parameter", "'('"])


_CMP = ("<", "<=", ">", ">=", "==", "!=", "=")


def _parse_formula(cur: _Cursor, names: list[Token]) -> Formula:
    items = [_parse_conj(cur, names)]
    while cur.at("||"):
        cur.next()
        items.append(_parse_conj(cur, names))
    return items[0] if len(items) == 1 else Disjunction(tuple(items))


def _parse_conj(cur: _Cursor, names: list[Token]) -> Formula:
    items = [_parse_prim(cur, names)]
    while cur.at("&&"):
        cur.next()
        items.append(_parse_prim(cur, names))
    return items[0] if len(items) == 1 else Conjunction(tuple(items))


def _parse_prim(cur: _Cursor, names: list[Token]) -> Formula:
    if cur.at("true"):
        cur.next()
        return TRUE_FORMULA
    if cur.at("("):
        # either a parenthesized formula or a comparison starting with a parenthesized term
        save, saved_names = cur.i, len(names)
        try:
            cur.next()
            inner = _parse_formula(cur, names)
            cur.expect(")")
            if not cur.at(*_CMP, "+", "-", "*", "/"):
                return inner
        except TASyntaxError:
            pass
        cur.i = save
        del names[saved_names:]
    lhs, n1 = _parse_linear(cur)
    if not cur.at(*_CMP):
        raise cur.fail(["comparison operator"])
    op = cur.next().text
    rhs, n2 = _parse_linear(cur)
    names.extend(n1 + n2)
    return Comparison(lhs, "==" if op == "=" else op, rhs)


# -- automaton ----------------------------------------------------------------------


_KEYWORDS = {"ta", "params", "resilience", "size", "thresholds", "shared", "locations", "rule",
             "when", "update", "reset", "true"}


@dataclass
class _RawRule:
    id: Token
    source: Token
    target: Token
    atoms: list[tuple[Token, str, LinearTerm, list[Token]]]
    updates: list[tuple[Token, int]]
    resets: list[Token]


def _parse_rule(cur: _Cursor) -> _RawRule:
    rid = cur.ident("rule name")
    cur.expect(":")
    src = cur.ident("location")
    cur.expect("->")
    dst = cur.ident("location")
    cur.expect("when")
    atoms = []
    if cur.at("true"):
        cur.next()
    else:
        while True:
            var = cur.ident("shared variable")
            if not cur.at(">=", "<"):
                raise cur.fail(["'>='", "'<'"], f"guard operator {cur.peek.text!r} not allowed")
            op = cur.next().text
            term, names = _parse_linear(cur)
            atoms.append((var, op, term, names))
            if not cur.at("&&"):
                break
            cur.next()
    updates: list[tuple[Token, int]] = []
    resets: list[Token] = []
    if cur.at("update"):
        cur.next()
        while True:
            var = cur.ident("shared variable")
            if not cur.at("+=", "-="):
                raise cur.fail(["'+='", "'-='"])
            sign = 1 if cur.next().text == "+=" else -1
            if cur.peek.kind != "num":
                raise cur.fail(["number"])
            updates.append((var, sign * int(cur.next().text)))
            if not cur.at(","):
                break
            cur.next()
    if cur.at("reset"):
        cur.next()
        while True:
            resets.append(cur.ident("shared variable"))
            if not cur.at(","):
                break
            cur.next()
    cur.end()
    return _RawRule(rid, src, dst, atoms, updates, resets)


def _names(cur: _Cursor, what: str) -> list[Token]:
    out = []
    while cur.peek.kind == "id":
        out.append(cur.next())
        if cur.at(","):
            cur.next()
    cur.end()
    return out


def parse_ta(text: str) -> ThresholdAutomaton:
    """Parse an automaton; raises TASyntaxError / TASemanticError with positions."""
    header: Token | None = None
    params: list[Token] | None = None
    shared: list[Token] | None = None
    locations: list[tuple[Token, bool]] | None = None
    resilience: tuple[Formula, list[Token]] = (TRUE_FORMULA, [])
    size: tuple[LinearTerm, list[Token]] | None = None
    extra: list[tuple[LinearTerm, list[Token]]] = []
    rules: list[_RawRule] = []
    seen: dict[str, Token] = {}
    lines = text.splitlines()

    for lineno, line in enumerate(lines, 1):
        toks = tokenize(line, lineno)
        if toks[0].kind == "end":
            continue
        cur = _Cursor(toks)
        kw = cur.next()
        if kw.kind != "id" or kw.text not in _KEYWORDS - {"when", "update", "reset", "true"}:
            raise TASyntaxError(f"unknown declaration {kw.text!r}", kw.line, kw.column,
                                ["ta", "params", "resilience", "size", "thresholds", "shared",
                                 "locations", "rule"])
        if kw.text != "rule":
            if kw.text in seen:
                raise TASemanticError(f"{kw.text!r} declared twice", kw.line, kw.column)
            seen[kw.text] = kw
        if kw.text == "ta":
            header = cur.ident("automaton name")
            cur.end()
        elif kw.text == "params":
            params = _names(cur, "parameter")
        elif kw.text == "shared":
            shared = _names(cur, "shared variable")
        elif kw.text == "locations":
            locations = []
            while cur.peek.kind == "id":
                name = cur.next()
                star = cur.at("*")
                if star:
                    cur.next()
                locations.append((name, star))
                if cur.at(","):
                    cur.next()
            cur.end()
        elif kw.text == "resilience":
            names: list[Token] = []
            formula = _parse_formula(cur, names)
            cur.end()
            resilience = (formula, names)
        elif kw.text == "size":
            size = _parse_linear(cur)
            cur.end()
        elif kw.text == "thresholds":
            while True:
                extra.append(_parse_linear(cur))
                if not cur.at(","):
                    break
                cur.next()
            cur.end()
        else:
            rules.append(_parse_rule(cur))

    last = len(lines) or 1
    if header is None:
        raise TASyntaxError("missing 'ta <name>' declaration", 1 if not seen else last, 1, ["ta"])
    if locations is None:
        raise TASyntaxError("missing 'locations' declaration", last, 1, ["locations"])
    params = params or []
    shared = shared or []

    def unique(tokens: Sequence[Token], what: str) -> dict[str, int]:
        index: dict[str, int] = {}
        for t in tokens:
            if t.text in index:
                raise TASemanticError(f"duplicate {what} {t.text!r}", t.line, t.column)
            index[t.text] = len(index)
        return index

    p_index = unique(params, "parameter")
    s_index = unique(shared, "shared variable")
    l_index = unique([t for t, _ in locations], "location")
    unique([r.id for r in rules], "rule")

    def check_params(tokens: Sequence[Token]) -> None:
        for t in tokens:
            if t.text not in p_index:
                raise TASemanticError(f"undeclared parameter {t.text!r}", t.line, t.column)

    def lookup(index: dict[str, int], t: Token, what: str) -> int:
        if t.text not in index:
            raise TASemanticError(f"undeclared {what} {t.text!r}", t.line, t.column)
        return index[t.text]

    check_params(resilience[1])
    if size is None:
        if "n" not in p_index or "f" not in p_index:
            t = seen.get("params", header)
            raise TASemanticError("no 'size' declared and the default n - f needs parameters n and f",
                                  t.line, t.column)
        size_term = LinearTerm.of(0, n=1, f=-1)
    else:
        check_params(size[1])
        size_term = size[0]

    for _, names in extra:
        check_params(names)

    initial = frozenset(i for i, (_, star) in enumerate(locations) if star)
    if not initial:
        t = seen["locations"]
        raise TASemanticError("no initial location (mark one with '*')", t.line, t.column)

    built = []
    for raw in rules:
        atoms = []
        for var, op, term, names in raw.atoms:
            check_params(names)
            kind = AtomKind.LOWER if op == ">=" else AtomKind.UPPER
            atoms.append(GuardAtom(kind, term, lookup(s_index, var, "shared variable")))
        update = [0] * len(shared)
        for var, delta in raw.updates:
            update[lookup(s_index, var, "shared variable")] += delta
        resets = frozenset(lookup(s_index, t, "shared variable") for t in raw.resets)
        built.append(Rule(raw.id.text, lookup(l_index, raw.source, "location"),
                          lookup(l_index, raw.target, "location"), Guard(tuple(atoms)),
                          tuple(update), resets))

    return ThresholdAutomaton(
        name=header.text,
        locations=tuple(t.text for t, _ in locations),
        initial=initial,
        shared=tuple(t.text for t in shared),
        parameters=tuple(t.text for t in params),
        resilience=resilience[0],
        size=size_term,
        rules=tuple(built),
        extra_thresholds=tuple(term for term, _ in extra),
    )


# -- printing ------------------------------------------------------------------------


def format_formula(formula: Formula, order: Sequence[str] | None = None) -> str:
    def child(f: Formula) -> str:
        s = format_formula(f, order)
        return s if isinstance(f, Comparison) else f"({s})"

    if isinstance(formula, Comparison):
        return f"{formula.lhs.render(order)} {formula.op} {formula.rhs.render(order)}"
    if isinstance(formula, Conjunction):
        return " && ".join(child(f) for f in formula.items) if formula.items else "true"
    return " || ".join(child(f) for f in formula.items)


def format_guard(ta: ThresholdAutomaton, guard: Guard) -> str:
    if guard.is_true:
        return "true"
    ops = {AtomKind.LOWER: ">=", AtomKind.UPPER: "<"}
    return " && ".join(f"{ta.shared[a.variable]} {ops[a.kind]} {a.threshold.render(ta.parameters)}"
                       for a in guard)


def format_rule(ta: ThresholdAutomaton, r: Rule) -> str:
    line = f"rule {r.id}: {ta.locations[r.source]} -> {ta.locations[r.target]} when {format_guard(ta, r.guard)}"
    ups = [f"{ta.shared[j]} {'+=' if u > 0 else '-='} {abs(u)}" for j, u in enumerate(r.update) if u]
    if ups:
        line += " update " + ", ".join(ups)
    if r.resets:
        line += " reset " + ", ".join(ta.shared[j] for j in sorted(r.resets))
    return line


def print_ta(ta: ThresholdAutomaton) -> str:
    lines = [f"ta {ta.name}"]
    if ta.parameters:
        lines.append("params " + " ".join(ta.parameters))
    lines.append("resilience " + format_formula(ta.resilience, ta.parameters))
    lines.append("size " + ta.size.render(ta.parameters))
    if ta.extra_thresholds:
        lines.append("thresholds " + ", ".join(t.render(ta.parameters) for t in ta.extra_thresholds))
    if ta.shared:
        lines.append("shared " + " ".join(ta.shared))
    lines.append("locations " + " ".join(
        name + ("*" if i in ta.initial else "") for i, name in enumerate(ta.locations)))
    lines += [format_rule(ta, r) for r in ta.rules]
    return "\n".join(lines) + "\n"


# -- specifications --------------------------------------------------------------------


def parse_spec(text: str, ta: ThresholdAutomaton) -> Specification:
    """``cover d0>=1, d1>=1`` | ``cover-locs d0 d1`` | ``reach d0>0; v0=0, wait=0``.

    ``cover`` accepts several vectors separated by ``||``; ``reach`` accepts
    ``others=0`` for every location not mentioned as positive.
    """
    cur = _Cursor(tokenize(text.strip().replace("\n", " "), 1))
    kw = cur.ident("spec kind")
    if kw.text == "cover" and cur.at("-"):
        cur.next()
        tail = cur.ident("'locs'")
        if tail.text != "locs":
            raise TASyntaxError(f"unknown spec kind 'cover-{tail.text}'", kw.line, kw.column)
        kind = "cover-locs"
    elif kw.text in ("cover", "reach"):
        kind = kw.text
    else:
        raise TASyntaxError(f"unknown spec kind {kw.text!r}", kw.line, kw.column,
                            ["cover", "cover-locs", "reach"])

    def location(t: Token) -> int:
        if t.text not in ta.location_index:
            raise TASemanticError(f"unknown location {t.text!r}", t.line, t.column)
        return ta.location_index[t.text]

    def number() -> int:
        if cur.peek.kind != "num":
            raise cur.fail(["number"])
        return int(cur.next().text)

    separators = (",", ";", "&&")
    if kind == "cover-locs":
        locs = set()
        while cur.peek.kind == "id":
            locs.add(location(cur.next()))
            if cur.at(*separators):
                cur.next()
        cur.end()
        if not locs:
            raise cur.fail(["location"])
        return Coverability(frozenset(locs))

    if kind == "cover":
        basis = []
        vec = [0] * len(ta.locations)
        while True:
            loc = location(cur.ident("location"))
            if cur.at(">="):
                cur.next()
                bound = number()
            elif cur.at(">"):
                cur.next()
                bound = number() + 1
            else:
                raise cur.fail(["'>='", "'>'"])
            vec[loc] = max(vec[loc], bound)
            if cur.at(*separators):
                cur.next()
            elif cur.at("||"):
                cur.next()
                basis.append(tuple(vec))
                vec = [0] * len(ta.locations)
            else:
                break
        cur.end()
        basis.append(tuple(vec))
        return GeneralCoverability(tuple(basis))

    zero: set[int] = set()
    positive: set[int] = set()
    others = False
    while True:
        t = cur.ident("location")
        if cur.at(">"):
            cur.next()
            if number() != 0:
                raise TASyntaxError("reachability only supports 'loc > 0'", t.line, t.column)
            positive.add(location(t))
        elif cur.at(">="):
            cur.next()
            if number() != 1:
                raise TASyntaxError("reachability only supports 'loc >= 1'", t.line, t.column)
            positive.add(location(t))
        elif cur.at("=", "=="):
            cur.next()
            if number() != 0:
                raise TASyntaxError("reachability only supports 'loc = 0'", t.line, t.column)
            if t.text == "others" and "others" not in ta.location_index:
                others = True
            else:
                loc = location(t)
                if loc in positive:
                    raise TASemanticError(f"location {t.text!r} required both zero and positive",
                                          t.line, t.column)
                zero.add(loc)
        else:
            raise cur.fail(["'>'", "'='"])
        if loc_conflict := zero & positive:
            name = ta.locations[min(loc_conflict)]
            raise TASemanticError(f"location {name!r} required both zero and positive", t.line, t.column)
        if cur.at(*separators):
            cur.next()
        else:
            break
    cur.end()
    if others:
        zero |= set(range(len(ta.locations))) - positive
    return Reachability(frozenset(zero), frozenset(positive))


def format_spec(spec: Specification, ta: ThresholdAutomaton) -> str:
    if isinstance(spec, GeneralCoverability):
        vecs = [", ".join(f"{ta.locations[i]}>={k}" for i, k in enumerate(v) if k) or "" for v in spec.basis]
        return "cover " + " || ".join(vecs)
    if isinstance(spec, Coverability):
        return "cover-locs " + " ".join(ta.locations[i] for i in sorted(spec.positive))
    pos = ", ".join(f"{ta.locations[i]}>0" for i in sorted(spec.positive))
    zero = ", ".join(f"{ta.locations[i]}=0" for i in sorted(spec.zero))
    return f"reach {pos}; {zero}" if zero else f"reach {pos}"


def load_ta(path: str) -> ThresholdAutomaton:
    with open(path, encoding="utf-8") as fh:
        return parse_ta(fh.read())
