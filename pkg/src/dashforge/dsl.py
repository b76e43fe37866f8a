"""Textual KPI-definition language and the canonical JSON interchange document.

Example of a ``.dash`` file::

    dashboard "Node Exporter" {
      structure categorical
      datasource {
        uid "cc893e83"
        type "prometheus"
      }
      category "Reliability" {
        kpi "EstimatedErrorTime" unit "s" {
          query temporal "node_timex_estimated_error_seconds"
        }
      }
    }

Parsing is fail-fast and purely syntactic; run
:func:`dashforge.model.validate_model` on the result for semantic checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterator, Optional

from dashforge.errors import InvalidModel, ParseError, SchemaError
from dashforge.model import (
    DashboardModel,
    Datasource,
    Kpi,
    Query,
    QueryKind,
    StructureKind,
    Visualization,
    VisualizationType,
    dimension_attribute,
    validate_model,
)

FORMAT_VERSION = 1

_GROUP_WORDS = {"category": "category", "target": "target", "group": "group"}


@dataclass(frozen=True)
class SourceLocation:
    line: int
    column: int


@dataclass(frozen=True)
class _Token:
    kind: str  # "word", "string", "{", "}", "eof"
    value: str
    loc: SourceLocation

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "string":
            return '"' + self.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return self.value


def _tokenize(text: str) -> Iterator[_Token]:
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
        elif ch == "\r" and i + 1 < n and text[i + 1] == "\n":
            i += 1
        elif ch in " \t":
            i, col = i + 1, col + 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "{}":
            yield _Token(ch, ch, SourceLocation(line, col))
            i, col = i + 1, col + 1
        elif ch == '"':
            start = SourceLocation(line, col)
            i, col = i + 1, col + 1
            buf: list[str] = []
            while True:
                if i >= n or text[i] in "\r\n":
                    found = "end of input" if i >= n else "end of line"
                    raise ParseError(SourceLocation(line, col), "closing '\"'", found)
                c = text[i]
                if c == '"':
                    i, col = i + 1, col + 1
                    break
                if c == "\\":
                    nxt = text[i + 1] if i + 1 < n else ""
                    if nxt not in ('"', "\\"):
                        raise ParseError(SourceLocation(line, col), 'escape \\" or \\\\',
                                         "\\" + nxt if nxt else "end of input")
                    buf.append(nxt)
                    i, col = i + 2, col + 2
                    continue
                buf.append(c)
                i, col = i + 1, col + 1
            yield _Token("string", "".join(buf), start)
        elif ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] in "_-"):
                i += 1
            yield _Token("word", text[start:i], SourceLocation(line, col))
            col += i - start
        else:
            raise ParseError(SourceLocation(line, col), "keyword, string, \"{\" or \"}\"", repr(ch))
    yield _Token("eof", "", SourceLocation(line, col))


class _Parser:
    def __init__(self, text: str):
        self._tokens = _tokenize(text)
        self._tok = next(self._tokens)
        self._depth = 0

    # token helpers

    def _fail(self, expected: str) -> ParseError:
        # Running out of input inside a block is reported as the missing brace.
        if self._tok.kind == "eof" and self._depth > 0:
            expected = '"}"'
        return ParseError(self._tok.loc, expected, self._tok.describe())

    def _advance(self) -> _Token:
        tok = self._tok
        self._tok = next(self._tokens)
        return tok

    def _at(self, word: str) -> bool:
        return self._tok.kind == "word" and self._tok.value == word

    def _keyword(self, word: str) -> None:
        if not self._at(word):
            raise self._fail(f'"{word}"')
        self._advance()

    def _choice(self, words: tuple[str, ...]) -> str:
        if self._tok.kind == "word" and self._tok.value in words:
            return self._advance().value
        raise self._fail(" or ".join(f'"{w}"' for w in words))

    def _string(self) -> str:
        if self._tok.kind != "string":
            raise self._fail("string")
        return self._advance().value

    def _open(self) -> None:
        if self._tok.kind != "{":
            raise self._fail('"{"')
        self._advance()
        self._depth += 1

    def _close(self) -> None:
        if self._tok.kind != "}":
            raise self._fail('"}"')
        self._advance()
        self._depth -= 1

    # grammar

    def model(self) -> DashboardModel:
        self._keyword("dashboard")
        title = self._string()
        self._open()
        self._keyword("structure")
        structure = StructureKind(self._choice(tuple(s.value for s in StructureKind)))
        datasource = self._datasource()

        kpis: list[Kpi] = []
        while self._tok.kind == "word" and self._tok.value in _GROUP_WORDS:
            attr = _GROUP_WORDS[self._advance().value]
            label = self._string()
            self._open()
            while self._at("kpi"):
                kpis.append(self._kpi(enclosing=(attr, label)))
            self._close_block("kpi")
        while self._at("kpi"):
            kpis.append(self._kpi())

        visualizations: list[Visualization] = []
        while self._at("visualization"):
            visualizations.append(self._visualization(structure, kpis))
        if self._tok.kind != "}":
            raise self._fail(self._expected_after(visualizations, kpis))
        self._close()
        if self._tok.kind != "eof":
            raise self._fail("end of input")
        return DashboardModel(title, structure, datasource, tuple(kpis), tuple(visualizations))

    @staticmethod
    def _expected_after(visualizations: list, kpis: list) -> str:
        if visualizations:
            return '"visualization" or "}"'
        if kpis:
            return '"kpi", "visualization" or "}"'
        return '"category", "target", "group", "kpi", "visualization" or "}"'

    def _close_block(self, inner: str) -> None:
        if self._tok.kind != "}":
            raise self._fail(f'"{inner}" or "}}"')
        self._close()

    def _datasource(self) -> Datasource:
        self._keyword("datasource")
        self._open()
        self._keyword("uid")
        uid = self._string()
        self._keyword("type")
        kind = self._string()
        self._close()
        return Datasource(uid, kind)

    def _kpi(self, enclosing: Optional[tuple[str, str]] = None) -> Kpi:
        self._keyword("kpi")
        name = self._string()
        self._keyword("unit")
        unit = self._string()
        dims: dict[str, str] = {}
        if enclosing is not None:
            dims[enclosing[0]] = enclosing[1]
        while self._tok.kind == "word" and self._tok.value in _GROUP_WORDS:
            attr = _GROUP_WORDS[self._tok.value]
            if attr in dims:
                raise ParseError(self._tok.loc, f"at most one {attr} per KPI", self._tok.value)
            self._advance()
            dims[attr] = self._string()
        if self._tok.kind != "{":
            raise self._fail('"category", "target", "group" or "{"')
        self._open()
        queries = [self._query()]
        while self._at("query"):
            queries.append(self._query())
        self._close_block("query")
        return Kpi(name=name, unit=unit, queries=tuple(queries), **dims)

    def _query(self) -> Query:
        self._keyword("query")
        kind = QueryKind(self._choice(tuple(k.value for k in QueryKind)))
        return Query(self._string(), kind)

    def _visualization(self, structure: StructureKind, kpis: list[Kpi]) -> Visualization:
        self._keyword("visualization")
        vis_id = self._string()
        self._keyword("type")
        vtype = VisualizationType(self._choice(tuple(v.value for v in VisualizationType)))
        manual = True
        if self._at("generated"):
            self._advance()
            manual = False
        if self._tok.kind != "{":
            raise self._fail('"generated" or "{"' if manual else '"{"')
        self._open()
        self._keyword("kpis")
        names = [self._string()]
        while self._tok.kind == "string":
            names.append(self._advance().value)
        self._close_block_strings()
        return Visualization(vis_id, vtype, tuple(names), _derive_group_key(structure, kpis, names[0]), manual)

    def _close_block_strings(self) -> None:
        if self._tok.kind != "}":
            raise self._fail('string or "}"')
        self._close()


def _derive_group_key(structure: StructureKind, kpis: list[Kpi], first: str) -> str:
    attr = dimension_attribute(structure)
    for kpi in kpis:
        if kpi.name == first:
            return getattr(kpi, attr) or ""
    return ""


def parse_model(text: str | bytes) -> DashboardModel:
    """Parse ``.dash`` source into a :class:`DashboardModel`.

    Visualization blocks become manual visualizations unless tagged
    ``generated``; their group key is the active group label of their first
    KPI. Raises :class:`ParseError` on the first syntax error.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text[: exc.start]).decode("utf-8")
            line = prefix.count("\n") + 1
            col = len(prefix) - (prefix.rfind("\n") + 1) + 1
            raise ParseError(SourceLocation(line, col), "UTF-8 text",
                             f"byte 0x{text[exc.start]:02x}") from None
    return _Parser(text).model()


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _require_valid(model: DashboardModel) -> None:
    report = validate_model(model)
    if report.errors:
        raise InvalidModel(report)


def serialize_model(model: DashboardModel) -> str:
    """Render *model* as canonical ``.dash`` text.

    KPIs are nested in blocks of the dashboard's active grouping dimension;
    consecutive KPIs sharing a label share a block so declaration order
    survives a re-parse. Other dimensions are written inline.
    """
    _require_valid(model)
    active = dimension_attribute(model.structure)
    lines = [
        f"dashboard {_quote(model.title)} {{",
        f"  structure {StructureKind(model.structure).value}",
        "  datasource {",
        f"    uid {_quote(model.datasource.uid)}",
        f"    type {_quote(model.datasource.kind)}",
        "  }",
    ]
    block: Optional[str] = None
    for kpi in model.kpis:
        label = getattr(kpi, active)
        if label != block:
            if block is not None:
                lines.append("  }")
            lines.append(f"  {active} {_quote(label)} {{")
            block = label
        header = f"    kpi {_quote(kpi.name)} unit {_quote(kpi.unit)}"
        for attr in ("category", "target", "group"):
            value = getattr(kpi, attr)
            if attr != active and value is not None:
                header += f" {attr} {_quote(value)}"
        lines.append(header + " {")
        for query in kpi.queries:
            lines.append(f"      query {QueryKind(query.kind).value} {_quote(query.body)}")
        lines.append("    }")
    if block is not None:
        lines.append("  }")
    for vis in model.visualizations:
        flag = "" if vis.manual else " generated"
        names = " ".join(_quote(name) for name in vis.kpi_names)
        lines.append(
            f"  visualization {_quote(vis.id)} type {VisualizationType(vis.vtype).value}"
            f"{flag} {{ kpis {names} }}"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# canonical interchange document


def to_document(model: DashboardModel) -> dict[str, Any]:
    kpis = []
    for kpi in model.kpis:
        obj: dict[str, Any] = {"name": kpi.name, "unit": kpi.unit}
        for attr in ("category", "target", "group"):
            if getattr(kpi, attr) is not None:
                obj[attr] = getattr(kpi, attr)
        obj["queries"] = [{"kind": QueryKind(q.kind).value, "body": q.body} for q in kpi.queries]
        kpis.append(obj)
    return {
        "formatVersion": FORMAT_VERSION,
        "title": model.title,
        "structure": StructureKind(model.structure).value,
        "datasource": {"uid": model.datasource.uid, "type": model.datasource.kind},
        "kpis": kpis,
        "visualizations": [
            {
                "id": vis.id,
                "type": VisualizationType(vis.vtype).value,
                "kpis": list(vis.kpi_names),
                "groupKey": vis.group_key,
                "manual": vis.manual,
            }
            for vis in model.visualizations
        ],
    }


def dump_canonical(model: DashboardModel) -> bytes:
    """Serialize a valid model to the canonical JSON interchange document."""
    _require_valid(model)
    text = json.dumps(to_document(model), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def _expect(value: Any, kind: type, path: str, what: str) -> Any:
    # bool is an int subclass; keep them apart
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise SchemaError(path, f"expected {what}")
    return value


def _object(value: Any, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    _expect(value, dict, path or "$", "an object")
    for key in value:
        if key not in required and key not in optional:
            raise SchemaError(f"{path}.{key}" if path else key, "unknown key")
    for key in required:
        if key not in value:
            raise SchemaError(f"{path}.{key}" if path else key, "missing required key")
    return value


def _enum(enum_type: type, value: Any, path: str) -> Any:
    _expect(value, str, path, "a string")
    try:
        return enum_type(value)
    except ValueError:
        allowed = ", ".join(repr(m.value) for m in enum_type)
        raise SchemaError(path, f"{value!r} is not one of {allowed}") from None


def from_document(doc: Any) -> DashboardModel:
    _object(doc, "", ("title", "structure", "datasource", "kpis", "visualizations"), ("formatVersion",))
    if "formatVersion" in doc and doc["formatVersion"] != FORMAT_VERSION:
        raise SchemaError("formatVersion", f"unsupported format version {doc['formatVersion']!r}")
    title = _expect(doc["title"], str, "title", "a string")
    structure = _enum(StructureKind, doc["structure"], "structure")
    ds = _object(doc["datasource"], "datasource", ("uid", "type"))
    datasource = Datasource(
        _expect(ds["uid"], str, "datasource.uid", "a string"),
        _expect(ds["type"], str, "datasource.type", "a string"),
    )

    kpis = []
    for i, raw in enumerate(_expect(doc["kpis"], list, "kpis", "an array")):
        path = f"kpis[{i}]"
        obj = _object(raw, path, ("name", "unit", "queries"), ("category", "target", "group"))
        dims = {
            attr: _expect(obj[attr], str, f"{path}.{attr}", "a string")
            for attr in ("category", "target", "group")
            if attr in obj
        }
        raw_queries = _expect(obj["queries"], list, f"{path}.queries", "an array")
        if not raw_queries:
            raise SchemaError(f"{path}.queries", "expected at least one query")
        queries = []
        for k, rq in enumerate(raw_queries):
            qpath = f"{path}.queries[{k}]"
            q = _object(rq, qpath, ("kind", "body"))
            queries.append(Query(_expect(q["body"], str, f"{qpath}.body", "a string"),
                                 _enum(QueryKind, q["kind"], f"{qpath}.kind")))
        kpis.append(Kpi(
            name=_expect(obj["name"], str, f"{path}.name", "a string"),
            unit=_expect(obj["unit"], str, f"{path}.unit", "a string"),
            queries=tuple(queries),
            **dims,
        ))

    visualizations = []
    for j, raw in enumerate(_expect(doc["visualizations"], list, "visualizations", "an array")):
        path = f"visualizations[{j}]"
        obj = _object(raw, path, ("id", "type", "kpis", "groupKey", "manual"))
        names = _expect(obj["kpis"], list, f"{path}.kpis", "an array")
        if not names:
            raise SchemaError(f"{path}.kpis", "expected at least one KPI name")
        visualizations.append(Visualization(
            id=_expect(obj["id"], str, f"{path}.id", "a string"),
            vtype=_enum(VisualizationType, obj["type"], f"{path}.type"),
            kpi_names=tuple(_expect(n, str, f"{path}.kpis[{k}]", "a string") for k, n in enumerate(names)),
            group_key=_expect(obj["groupKey"], str, f"{path}.groupKey", "a string"),
            manual=_expect(obj["manual"], bool, f"{path}.manual", "a boolean"),
        ))

    return DashboardModel(title, structure, datasource, tuple(kpis), tuple(visualizations))


def load_canonical(document: bytes | str) -> DashboardModel:
    """Read a canonical interchange document.

    Raises:
        SchemaError: the document is not valid JSON or does not match the
            interchange schema; ``path`` names the offending member.
    """
    try:
        doc = json.loads(document)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError("$", f"not a JSON document: {exc}") from None
    return from_document(doc)
