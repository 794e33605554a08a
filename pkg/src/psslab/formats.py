"""Text formats for PSS models and homomorphism candidates.

PSS document (one statement per line, ``#`` starts a comment)::

    pss "exampleD"
    field p=2
    vertices 3
    edges { 1-2, 1-3, 2-3 }
    local 1 { f11: 1 ; f12: x1 + 1 }
    local 2 { f21: x1*x2 }
    local 3 { f31: x1*x2 ; f32: x1*x2 + x3 }
    schedule a1 = (3 2 1)
    schedule a2 = (1 2 3)
    update f1 = a1[f11 f21 f31] prob 0.18
    ...

Homomorphism document::

    hom "ehom3"
    source "ehom3_F.pss"
    target "ehom3_G.pss"
    phi (1 2 2 3)            # phi(b) for b = 1..m, m = target vertex count
    hat 1 = [0 1]            # table of the value map at target vertex b
    pair fu -> fc            # optional witness pairing, source -> target

Source/target paths are resolved relative to the hom document.  ``hat``
lines that are omitted default to the identity table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

from .expr import ExprRangeError, ExprSyntaxError, parse_expr
from .field import FieldError, FieldSpec
from .model import (
    PSS,
    Graph,
    LocalFunction,
    LocalFunctionFamily,
    ModelError,
    Schedule,
    UpdateFunction,
    require_valid,
    to_fraction,
)


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str | None = None):
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.column = column


LABEL = r"[A-Za-z_][A-Za-z0-9_]*"


def format_fraction(q: Fraction) -> str:
    """Decimal string when ``q`` terminates in base 10, else ``num/den``."""
    q = Fraction(q)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(q.numerator)
    scaled = q.numerator * 10**digits // q.denominator
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = text[:-digits], text[-digits:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def _strip_comment(line: str) -> str:
    # '#' never appears inside a quoted name in practice; keep quoted text intact anyway
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).rstrip()


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if line.strip():
            yield no, line, len(line) - len(line.lstrip()) + 1


# -- PSS --------------------------------------------------------------------

_RE = {
    "pss": re.compile(r'pss\s+"([^"]*)"\s*$'),
    "field": re.compile(r"field\s+p\s*=\s*(\d+)\s*$"),
    "vertices": re.compile(r"vertices\s+(\d+)\s*$"),
    "edges": re.compile(r"edges\s*\{(.*)\}\s*$"),
    "local": re.compile(r"local\s+(\d+)\s*\{(.*)\}\s*$"),
    "schedule": re.compile(rf"schedule\s+({LABEL})\s*=\s*\(([^)]*)\)\s*$"),
    "update": re.compile(rf"update\s+({LABEL})\s*=\s*({LABEL})\s*\[([^\]]*)\]\s*prob\s+(\S+)\s*$"),
}


def parse_pss_file(text: str, source: str | None = None, validate: bool = True) -> PSS:
    """Parse a PSS document.  Semantic checks run through ``validate_pss``."""
    name = p = n = None
    edges: list[tuple[int, int]] = []
    local_raw: dict[int, tuple[int, int, str]] = {}
    sched_raw: list[tuple[str, tuple[int, ...]]] = []
    update_raw: list[tuple[int, str, str, list[str], str]] = []

    def fail(msg, no, col=None):
        raise FormatError(msg, no, col, source)

    for no, line, col in _lines(text):
        body = line.strip()
        keyword = body.split(None, 1)[0].split("{", 1)[0]
        rx = _RE.get(keyword)
        if rx is None:
            fail(f"unknown statement {keyword!r}", no, col)
        m = rx.match(body)
        if m is None:
            fail(f"malformed {keyword} statement", no, col)
        if keyword == "pss":
            name = m.group(1)
        elif keyword == "field":
            p = int(m.group(1))
            try:
                FieldSpec(p)
            except FieldError as exc:
                fail(str(exc), no, col)
        elif keyword == "vertices":
            n = int(m.group(1))
        elif keyword == "edges":
            inner = m.group(1).strip()
            if inner:
                for item in inner.split(","):
                    em = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", item)
                    if em is None:
                        fail(f"bad edge {item.strip()!r}", no, col + line.strip().find(item.strip()))
                    edges.append((int(em.group(1)), int(em.group(2))))
        elif keyword == "local":
            v = int(m.group(1))
            if v in local_raw:
                fail(f"second local block for vertex {v}", no, col)
            offset = col + body.index("{") + 1
            local_raw[v] = (no, offset, m.group(2))
        elif keyword == "schedule":
            try:
                order = tuple(int(t) for t in m.group(2).replace(",", " ").split())
            except ValueError:
                fail("schedule entries must be vertex numbers", no, col)
            sched_raw.append((m.group(1), order))
        elif keyword == "update":
            sel = [t for t in re.split(r"[\s,]+", m.group(3).strip()) if t]
            update_raw.append((no, m.group(1), m.group(2), sel, m.group(4)))

    if name is None:
        raise FormatError('missing header line: pss "<name>"', source=source)
    if p is None:
        raise FormatError("missing 'field p=<prime>' line", source=source)
    if n is None:
        raise FormatError("missing 'vertices <n>' line", source=source)
    fld = FieldSpec(p)

    families = []
    for v in range(1, n + 1):
        if v not in local_raw:
            raise FormatError(f"no local block for vertex {v}", source=source)
        no, offset, inner = local_raw[v]
        members = []
        pos = 0
        for chunk in inner.split(";"):
            start = offset + pos
            pos += len(chunk) + 1
            if not chunk.strip():
                continue
            lm = re.fullmatch(rf"\s*({LABEL})\s*:(.*)", chunk)
            if lm is None:
                fail("expected '<label>: <expr>'", no, start)
            try:
                rule = parse_expr(lm.group(2), n, fld)
            except ExprSyntaxError as exc:
                fail(str(exc), no, start + lm.start(2) + exc.pos)
            except ExprRangeError as exc:
                fail(str(exc), no, start + lm.start(2))
            members.append(LocalFunction(v, rule, lm.group(1)))
        families.append(LocalFunctionFamily(v, tuple(members)))
    extra = sorted(set(local_raw) - set(range(1, n + 1)))
    if extra:
        raise FormatError(f"local block for vertex {extra[0]} outside 1..{n}", local_raw[extra[0]][0], source=source)

    schedules = tuple(Schedule(lbl, order) for lbl, order in sched_raw)
    by_label = {s.label: s for s in schedules}
    functions = []
    probs: dict[str, Fraction] = {}
    for no, label, sched, sel, prob in update_raw:
        if sched not in by_label:
            fail(f"update {label!r} references unknown schedule {sched!r}", no)
        if len(sel) != n:
            fail(f"update {label!r} selects {len(sel)} local functions, expected {n}", no)
        chosen = []
        for v, lbl in enumerate(sel, start=1):
            try:
                chosen.append(families[v - 1].member(lbl))
            except KeyError:
                fail(f"update {label!r}: vertex {v} has no local function {lbl!r}", no)
        try:
            probs[label] = to_fraction(prob)
        except ModelError as exc:
            fail(str(exc), no)
        functions.append(UpdateFunction(label, by_label[sched], tuple(chosen)))

    pss = PSS(name, fld, Graph(n, tuple(edges)), tuple(families), schedules, tuple(functions), probs)
    return require_valid(pss) if validate else pss


def emit_pss_file(pss: PSS) -> str:
    lines = [
        f'pss "{pss.name}"',
        f"field p={pss.p}",
        f"vertices {pss.n}",
        "edges { " + ", ".join(f"{a}-{b}" for a, b in pss.graph.sorted_edges) + " }"
        if pss.graph.edges
        else "edges { }",
    ]
    for fam in pss.families:
        members = " ; ".join(f"{f.label}: {f.rule}" for f in fam.members)
        lines.append(f"local {fam.vertex} {{ {members} }}")
    for s in pss.schedules:
        lines.append(f"schedule {s.label} = ({' '.join(map(str, s.order))})")
    for f in pss.functions:
        sel = " ".join(f.selection_labels)
        lines.append(f"update {f.label} = {f.schedule.label}[{sel}] prob {format_fraction(pss.prob(f.label))}")
    return "\n".join(lines) + "\n"


def load_pss(path: str | Path, validate: bool = True) -> PSS:
    path = Path(path)
    return parse_pss_file(path.read_text(), source=str(path), validate=validate)


# -- probability files ------------------------------------------------------


def parse_probs_file(text: str, source: str | None = None) -> dict[str, Fraction]:
    """``<label> <prob>`` per line (``label = prob`` also accepted)."""
    out = {}
    for no, line, col in _lines(text):
        m = re.fullmatch(rf"\s*({LABEL})\s*(?:=|\s)\s*(\S+)\s*", line)
        if m is None:
            raise FormatError("expected '<label> <probability>'", no, col, source)
        if m.group(1) in out:
            raise FormatError(f"{m.group(1)!r} listed twice", no, col, source)
        try:
            out[m.group(1)] = to_fraction(m.group(2))
        except ModelError as exc:
            raise FormatError(str(exc), no, col, source) from None
    return out


# -- homomorphism candidates -------------------------------------------------


@dataclass
class HomDocument:
    name: str
    source: str
    target: str
    phi: tuple[int, ...]
    hats: dict[int, tuple[int, ...]] = dc_field(default_factory=dict)
    pairing: dict[str, str] | None = None


_HOM_RE = {
    "hom": re.compile(r'hom\s+"([^"]*)"\s*$'),
    "source": re.compile(r'source\s+"([^"]*)"\s*$'),
    "target": re.compile(r'target\s+"([^"]*)"\s*$'),
    "phi": re.compile(r"phi\s*=?\s*\(([^)]*)\)\s*$"),
    "hat": re.compile(r"hat\s+(\d+)\s*=\s*\[([^\]]*)\]\s*$"),
    "pair": re.compile(rf"pair\s+({LABEL})\s*->\s*({LABEL})\s*$"),
}


def parse_hom_file(text: str, source: str | None = None) -> HomDocument:
    name = src = tgt = phi = None
    hats: dict[int, tuple[int, ...]] = {}
    pairing: dict[str, str] = {}
    for no, line, col in _lines(text):
        body = line.strip()
        keyword = body.split(None, 1)[0]
        keyword = re.match(r"[a-z]+", keyword).group(0) if re.match(r"[a-z]+", keyword) else keyword
        rx = _HOM_RE.get(keyword)
        if rx is None:
            raise FormatError(f"unknown statement {keyword!r}", no, col, source)
        m = rx.match(body)
        if m is None:
            raise FormatError(f"malformed {keyword} statement", no, col, source)
        try:
            if keyword == "hom":
                name = m.group(1)
            elif keyword == "source":
                src = m.group(1)
            elif keyword == "target":
                tgt = m.group(1)
            elif keyword == "phi":
                phi = tuple(int(t) for t in m.group(1).replace(",", " ").split())
            elif keyword == "hat":
                b = int(m.group(1))
                if b in hats:
                    raise FormatError(f"second hat line for vertex {b}", no, col, source)
                hats[b] = tuple(int(t) for t in m.group(2).replace(",", " ").split())
            elif keyword == "pair":
                if m.group(1) in pairing:
                    raise FormatError(f"{m.group(1)!r} paired twice", no, col, source)
                pairing[m.group(1)] = m.group(2)
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad number in {keyword} statement", no, col, source) from None
    for what, val in (("hom", name), ("source", src), ("target", tgt), ("phi", phi)):
        if val is None:
            raise FormatError(f"missing '{what}' line", source=source)
    return HomDocument(name, src, tgt, phi, hats, pairing or None)


def emit_hom_file(doc: HomDocument, p: int | None = None) -> str:
    lines = [
        f'hom "{doc.name}"',
        f'source "{doc.source}"',
        f'target "{doc.target}"',
        f"phi ({' '.join(map(str, doc.phi))})",
    ]
    for b in range(1, len(doc.phi) + 1):
        table = doc.hats.get(b)
        if table is None and p is not None:
            table = tuple(range(p))
        if table is not None:
            lines.append(f"hat {b} = [{' '.join(map(str, table))}]")
    for f, g in (doc.pairing or {}).items():
        lines.append(f"pair {f} -> {g}")
    return "\n".join(lines) + "\n"


def load_hom(path: str | Path):
    """Read a hom document and the two PSS files it names.

    Returns ``(doc, candidate)``.
    """
    from .morphism import GraphMorphism, HomCandidate, MorphismError

    path = Path(path)
    doc = parse_hom_file(path.read_text(), source=str(path))
    d1 = load_pss(path.parent / doc.source)
    d2 = load_pss(path.parent / doc.target)
    m = d2.n
    if len(doc.phi) != m:
        raise FormatError(f"phi lists {len(doc.phi)} images but the target graph has {m} vertices", source=str(path))
    bad = [b for b in doc.hats if not 1 <= b <= m]
    if bad:
        raise FormatError(f"hat line for vertex {bad[0]} outside 1..{m}", source=str(path))
    hats = tuple(doc.hats.get(b, tuple(range(d1.p))) for b in range(1, m + 1))
    try:
        cand = HomCandidate(d1, d2, GraphMorphism(d2.graph, d1.graph, doc.phi), hats, doc.pairing)
        cand.check_well_formed()
    except MorphismError as exc:
        raise FormatError(str(exc), source=str(path)) from None
    return doc, cand
