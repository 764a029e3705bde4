"""VECT geometry files, contact-map export (CSV/SVG), config overrides.

The VECT subset is strict: token counts must match the header exactly and
every component must use Geomview's negative-count closed-polyline
convention.  Parse errors carry the offending line number.  Contact maps
report arclength coordinates in ropelength units (arclength divided by the
polygonal thickness), so the diagonal of the plot runs from 0 to PRop.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .geometry import Polygon, minrads, turning_angles
from .thickness import pthi

__all__ = [
    "ParseError",
    "read_vect",
    "write_vect",
    "ContactMap",
    "contact_map",
    "export_contacts",
    "parse_config",
    "apply_config",
]

STRAIGHT_TOL = 1e-7    # turning angle treated as a straight vertex


class ParseError(ValueError):
    """Malformed input file; line is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__("line %d: %s" % (line, message))
        self.line = line


# -- VECT ---------------------------------------------------------------------


class _Tokens:
    """Whitespace token stream that remembers each token's source line."""

    def __init__(self, text: str):
        self.items = []
        for ln, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            for tok in body.split():
                self.items.append((tok, ln))
        self.pos = 0
        self.last_line = max((ln for _, ln in self.items), default=1)

    def take(self, what: str) -> tuple:
        if self.pos >= len(self.items):
            raise ParseError("unexpected end of file reading %s" % what,
                             self.last_line)
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def take_int(self, what: str) -> tuple:
        tok, ln = self.take(what)
        try:
            return int(tok), ln
        except ValueError:
            raise ParseError("expected integer %s, got %r" % (what, tok),
                             ln) from None

    def take_float(self, what: str) -> tuple:
        tok, ln = self.take(what)
        try:
            val = float(tok)
        except ValueError:
            raise ParseError("expected number %s, got %r" % (what, tok),
                             ln) from None
        return val, ln


def read_vect(data) -> Polygon:
    """Parse a VECT file (bytes or str) into a Polygon.

    Only closed components (negative vertex counts) are accepted; any
    color block is validated against the declared counts and ignored.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    toks = _Tokens(data)
    magic, ln = toks.take("magic")
    if magic != "VECT":
        raise ParseError("not a VECT file (magic %r)" % magic, ln)
    ncomp, ln = toks.take_int("component count")
    if ncomp < 1:
        raise ParseError("component count must be positive", ln)
    nvert, _ = toks.take_int("vertex count")
    ncolor, _ = toks.take_int("color count")

    counts = []
    for c in range(ncomp):
        cnt, ln = toks.take_int("vertex count of component %d" % c)
        if cnt >= 0:
            raise ParseError(
                "component %d is open (count %d); only closed components "
                "(negative counts) are supported" % (c, cnt), ln)
        if -cnt < 3:
            raise ParseError("component %d has fewer than 3 vertices" % c, ln)
        counts.append(-cnt)
    if sum(counts) != nvert:
        raise ParseError(
            "component counts sum to %d but header declares %d vertices"
            % (sum(counts), nvert), ln)

    color_counts = []
    for c in range(ncomp):
        cnt, ln = toks.take_int("color count of component %d" % c)
        if cnt < 0:
            raise ParseError("negative color count for component %d" % c, ln)
        color_counts.append(cnt)
    if sum(color_counts) != ncolor:
        raise ParseError(
            "color counts sum to %d but header declares %d"
            % (sum(color_counts), ncolor), ln)

    coords = np.empty((nvert, 3))
    for i in range(nvert):
        for k in range(3):
            val, ln = toks.take_float("coordinate %d of vertex %d" % (k, i))
            if not np.isfinite(val):
                raise ParseError("non-finite coordinate for vertex %d" % i, ln)
            coords[i, k] = val
    for i in range(4 * ncolor):
        toks.take_float("color value %d" % i)
    if toks.pos < len(toks.items):
        tok, ln = toks.items[toks.pos]
        raise ParseError("trailing data %r after the color block" % tok, ln)

    comps = np.split(coords, np.cumsum(counts)[:-1])
    try:
        return Polygon(comps)
    except ValueError as e:
        raise ParseError(str(e), toks.last_line) from None


def write_vect(poly: Polygon) -> bytes:
    """Serialize a Polygon as VECT; %.17g coordinates round-trip doubles."""
    sizes = poly.component_sizes()
    lines = ["VECT",
             "%d %d %d" % (poly.num_components, poly.num_vertices,
                           poly.num_components),
             " ".join("%d" % -n for n in sizes),
             " ".join("1" for _ in sizes)]
    lines.extend("%.17g %.17g %.17g" % (x, y, z) for x, y, z in poly.verts)
    lines.extend("0 0 0 1" for _ in sizes)
    return ("\n".join(lines) + "\n").encode()


# -- contact maps --------------------------------------------------------------


@dataclass(frozen=True)
class ContactMap:
    """Self-contact structure in ropelength-unit arclength coordinates.

    contacts rows are (s, t, comp_a, comp_b, dist, multiplier) with s <= t;
    kink_spans and straight_spans are (component, s_start, s_end); bounds
    holds each component's end coordinate, so bounds[-1] is PRop.
    """

    contacts: tuple
    kink_spans: tuple
    straight_spans: tuple
    bounds: tuple


def _arc_coords(poly: Polygon):
    """Per-vertex global arclength from the start of the first component."""
    ell = poly.edge_lengths()
    s = np.concatenate(([0.0], np.cumsum(ell)[:-1]))
    return s, ell


def _spans_of(flags: np.ndarray, poly: Polygon, s, ell):
    """Merge flagged vertices into per-component arclength intervals.

    A flagged vertex covers the half-edges on both sides of it; touching
    intervals merge.  An interval wrapping backwards past the component
    start is split into a head piece and a tail piece (the two render
    identically to a merged one, meeting at the seam).
    """
    spans = []
    for c in range(poly.num_components):
        lo, hi = poly.offsets[c], poly.offsets[c + 1]
        start, end = s[lo], s[hi - 1] + ell[hi - 1]
        pieces = []
        for v in np.flatnonzero(flags[lo:hi]) + lo:
            a = s[v] - 0.5 * ell[poly.prv[v]]
            b = s[v] + 0.5 * ell[v]
            if a < start:
                pieces.append([start, b])
                pieces.append([end - (start - a), end])
            else:
                pieces.append([a, b])
        pieces.sort()
        merged = []
        for a, b in pieces:
            if merged and a <= merged[-1][1] + 1e-12:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        spans.extend((c, a, b) for a, b in merged)
    return spans


def contact_map(poly: Polygon, active, multipliers=None) -> ContactMap:
    """Assemble the (s, t) contact structure of an active-set snapshot.

    multipliers, when given, must follow the rigidity column order (struts
    sorted by sort_key, then kinks); strut rows pick up their multiplier
    and kink intervals are purely geometric.
    """
    s, ell = _arc_coords(poly)
    scale = pthi(poly)
    struts = sorted(active.struts, key=lambda st: st.sort_key())
    lam = np.zeros(len(struts)) if multipliers is None else \
        np.asarray(multipliers, dtype=float)[:len(struts)]

    rows = []
    for k, st in enumerate(struts):
        # alpha is measured from the far end: point = a*start + (1-a)*end
        sa = (s[st.p_edge] + (1.0 - st.p_alpha) * ell[st.p_edge]) / scale
        sb = (s[st.q_edge] + (1.0 - st.q_alpha) * ell[st.q_edge]) / scale
        ca, cb = int(poly.comp_of[st.p_edge]), int(poly.comp_of[st.q_edge])
        if sb < sa:
            sa, sb, ca, cb = sb, sa, cb, ca
        rows.append((sa, sb, ca, cb, st.dist, float(lam[k])))
    rows.sort()

    kinked = np.zeros(poly.num_vertices, dtype=bool)
    for k in active.kinks:
        kinked[k.vertex] = True
    straight = turning_angles(poly) <= STRAIGHT_TOL

    kink_spans = [(c, a / scale, b / scale)
                  for c, a, b in _spans_of(kinked, poly, s, ell)]
    straight_spans = [(c, a / scale, b / scale)
                      for c, a, b in _spans_of(straight, poly, s, ell)]
    bounds = tuple((s[poly.offsets[1:] - 1] + ell[poly.offsets[1:] - 1]) / scale)
    return ContactMap(contacts=tuple(rows), kink_spans=tuple(kink_spans),
                      straight_spans=tuple(straight_spans), bounds=bounds)


def _csv(cmap: ContactMap) -> bytes:
    lines = ["s,t,comp_a,comp_b,d,lambda"]
    for sa, sb, ca, cb, d, lam in cmap.contacts:
        lines.append("%.17g,%.17g,%d,%d,%.17g,%.17g" % (sa, sb, ca, cb, d, lam))
    return ("\n".join(lines) + "\n").encode()


def _svg(cmap: ContactMap) -> bytes:
    total = cmap.bounds[-1] if cmap.bounds else 1.0
    size, margin = 640.0, 40.0
    k = size / total

    def xy(u, v):
        # math orientation: v grows upward
        return margin + k * u, margin + size - k * v

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" width="%g" height="%g" '
           'viewBox="0 0 %g %g">' % (size + 2 * margin, size + 2 * margin,
                                     size + 2 * margin, size + 2 * margin),
           '<rect x="%g" y="%g" width="%g" height="%g" fill="white" '
           'stroke="black"/>' % (margin, margin, size, size)]

    # component boundaries
    for b in cmap.bounds[:-1]:
        x, _ = xy(b, 0.0)
        out.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="#bbbbbb"/>'
                   % (x, margin, x, margin + size))
        _, y = xy(0.0, b)
        out.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="#bbbbbb"/>'
                   % (margin, y, margin + size, y))

    # diagonal arclength ruler with unit ticks
    x0, y0 = xy(0.0, 0.0)
    x1, y1 = xy(total, total)
    out.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="#888888"/>'
               % (x0, y0, x1, y1))
    tick = 0
    while tick <= total:
        x, y = xy(float(tick), float(tick))
        out.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="#888888"/>'
                   % (x - 3, y - 3, x + 3, y + 3))
        if tick and tick % 5 == 0:
            out.append('<text x="%g" y="%g" font-size="10" fill="#555555">'
                       '%d</text>' % (x + 5, y - 5, tick))
        tick += 1

    # kink and straight intervals, drawn along the diagonal
    for cls, spans, color in (("kink", cmap.kink_spans, "#cc2222"),
                              ("straight", cmap.straight_spans, "#2244cc")):
        for _, a, b in spans:
            xa, ya = xy(a, a)
            xb, yb = xy(b, b)
            out.append('<line class="%s" x1="%g" y1="%g" x2="%g" y2="%g" '
                       'stroke="%s" stroke-width="4"/>'
                       % (cls, xa, ya, xb, yb, color))

    # contacts, mirrored across the diagonal
    half = min(8.0, max(2.0, 0.25 * size / max(1, len(cmap.contacts))))
    for sa, sb, *_ in cmap.contacts:
        for u, v in ((sa, sb), (sb, sa)):
            x, y = xy(u, v)
            out.append('<rect class="contact" x="%g" y="%g" width="%g" '
                       'height="%g" fill="#1a6b1a"/>'
                       % (x - half, y - half, 2 * half, 2 * half))
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def export_contacts(poly: Polygon, active, multipliers=None,
                    format: str = "csv") -> bytes:
    """Render the contact map as CSV rows or an SVG plot."""
    cmap = contact_map(poly, active, multipliers)
    if format == "csv":
        return _csv(cmap)
    if format == "svg":
        return _svg(cmap)
    raise ValueError("unknown contact format %r" % format)


# -- run-config overrides -------------------------------------------------------


def parse_config(text: str) -> dict:
    """Flat key = value lines; '#' comments; keys are RunConfig fields.

    schedule accepts comma- or space-separated numbers.  Returns a dict
    suitable for dataclasses.replace on a RunConfig.
    """
    from .descent import RunConfig

    fields = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError("expected key = value", ln)
        key, _, val = body.partition("=")
        key, val = key.strip().replace("-", "_"), val.strip().strip('"')
        if key == "res_schedule":  # the command-line flag's name for it
            key = "schedule"
        if key not in fields:
            raise ParseError("unknown config key %r" % key, ln)
        try:
            if key == "schedule":
                out[key] = tuple(float(x) for x in val.replace(",", " ").split())
            elif key in ("seed", "max_steps", "checkpoint_every"):
                out[key] = int(val)
            else:
                out[key] = float(val)
        except ValueError:
            raise ParseError("bad value %r for %s" % (val, key), ln) from None
    return out


def apply_config(cfg, text: str):
    """RunConfig with the file's overrides applied (and re-validated)."""
    return dataclasses.replace(cfg, **parse_config(text))
