"""Report documents: machine-readable JSON, aligned text and CSV tables.

Numbers are stored rounded to 12 significant digits so that a report read
back from JSON compares equal to the one written.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SIG_DIGITS = 12


def normalize(v):
    """Plain JSON-compatible value; floats rounded to 12 significant digits."""
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(v, dict):
        return {str(k): normalize(x) for k, x in v.items()}
    if isinstance(v, (set, frozenset)):
        return sorted(normalize(x) for x in v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [normalize(x) for x in v]
    raise TypeError(f"cannot store {type(v).__name__} in a report")


def fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, list):
        return "{" + ", ".join(fmt(x) for x in v) + "}" if all(isinstance(x, int) for x in v) \
            else "(" + ", ".join(fmt(x) for x in v) + ")"
    return str(v)


@dataclass
class Section:
    name: str
    fields: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.fields = normalize(self.fields)
        self.columns = [str(c) for c in self.columns]
        self.rows = normalize(self.rows)
        if any(len(r) != len(self.columns) for r in self.rows):
            raise ValueError(f"section {self.name}: row length does not match columns")

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.fields:
            d["fields"] = self.fields
        if self.columns:
            d["columns"] = self.columns
            d["rows"] = self.rows
        return d

    @classmethod
    def from_dict(cls, d) -> "Section":
        return cls(d["name"], d.get("fields", {}), d.get("columns", []), d.get("rows", []))

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(x) for x in r])
        return buf.getvalue()

    def render(self) -> str:
        out = [f"== {self.name} =="]
        for k, v in self.fields.items():
            if isinstance(v, str) and "\n" in v:
                out.append(f"{k}:")
                out += [("    " + line).rstrip() for line in v.rstrip("\n").split("\n")]
            else:
                out.append(f"{k}: {fmt(v)}")
        if self.columns:
            cells = [self.columns] + [[fmt(x) for x in r] for r in self.rows]
            widths = [max(len(r[i]) for r in cells) for i in range(len(self.columns))]
            for j, r in enumerate(cells):
                out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
                if j == 0:
                    out.append("  ".join("-" * w for w in widths))
        return "\n".join(out)


@dataclass
class ReportDocument:
    title: str
    provenance: dict = field(default_factory=dict)
    sections: list = field(default_factory=list)

    def __post_init__(self):
        self.provenance = normalize(self.provenance)

    def add(self, name, fields=None, columns=None, rows=None) -> Section:
        s = Section(name, fields or {}, columns or [], rows or [])
        self.sections.append(s)
        return s

    def __getitem__(self, name) -> Section:
        for s in self.sections:
            if s.name == name:
                return s
        raise KeyError(name)

    def section_names(self) -> list:
        return [s.name for s in self.sections]

    def to_dict(self) -> dict:
        return {"title": self.title, "provenance": self.provenance,
                "sections": [s.to_dict() for s in self.sections]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        d = json.loads(text)
        return cls(d["title"], d.get("provenance", {}), [Section.from_dict(s) for s in d.get("sections", [])])

    def render(self) -> str:
        head = [f"# {self.title}"] + [f"{k}: {fmt(v)}" for k, v in self.provenance.items()
                                      if not (isinstance(v, str) and "\n" in v)]
        return "\n\n".join(["\n".join(head)] + [s.render() for s in self.sections]) + "\n"

    def __eq__(self, other):
        return isinstance(other, ReportDocument) and self.to_dict() == other.to_dict()


# --------------------------------------------------------------------------
# builders


def provenance(cfg, **extra) -> dict:
    from . import __version__
    from .braids import CLOSURE_TOL, COLLISION_TOL, RESOLUTION_TOL
    from .dynamics.fixed import FIXED_TOL, MERGE_RADIUS

    d = {
        "package": f"braidflow {__version__}",
        "scenario": cfg.name,
        "model": cfg.model,
        "steps": cfg.steps,
        "grid": cfg.grid,
        "collision_tol": COLLISION_TOL,
        "closure_tol": CLOSURE_TOL,
        "resolution_tol": RESOLUTION_TOL,
        "fixed_tol": FIXED_TOL,
        "merge_radius": MERGE_RADIUS,
    }
    d.update(extra)
    return d


def config_section(doc: ReportDocument, cfg):
    from .config import dumps

    doc.add("config", {"text": dumps(cfg)})


def winding_section(doc: ReportDocument, W, name="winding matrix"):
    labels = list(W.labels)
    rows = [[a] + [None if a == b else W[a, b] for b in labels] for a in labels]
    doc.add(name, columns=["strand"] + labels, rows=rows)


def trajectory_section(doc: ReportDocument, strands):
    rows = [[s.label, float(s.start[0]), float(s.start[1]), s.closure_defect] for s in strands]
    doc.add("strands", columns=["label", "x0", "y0", "closure defect"], rows=rows)


def aux_section(doc: ReportDocument, aux: dict):
    if aux:
        doc.add("auxiliary windings", columns=["aux", "strand", "winding"],
                rows=[[a, q, w] for (a, q), w in aux.items()])


def certificate_section(doc: ReportDocument, cert):
    if cert is None:
        doc.add("obstruction", {"certificate": None, "verdict": "no certificate found (inconclusive)"})
        return
    rows = [[k, a, wa, b, wb] for k, ((a, wa), (b, wb)) in cert.witnesses.items()]
    doc.add("obstruction", {"certificate": list(cert.labels), "verdict": "not realizable by an autonomous flow"},
            ["strand", "with", "winding", "with", "winding"], rows)


def components_section(doc: ReportDocument, comps):
    rows = [[c.id, c.kind, list(c.center) if c.center is not None else None, c.radius, c.turns,
             c.near_boundary, c.residual] for c in comps]
    doc.add("fixed set", columns=["id", "kind", "center", "radius", "turns", "near boundary", "residual"], rows=rows)


def spectrum_section(doc: ReportDocument, spec, hofer=None):
    fields = {"epsilon": spec.epsilon}
    if hofer is not None:
        fields["hofer length bound"] = hofer
    doc.add("action spectrum", fields, ["component", "action", "spread"],
            [[v.component, v.value, v.spread] for v in spec.values])


def admissibility_section(doc: ReportDocument, adm):
    doc.add("admissibility", {"passed": adm.passed}, ["clause", "status", "witness"],
            [[c.id, c.status, c.witness] for c in adm.clauses])


def set_winding_section(doc: ReportDocument, sets: dict, model: str):
    doc.add(f"set-valued windings ({model})", columns=["p", "q", "windings"],
            rows=[[p, q, sorted(v)] for (p, q), v in sets.items()])


def persistence_section(doc: ReportDocument, rep):
    labels = list(rep.base.labels)
    rows = []
    for r in rep.rows:
        shift = max(r.shifts.values()) if r.shifts else None
        offset = max(r.offsets.values()) if r.offsets else None
        rows.append([r.delta, r.oscillation, r.status, shift, offset, list(r.lost) or None])
    doc.add("persistence", {
        "bump center": list(rep.bump_center),
        "bump radius": rep.bump_radius,
        "epsilon": rep.epsilon,
        "stable up to": rep.stable_below,
        "breaking amplitude": rep.breaking_amplitude,
        "strands": labels,
    }, ["delta", "oscillation", "status", "max shift", "max offset", "lost"], rows)


def baseline_section(doc: ReportDocument, rep):
    rows = [[c.seed, len(c.labels), len(c.violations), c.certificate is not None, c.error or None, c.passed]
            for c in rep.cases]
    doc.add("autonomous baseline", {"seed": rep.seed, "cases": len(rep.cases), "passed": rep.passed,
                                    "failures": [c.seed for c in rep.failures]},
            ["case seed", "strands", "violations", "certificate", "error", "passed"], rows)


def timing_section(doc: ReportDocument, timings: dict):
    doc.add("timings", columns=["stage", "seconds"], rows=[[k, v] for k, v in timings.items()])
