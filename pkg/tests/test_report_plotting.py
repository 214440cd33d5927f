import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from braidflow import report as rpt
from braidflow.errors import EmptyDocumentError, ValidationError
from braidflow.plotting import crossings, emit_svg

SVG = "{http://www.w3.org/2000/svg}"


def full_doc(result):
    doc = rpt.ReportDocument("paper", rpt.provenance(result.config))
    rpt.config_section(doc, result.config)
    rpt.trajectory_section(doc, result.strands)
    rpt.winding_section(doc, result.winding)
    rpt.aux_section(doc, result.aux_windings)
    rpt.certificate_section(doc, result.certificate)
    rpt.components_section(doc, result.components)
    rpt.spectrum_section(doc, result.spectrum, result.hofer)
    rpt.admissibility_section(doc, result.admissibility)
    return doc


def test_json_round_trip(paper_result):
    doc = full_doc(paper_result)
    back = rpt.ReportDocument.from_json(doc.to_json())
    assert back == doc
    assert back.to_json() == doc.to_json()
    assert back.render() == doc.render()


def test_sections_and_values(paper_result):
    doc = full_doc(paper_result)
    assert doc.section_names() == ["config", "strands", "winding matrix", "auxiliary windings", "obstruction",
                                   "fixed set", "action spectrum", "admissibility"]
    assert doc["obstruction"].fields["certificate"] == ["s", "p1", "p2", "m"]
    assert doc["winding matrix"].rows[3] == ["m", 1, 1, 4, None]
    assert doc["action spectrum"].fields["epsilon"] == pytest.approx(0.00942477796072, abs=1e-14)
    text = doc.render()
    assert "not realizable by an autonomous flow" in text
    assert all(line == line.rstrip() for line in text.splitlines())


def test_normalize_and_fmt():
    assert rpt.normalize(np.float64(1 / 3)) == 0.333333333333
    assert rpt.normalize({"a": {1, 3, 2}}) == {"a": [1, 2, 3]}
    assert rpt.normalize(np.array([np.int64(2)])) == [2]
    assert rpt.normalize(float("nan")) == "nan"
    assert rpt.fmt([0, 4]) == "{0, 4}"
    assert rpt.fmt(None) == "-"
    with pytest.raises(TypeError):
        rpt.normalize(object())


def test_table_csv():
    s = rpt.Section("t", columns=["a", "b"], rows=[[1, None], [0.5, "x"]])
    assert s.table_csv() == "a,b\n1,-\n0.5,x\n"
    with pytest.raises(ValueError):
        rpt.Section("t", columns=["a"], rows=[[1, 2]])


def test_no_certificate_verdict(single_result):
    doc = rpt.ReportDocument("x")
    rpt.certificate_section(doc, single_result.certificate)
    assert "inconclusive" in doc["obstruction"].fields["verdict"]


# --------------------------------------------------------------------------
# SVG


def strand_elements(svg_text):
    root = ET.fromstring(svg_text)
    return {g.get("id"): g for g in root.iter(f"{SVG}g") if (g.get("id") or "").startswith("strand-")}


def path_vertices(g):
    # matplotlib writes lines as "M x y L x y ..." paths; markers as <use> elements
    out = []
    for p in g.iter(f"{SVG}path"):
        nums = [float(v) for v in re.findall(r"-?\d+(?:\.\d+)?(?:e-?\d+)?", p.get("d", ""))]
        out.append(np.array(nums).reshape(-1, 2))
    return out


def test_paper_trajectories_svg_structure(paper_result):
    text = emit_svg(paper_result, "trajectories")
    groups = strand_elements(text)
    assert set(groups) == {"strand-s", "strand-p1", "strand-p2", "strand-m"}
    for lab in ("p1", "p2", "m"):
        (verts,) = path_vertices(groups[f"strand-{lab}"])
        assert len(verts) >= 50  # matplotlib simplifies the polyline
        assert np.hypot(*(verts[0] - verts[-1])) < 0.05  # closed curve in SVG units
    assert list(groups["strand-s"].iter(f"{SVG}use"))  # constant strand drawn as a dot


def test_identity_svg_four_dots(identity_result):
    groups = strand_elements(emit_svg(identity_result, "trajectories"))
    assert len(groups) == 4
    for g in groups.values():
        assert len(list(g.iter(f"{SVG}use"))) == 1


def test_svg_deterministic(paper_result, tmp_path):
    for kind in ("trajectories", "braid-diagram", "fixed-set"):
        a = emit_svg(paper_result, kind, tmp_path / f"{kind}.svg")
        b = emit_svg(paper_result, kind)
        assert a == b
        assert (tmp_path / f"{kind}.svg").read_text() == a


def test_braid_diagram_marks_crossings(paper_result):
    text = emit_svg(paper_result, "braid-diagram")
    assert 'id="crossings"' in text
    assert len(crossings(list(paper_result.strands))) > 0


def test_svg_errors(paper_result):
    with pytest.raises(EmptyDocumentError):
        emit_svg([], "trajectories")
    with pytest.raises(ValidationError):
        emit_svg(paper_result, "pie-chart")

    class NoComponents:
        strands = paper_result.strands
        components = None

    with pytest.raises(EmptyDocumentError):
        emit_svg(NoComponents(), "fixed-set")
