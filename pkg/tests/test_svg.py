import json
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rngbias import dataio, funnel, hurst, svg

NS = "{http://www.w3.org/2000/svg}"


def _metadata(doc: str) -> dict:
    root = ET.fromstring(doc)
    meta = root.find(f"{NS}metadata")
    return json.loads(meta.text)


@pytest.fixture(scope="module")
def chance_records():
    return dataio.synthesize(dataio.SynthSpec(n_studies=380, seed=0))


def test_funnel_svg_is_valid_and_self_contained(chance_records):
    doc = svg.render_svg("funnel", chance_records, envelopes=[funnel.EnvelopeSpec()], wp=0.5, mean_pi=0.5)
    root = ET.fromstring(doc)
    assert root.tag == f"{NS}svg"
    assert root.get("version") == "1.1"
    assert "href" not in doc and "<image" not in doc
    assert len(root.findall(f".//{NS}circle")) == 380


def test_funnel_svg_line_styles(chance_records):
    envs = [funnel.EnvelopeSpec(), funnel.EnvelopeSpec(v_factor=2.0)]
    doc = svg.render_svg("funnel", chance_records, envelopes=envs, wp=0.5, mean_pi=0.51)
    assert re.search(r'class="wp-line"[^>]*stroke-dasharray="5,3"', doc)
    assert re.search(r'class="mean-line"[^>]*stroke-dasharray="8,3,2,3"', doc)
    assert doc.count('class="envelope-v1"') == 2
    assert doc.count('class="envelope-v2"') == 2


def test_funnel_svg_embeds_coverage(chance_records):
    rep = funnel.coverage(chance_records, funnel.EnvelopeSpec())
    doc = svg.render_svg("funnel", chance_records, metadata={"fraction_inside_v1": rep.fraction_inside})
    meta = _metadata(doc)
    assert meta["chart"] == "funnel" and meta["n_points"] == 380
    assert meta["fraction_inside_v1"] == pytest.approx(0.95, abs=0.03)


def test_funnel_svg_deterministic(chance_records):
    a = svg.render_svg("funnel", chance_records, wp=0.5)
    b = svg.render_svg("funnel", list(chance_records), wp=0.5)
    assert a == b


def test_funnel_svg_from_arrays():
    doc = svg.render_svg("funnel", ([0.5, 0.6], [100, 1000]))
    assert _metadata(doc)["n_points"] == 2


def test_funnel_svg_empty_rejected():
    with pytest.raises(ValueError):
        svg.render_svg("funnel", [])
    with pytest.raises(ValueError):
        svg.funnel_svg([], [])


def test_rs_loglog_svg():
    rep = hurst.hurst(np.random.default_rng(2).standard_normal(380))
    doc = svg.render_svg("rs_loglog", rep, title="demo")
    ET.fromstring(doc)
    assert f"H = {rep.h:.3f}" in doc
    assert doc.count('class="point"') == len(rep.points)
    assert _metadata(doc)["h"] == pytest.approx(rep.h)
    assert doc == svg.render_svg("rs_loglog", rep, title="demo")


def test_hurst_vs_length_svg():
    curve = hurst.baseline_curve([64, 128, 256, 380], range(3))
    doc = svg.render_svg("hurst_vs_length", curve, highlights=[("a", 200, 0.7)])
    ET.fromstring(doc)
    assert 'class="poly-fit"' in doc
    assert 'class="highlight"' in doc
    assert _metadata(doc)["highlights"] == ["a"]
    no_fit = svg.render_svg("hurst_vs_length", curve, poly_fit=False)
    assert 'class="poly-fit"' not in no_fit


def test_title_is_escaped():
    doc = svg.render_svg("funnel", ([0.5], [100]), title="a < b & c")
    assert "a &lt; b &amp; c" in doc
    ET.fromstring(doc)


def test_unknown_chart():
    with pytest.raises(ValueError):
        svg.render_svg("pie", [])
    with pytest.raises(ValueError):
        svg.hurst_vs_length_svg([])
