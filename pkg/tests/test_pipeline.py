"""End-to-end pipeline on the unknot family and genericity machinery."""

import json

import numpy as np
import pytest

from cordalg.energy import find_critical_points
from cordalg.knots import build_curve, build_framing, ellipse_points
from cordalg.pipeline import compare, compute_cord_algebra, genericity_check, simplify
from cordalg.ring import Presentation, parse, serialize

UNKNOT_RELATION = parse("1 - u - l + l u")  # (l-1)(u-1)


@pytest.fixture(scope="module")
def unknot_result():
    return compute_cord_algebra({"type": "ellipse", "a": 2, "b": 1},
                                framing="seifert", seed=0)


def test_unknot_presentation_golden(unknot_result):
    p = unknot_result.presentation
    assert p.generators == []
    assert len(p.relations) == 1
    assert p.relations[0] == UNKNOT_RELATION


def test_unknot_census_and_linking(unknot_result):
    assert unknot_result.census == (0, 2, 2)
    assert unknot_result.linking == 0
    assert unknot_result.D_M.is_zero()


def test_unknot_runs_are_deterministic():
    a = compute_cord_algebra({"type": "ellipse", "a": 2, "b": 1}, seed=3)
    b = compute_cord_algebra({"type": "ellipse", "a": 2, "b": 1}, seed=3)
    assert json.dumps(a.presentation.to_dict(), sort_keys=True) == \
        json.dumps(b.presentation.to_dict(), sort_keys=True)


def test_seed_changes_do_not_change_presentation(unknot_result):
    other = compute_cord_algebra({"type": "ellipse", "a": 2, "b": 1},
                                 framing="seifert", seed=11)
    assert [serialize(r) for r in other.presentation.relations] == \
        [serialize(r) for r in unknot_result.presentation.relations]


def test_unknot_basepoint_independence(unknot_result):
    reference = unknot_result.presentation
    for shift in (0.13, 0.31, 0.55, 0.72, 0.91):
        res = compute_cord_algebra(
            {"type": "ellipse", "a": 2, "b": 1, "basepoint_shift": shift},
            framing="seifert")
        assert compare(res.presentation, reference) == "identical", shift


def test_unknot_other_embeddings(unknot_result):
    reference = unknot_result.presentation
    for spec in ({"type": "ellipse", "a": 3, "b": 1},
                 {"type": "ellipse", "a": 1.7, "b": 0.8}):
        res = compute_cord_algebra(spec, framing="seifert")
        assert compare(res.presentation, reference) == "identical", spec


def test_unknot_perturbed_embedding(unknot_result):
    # mildly non-elliptical planar convex curve
    th = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    r = 1.0 + 0.08 * np.cos(3 * th) + 0.04 * np.sin(2 * th)
    pts = np.stack([2 * r * np.cos(th), 1 * r * np.sin(th), np.zeros_like(th)],
                   axis=1)
    res = compute_cord_algebra({"type": "samples", "points": pts.tolist(),
                                "basepoint_shift": 0.4}, framing="seifert")
    assert compare(res.presentation, unknot_result.presentation) == "identical"


def test_genericity_check_flags_basepoint_on_critical_endpoint():
    curve = build_curve({"type": "ellipse", "a": 2, "b": 1})
    points = find_critical_points(curve)
    saddle = next(p for p in points if p.index == 1)
    moved = curve.shift_basepoint(saddle.s)
    framing = build_framing(moved)
    report = genericity_check(moved, framing, find_critical_points(moved))
    assert any(kind == "B" for (_lab, kind, _msg) in report)


def test_genericity_check_clean_on_generic_basepoint():
    curve = build_curve({"type": "ellipse", "a": 2, "b": 1,
                         "basepoint_shift": 0.875})
    framing = build_framing(curve)
    report = genericity_check(curve, framing, find_critical_points(curve))
    assert report == []


def test_raw_relations_before_simplify(unknot_result):
    raw = sorted(serialize(r) for r in unknot_result.raw.relations)
    expect = sorted(serialize(parse(t)) for t in
                    ("1 - u - l^-1 + l^-1 u", "-1 + u + l - l u"))
    assert raw == expect


def test_simplify_eliminations_are_recorded():
    p = Presentation(["a", "b"],
                     [parse("a - u b u"), parse("b - 1 + u")])
    out = simplify(p)
    assert out.generators == []
    assert "a" in out.metadata["eliminated"]
    assert "b" in out.metadata["eliminated"]
