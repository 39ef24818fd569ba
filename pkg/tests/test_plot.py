import re

import numpy as np
import pytest

from fillerhold.plotting import TraceData, km_step_points, km_svg, parse_curves, text_path, thp_svg
from fillerhold.survival import kaplan_meier


@pytest.fixture
def curves():
    return {"with_filler": kaplan_meier(time=[1.2, 2.5, 2.5, 4.0, 10.0], event=[1, 1, 1, 1, 0], group="with_filler"),
            "without_filler": kaplan_meier(time=[0.4, 0.8, 1.1, 1.9], event=[1, 1, 0, 1], group="without_filler")}


def test_deterministic(curves):
    assert km_svg(curves) == km_svg(dict(reversed(list(curves.items()))))


def test_self_contained(curves):
    svg = km_svg(curves)
    assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 400"')
    assert "<text" not in svg and "font" not in svg and "href" not in svg


def test_two_curves_and_legend(curves):
    svg = km_svg(curves)
    assert len(re.findall(r'class="curve"', svg)) == 2
    assert text_path("with filler", 0, 0) and svg.count('data-group="') == 2


def test_parse_back_matches_steps(curves):
    fr, got = parse_curves(km_svg(curves))
    tol_x = 0.005 / fr.width * (fr.xmax - fr.xmin) + 1e-12
    tol_y = 0.005 / fr.height + 1e-12
    for g, km in curves.items():
        xs, ys = km_step_points(km, fr.xmax)
        np.testing.assert_allclose(got[g][0], xs, atol=tol_x)
        np.testing.assert_allclose(got[g][1], ys, atol=tol_y)


def test_step_points_shape():
    km = kaplan_meier(time=[1.0, 2.0], event=[1, 1])
    xs, ys = km_step_points(km, 3.0)
    assert list(xs) == [0, 1, 1, 2, 2, 3]
    assert list(ys) == [1, 1, 0.5, 0.5, 0, 0]


def test_thp_trace():
    times = np.arange(1500) / 50
    values = np.where(times < 20.8, 0.9, 0.1)
    tr = TraceData(times, values, 20.0, 20.8)
    svg = thp_svg(tr)
    assert svg == thp_svg(tr)
    assert 'class="threshold"' in svg and 'class="shift"' in svg and 'class="onset"' in svg
    fr, got = parse_curves(svg)
    np.testing.assert_allclose(got["thp"][1], values, atol=0.005 / fr.height + 1e-12)
    assert 'class="shift"' not in thp_svg(TraceData(times, np.full(1500, 0.9), 20.0, None))


def test_text_path_anchor():
    left = text_path("AB", 100, 50, 8)
    mid = text_path("AB", 100, 50, 8, "middle")
    assert left != mid and text_path("ab", 0, 10) == text_path("AB", 0, 10)
    assert text_path("", 0, 0) == ""
