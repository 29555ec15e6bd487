"""Tests for the self-contained SVG line plots."""

import numpy as np
import pytest

from voicepair.errors import ShapeError
from voicepair.svgplot import line_plot_svg


def _demo():
    x = np.linspace(0.0, 1000.0, 41)
    y = np.exp(-((x - 400.0) ** 2) / (2 * 120.0 ** 2))
    return x, {"mean": y, "std": 0.1 * y}


class TestLinePlot:
    def test_basic_structure(self):
        x, series = _demo()
        svg = line_plot_svg(x, series, title="importance", x_label="Hz",
                            y_label="weight")
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        assert svg.count("<polyline ") == 2
        assert 'data-series="mean"' in svg
        assert 'data-series="std"' in svg
        assert "importance" in svg and "Hz" in svg and "weight" in svg

    def test_peak_annotation_reads_back_argmax(self):
        x, series = _demo()
        svg = line_plot_svg(x, series, annotate_peak="mean")
        assert 'data-peak-series="mean"' in svg
        assert 'data-peak-hz="400"' in svg
        assert 'data-peak-value="1"' in svg

    def test_band_shading(self):
        x, series = _demo()
        svg = line_plot_svg(x, series, band=(300.0, 500.0), band_label="planted")
        assert 'data-band-lo="300"' in svg
        assert 'data-band-hi="500"' in svg
        assert "planted" in svg

    def test_deterministic(self):
        x, series = _demo()
        a = line_plot_svg(x, series, annotate_peak="mean", band=(300, 500))
        b = line_plot_svg(x, series, annotate_peak="mean", band=(300, 500))
        assert a == b

    def test_constant_series_does_not_divide_by_zero(self):
        x = np.array([0.0, 1.0, 2.0])
        svg = line_plot_svg(x, {"flat": np.zeros(3)})
        assert "<polyline " in svg
        assert "nan" not in svg.lower()

    def test_length_mismatch_raises(self):
        x, series = _demo()
        series["bad"] = np.zeros(5)
        with pytest.raises(ShapeError):
            line_plot_svg(x, series)

    def test_short_x_raises(self):
        with pytest.raises(ShapeError):
            line_plot_svg([1.0], {"a": [2.0]})

    def test_empty_series_raises(self):
        with pytest.raises(ShapeError):
            line_plot_svg([0.0, 1.0], {})

    def test_unknown_peak_series_raises(self):
        x, series = _demo()
        with pytest.raises(ShapeError):
            line_plot_svg(x, series, annotate_peak="nope")
