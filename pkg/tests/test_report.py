import json
import math
from pathlib import Path

import numpy as np
import pytest

from concavity_lab.body import make_disk, make_fourier
from concavity_lab.measure import make_gaussian, shift
from concavity_lab.report import (HOLDS, INCONCLUSIVE, VIOLATED, combine, csv_text,
                                  dumps, format_number, hypothesis_flags, identity,
                                  inequality, report_meta, write_json)


def test_inequality_margins_are_signed_by_direction():
    le = inequality("le", 1.0, 2.0, tolerance=1e-7)
    assert (le.margin, le.verdict) == (1.0, HOLDS)
    ge = inequality("ge", 1.0, 2.0, tolerance=1e-7, direction="ge")
    assert ge.margin == -1.0
    assert ge.verdict == VIOLATED
    assert ge.residual == pytest.approx(0.5)


def test_inequality_tolerance_is_relative():
    assert inequality("near", 100.0 + 1e-6, 100.0, tolerance=1e-7).verdict == HOLDS
    assert inequality("far", 100.0 + 1e-4, 100.0, tolerance=1e-7).verdict == VIOLATED


def test_non_finite_values_are_inconclusive():
    assert inequality("nan", math.nan, 1.0, tolerance=1e-7).verdict == INCONCLUSIVE
    assert identity("inf", math.inf, 1.0, tolerance=1e-7).verdict == INCONCLUSIVE


def test_identity_residual():
    report = identity("same", 3.0, 3.0 + 1e-9, tolerance=1e-7)
    assert report.holds
    assert report.residual == pytest.approx(1e-9 / 3.0)
    assert identity("given", 0.0, 5.0, tolerance=1e-7, residual=0.0).holds


def test_combine_keeps_subchecks():
    parts = [
        inequality("a", 1.0, 2.0, tolerance=1e-7),
        identity("b", 1.0, 1.5, tolerance=1e-7),
    ]
    report = combine("both", parts)
    assert report.verdict == VIOLATED
    assert report.kind == "composite"
    assert set(report.details["subchecks"]) == {"a", "b"}
    assert combine("ok", parts[:1]).holds


def test_hypothesis_flags():
    assert hypothesis_flags(make_gaussian(), make_disk(1.0)) == []
    asymmetric = make_fourier(1.0, [(3, 0.01, 0.0)], symmetric=False)
    assert hypothesis_flags(make_gaussian(), make_disk(1.0), asymmetric) == [
        "hypotheses violated",
        "body 2 not symmetric",
    ]
    assert "measure not even" in hypothesis_flags(shift(make_gaussian(), [0.1, 0.0]), make_disk(1.0))


def test_json_is_sorted_and_finite(tmp_path: Path):
    payload = {"b": np.float64(1.5), "a": [np.int64(2), math.nan], "c": np.array([True, False])}
    text = dumps(payload)
    assert json.loads(text) == {"a": [2, None], "b": 1.5, "c": [True, False]}
    assert text.index('"a"') < text.index('"b"')
    target = tmp_path / "nested" / "report.json"
    write_json(target, {"meta": report_meta(config_hash="cfg-0", resolution={"N": 4}, tolerance=1e-7)})
    assert "seed" not in json.loads(target.read_text())["meta"]


def test_csv_formatting():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(None) == ""
    assert csv_text(("t", "v"), [(0.0, None)]) == "t,v\n0,\n"
