import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abusecascade.corpus import LabelSet, Language, Task
from abusecascade.errors import ConfigError, DataError
from abusecascade.evaluation import (
    EvaluationReport,
    confusion,
    evaluate_cascade,
    macro_f1,
    per_class_f1,
    render_report,
    reports_from_json,
    round_score,
)

from f1_oracle import brute_force_f1

AB = ["HOF", "NOT"]


def test_confusion_perfect():
    cm = confusion(["HOF", "NOT"], ["HOF", "NOT"], AB)
    assert cm.counts.tolist() == [[1, 0], [0, 1]]


def test_confusion_total_miss():
    cm = confusion(["HOF", "HOF"], ["NOT", "NOT"], AB)
    assert cm.counts.tolist() == [[0, 2], [0, 0]]
    assert cm.total == 2


def test_confusion_empty():
    assert confusion([], [], AB).counts.tolist() == [[0, 0], [0, 0]]


def test_confusion_errors():
    with pytest.raises(DataError, match="labels"):
        confusion(["HOF"], [], AB)
    with pytest.raises(DataError, match="PRFN"):
        confusion(["HOF"], ["PRFN"], AB)


def test_f1_half_half():
    cm = confusion(["HOF", "NOT", "HOF", "NOT"], ["HOF", "HOF", "NOT", "NOT"], AB)
    assert per_class_f1(cm) == {"HOF": 0.5, "NOT": 0.5}


def test_f1_perfect():
    gold = ["HATE", "OFFN", "PRFN", "NONE", "NONE"]
    assert set(per_class_f1(confusion(gold, gold, ["HATE", "OFFN", "PRFN", "NONE"])).values()) == {1.0}


def test_f1_absent_class_is_zero():
    cm = confusion(["HATE", "NONE"], ["HATE", "NONE"], ["HATE", "OFFN", "PRFN", "NONE"])
    f1 = per_class_f1(cm)
    assert f1["OFFN"] == 0.0 and f1["PRFN"] == 0.0 and f1["HATE"] == 1.0


def test_macro_f1_published_values():
    assert round_score(macro_f1({"HOF": 0.59, "NOT": 0.79}, AB)) == "0.69"
    german_b = macro_f1({"HATE": 0.04, "OFFN": 0.00, "PRFN": 0.19, "NONE": 0.87}, ["HATE", "OFFN", "PRFN", "NONE"])
    assert german_b == pytest.approx(0.275, abs=1e-12)
    assert round_score(german_b) == "0.28"
    assert round_score(macro_f1({"TIN": 0.63, "UNT": 0.17, "NONE": 0.79}, ["TIN", "UNT", "NONE"])) == "0.53"


def test_macro_f1_errors():
    with pytest.raises(DataError):
        macro_f1({}, [])
    with pytest.raises(DataError):
        macro_f1({"HOF": 1.0}, AB)


def test_macro_ignores_support():
    assert macro_f1({"HOF": 1.0, "NOT": 0.0}, AB) == 0.5


@pytest.mark.parametrize(
    "value, half_up, half_even",
    [(0.615, "0.62", "0.62"), (0.345, "0.35", "0.34"), (0.275, "0.28", "0.28"), (0.775, "0.78", "0.78"),
     (1.38 / 4, "0.35", "0.34"), (0.0, "0.00", "0.00"), (1.0, "1.00", "1.00"), (0.004999, "0.00", "0.00")],
)
def test_rounding_modes(value, half_up, half_even):
    assert round_score(value, "half-up") == half_up
    assert round_score(value, "half-even") == half_even


def test_rounding_mode_validated():
    with pytest.raises(ConfigError):
        round_score(0.5, "down")


def _labelsets(rng, n, language):
    out = []
    for _ in range(n):
        if rng.random() < 0.5:
            out.append(LabelSet("NOT"))
        else:
            c = rng.choice(["TIN", "UNT"]) if language is not Language.DE else "NONE"
            out.append(LabelSet("HOF", rng.choice(["HATE", "OFFN", "PRFN"]), c))
    return out


def test_evaluate_identity():
    gold = _labelsets(random.Random(0), 50, Language.EN)
    reports = evaluate_cascade(gold, gold, "EN")
    assert [r.task for r in reports] == [Task.A, Task.B, Task.C]
    assert all(r.macro_f1 == 1.0 for r in reports)


def test_evaluate_german_two_reports():
    gold = _labelsets(random.Random(1), 20, Language.DE)
    assert [r.task for r in evaluate_cascade(gold, gold, "DE")] == [Task.A, Task.B]


def test_evaluate_length_mismatch():
    with pytest.raises(DataError):
        evaluate_cascade([LabelSet("NOT")], [], "EN")


def test_none_equals_not_when_b_follows_a():
    rng = random.Random(5)
    gold = _labelsets(rng, 80, Language.EN)
    # task A errors in both directions; B/C given by cascade of predicted A
    pred = []
    for g in gold:
        flip = rng.random() < 0.2
        if (g.task_a == "HOF") != flip:
            pred.append(LabelSet("HOF", rng.choice(["HATE", "OFFN", "PRFN"]), rng.choice(["TIN", "UNT"])))
        else:
            pred.append(LabelSet("NOT"))
    a, b, c = evaluate_cascade(gold, pred, "EN")
    assert b.per_class_f1["NONE"] == a.per_class_f1["NOT"]
    assert c.per_class_f1["NONE"] == a.per_class_f1["NOT"]
    assert b.support["NONE"] == a.support["NOT"]


def test_render_text_table():
    report = EvaluationReport(Language.EN, Task.A, {"HOF": 0.59, "NOT": 0.79}, 0.69, {"HOF": 1, "NOT": 1})
    lines = render_report([report]).splitlines()
    assert "HOF 0.59" in lines and "NOT 0.79" in lines and "Total 0.69" in lines
    assert lines.index("HOF 0.59") < lines.index("NOT 0.79") < lines.index("Total 0.69")


def test_render_multi_language_columns():
    reports = [
        EvaluationReport(Language.EN, Task.A, {"HOF": 0.59, "NOT": 0.79}, 0.69, {}),
        EvaluationReport(Language.DE, Task.A, {"HOF": 0.36, "NOT": 0.87}, 0.615, {}),
        EvaluationReport(Language.HI, Task.A, {"HOF": 0.76, "NOT": 0.79}, 0.775, {}),
    ]
    lines = render_report(reports).splitlines()
    assert "Language EN DE HI" in lines
    assert "Total 0.69 0.62 0.78" in lines


def test_render_empty():
    assert render_report([]) == ""
    assert render_report([], "machine-readable") == ""


def test_render_precision_kept_in_json():
    report = EvaluationReport(Language.DE, Task.A, {"HOF": 0.36, "NOT": 0.87}, 0.615, {"HOF": 136, "NOT": 714})
    assert "Total 0.62" in render_report([report]).splitlines()
    doc = json.loads(render_report([report], "machine-readable", model_checksums={"m": "abcd"}))
    assert doc[0]["macro_f1"] == 0.615
    assert doc[0]["model_checksums"] == {"m": "abcd"}
    assert set(doc[0]) == {"language", "task", "per_class_f1", "macro_f1", "support",
                           "pipeline_version", "model_checksums"}
    assert reports_from_json(render_report([report], "machine-readable")) == [report]


def test_render_unknown_format():
    report = EvaluationReport(Language.EN, Task.A, {"HOF": 1.0, "NOT": 1.0}, 1.0, {})
    with pytest.raises(ConfigError):
        render_report([report], "html")


# --- properties -------------------------------------------------------------

@st.composite
def labeled_pairs(draw, max_size=20):
    k = draw(st.integers(2, 4))
    classes = ["c0", "c1", "c2", "c3"][:k]
    n = draw(st.integers(0, max_size))
    gold = draw(st.lists(st.sampled_from(classes), min_size=n, max_size=n))
    pred = draw(st.lists(st.sampled_from(classes), min_size=n, max_size=n))
    return classes, gold, pred


@settings(max_examples=200, deadline=None)
@given(labeled_pairs())
def test_f1_matches_bruteforce(data):
    classes, gold, pred = data
    got = per_class_f1(confusion(gold, pred, classes))
    want = brute_force_f1(gold, pred, classes)
    for c in classes:
        assert abs(got[c] - float(want[c])) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(labeled_pairs(), st.randoms())
def test_permutation_invariance(data, rnd):
    classes, gold, pred = data
    pairs = list(zip(gold, pred))
    rnd.shuffle(pairs)
    g2 = [g for g, _ in pairs]
    p2 = [p for _, p in pairs]
    assert per_class_f1(confusion(gold, pred, classes)) == per_class_f1(confusion(g2, p2, classes))


@settings(max_examples=200, deadline=None)
@given(labeled_pairs())
def test_ranges(data):
    classes, gold, pred = data
    f1 = per_class_f1(confusion(gold, pred, classes))
    assert all(0.0 <= v <= 1.0 for v in f1.values())
    assert 0.0 <= macro_f1(f1, classes) <= 1.0
    if gold and not set(gold) & set(pred):
        assert macro_f1(f1, classes) == 0.0


@settings(max_examples=100, deadline=None)
@given(labeled_pairs())
def test_macro_is_mean_after_duplicating_a_class(data):
    classes, gold, pred = data
    extra = [(g, p) for g, p in zip(gold, pred) if g == classes[0]]
    gold2 = gold + [g for g, _ in extra]
    pred2 = pred + [p for _, p in extra]
    f1 = per_class_f1(confusion(gold2, pred2, classes))
    assert macro_f1(f1, classes) == pytest.approx(np.mean([f1[c] for c in classes]), abs=1e-15)
