from pathlib import Path

import pytest
import yaml

from abusecascade.embed import HashEmbedder

FIXTURES = Path(__file__).parent / "fixtures"
COUNTS = FIXTURES / "label_counts"

HEADER = "text_id\ttext\ttask_1\ttask_2\ttask_3"


def write_tsv(path, rows, header=HEADER):
    lines = [header] + ["\t".join(r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


@pytest.fixture
def providers():
    return [HashEmbedder(768, 1), HashEmbedder(1024, 2)]


@pytest.fixture
def make_config(tmp_path):
    def make(language="EN", **overrides):
        raw = {
            "language": language,
            "providers": {
                "transformer": {"kind": "test", "dim": 768, "seed": 11},
                "laser": {"kind": "test", "dim": 1024, "seed": 12},
            },
            "model": "model.hmdl",
            "cache": "features.embc",
            "seed": 7,
        }
        raw.update(overrides)
        path = tmp_path / f"config_{language}.yaml"
        path.write_text(yaml.safe_dump(raw), encoding="utf-8")
        return path

    return make


# acceptance summary: one pass/fail line per criterion at the end of the run
_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when not in ("setup", "call"):
        return
    number, title = marker.args
    outcome = "FAIL" if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception) else "PASS"
    if call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception):
        outcome = "SKIP"
    prev = _CRITERIA.get(number, (title, "PASS"))[1]
    if call.when == "setup" and outcome == "PASS":
        return
    rank = {"PASS": 0, "SKIP": 1, "FAIL": 2}
    if number not in _CRITERIA or rank[outcome] > rank[prev]:
        _CRITERIA[number] = (title, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"[{outcome}] criterion {number}: {title}")
