import json
from importlib import resources

import pytest

from loopss.scenarios import PresetId, materialize, serialize_scenario


def shipped(name: str) -> str:
    return (resources.files("loopss") / "data" / name).read_text()


@pytest.fixture
def path2_file(tmp_path):
    path = tmp_path / "path_cpn_diag_2.json"
    path.write_text(shipped("path_cpn_diag_2.json"))
    return path


@pytest.fixture
def pair2_file(tmp_path):
    path = tmp_path / "free_loop_cpn_2.json"
    path.write_text(shipped("free_loop_cpn_2.json"))
    return path


@pytest.fixture
def path2_without_top_file(tmp_path):
    doc = json.loads(shipped("path_cpn_diag_2.json"))
    doc["assignments"] = [a for a in doc["assignments"] if a["page"] == 2]
    path = tmp_path / "path_no_top.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


@pytest.fixture
def corrupted_file(tmp_path):
    # d_2(y[1]) = u c1 + 3 u c2 does not square to zero against d_2(u) = c1 - c2
    doc = json.loads(serialize_scenario(materialize(PresetId("path_cpn_diag", n=1))))
    doc["assignments"][1] = {"page": 2, "source": "y[1]", "image": "u*c1 + 3*u*c2"}
    path = tmp_path / "corrupted.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


@pytest.fixture
def malformed_file(tmp_path):
    doc = json.loads(shipped("path_cpn_diag_2.json"))
    doc["assignments"][0]["image"] = "c1 - ** c2"
    path = tmp_path / "malformed.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
