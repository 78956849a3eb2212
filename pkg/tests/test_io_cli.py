import json
import pathlib

import pytest

from causaloid import cli
from causaloid import library as lib
from causaloid.errors import ModelFileError
from causaloid.io import (model_from_dict, model_to_dict, parse_model,
                          parse_queries, serialize_model)

MODELFILES = pathlib.Path(__file__).resolve().parent.parent / "modelfiles"


@pytest.mark.parametrize("name", ["chain4", "grid", "direction_mix",
                                  "qubit_pair", "collider"])
def test_model_files_round_trip_byte_identically(name, tmp_path):
    path = MODELFILES / f"{name}.json"
    model = parse_model(str(path))
    assert serialize_model(model) == path.read_text()


def test_every_library_model_round_trips():
    for factory in lib.ALL_MODELS:
        model = factory(4) if factory in (lib.classical_chain,
                                          lib.noisy_chain) else factory()
        doc = model_to_dict(model)
        again = model_from_dict(json.loads(json.dumps(doc)))
        assert model_to_dict(again) == doc


def test_parse_rejects_missing_file(tmp_path, capsys):
    with pytest.raises(ModelFileError) as err:
        parse_model(str(tmp_path / "nope.json"))
    assert err.value.code == "UNREADABLE"


def test_parse_rejects_bad_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ModelFileError) as err:
        parse_model(str(p))
    assert err.value.code == "BAD_JSON"


def test_parse_rejects_wrong_format_tag(tmp_path):
    p = tmp_path / "wrong.json"
    p.write_text(json.dumps({"format": "causaloid-model/999"}))
    with pytest.raises(ModelFileError) as err:
        parse_model(str(p))
    assert err.value.code == "BAD_FORMAT"


def test_query_file_validates_symbols(tmp_path):
    model = parse_model(str(MODELFILES / "chain4.json"))
    p = tmp_path / "queries.json"
    p.write_text(json.dumps({
        "format": "causaloid-queries/1",
        "queries": [{"region1": ["1"], "outcomes1": {"1": "7"},
                     "settings1": {"1": "g0"},
                     "region2": ["2"], "outcomes2": {"2": "0"},
                     "settings2": {"2": "g0"}}]}))
    with pytest.raises(ModelFileError):
        parse_queries(str(p), model)


# -- command line -----------------------------------------------------------


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_cli_compress_structured_is_deterministic(capsys):
    model = str(MODELFILES / "chain4.json")
    code1, out1, _ = _run(capsys, "compress", model, "--format", "structured")
    code2, out2, _ = _run(capsys, "compress", model, "--format", "structured")
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["stored_matrices"] == 7  # 4 nodes + 3 linked pairs
    assert doc["region_count"] == 15


def test_cli_query_reports_per_row(capsys):
    code, out, _ = _run(capsys, "query", str(MODELFILES / "chain4.json"),
                        str(MODELFILES / "chain4_queries.json"),
                        "--format", "structured", "--oracle-check")
    assert code == 0
    doc = json.loads(out)
    assert doc["queries"]
    for row in doc["queries"]:
        if "error" in row:
            continue
        assert isinstance(row["well_defined"], bool)
        if row["well_defined"]:
            lo, hi = row["literal_bounds"]
            assert lo - 1e-9 <= row["value"] <= hi + 1e-9


def test_cli_collider_query_flags_degenerate_bounds(capsys):
    code, out, _ = _run(capsys, "query", str(MODELFILES / "collider.json"),
                        str(MODELFILES / "collider_queries.json"),
                        "--format", "structured")
    assert code == 0
    doc = json.loads(out)
    flagged = [row for row in doc["queries"]
               if row.get("phi_degenerate_flag")]
    undefined = [row for row in doc["queries"]
                 if row.get("well_defined") is False]
    assert undefined, "collider queries must include not-well-defined rows"
    assert flagged, "the vacuous literal interval must be flagged"


def test_cli_evolve_and_run(capsys, tmp_path):
    model = str(MODELFILES / "chain4.json")
    code, out, _ = _run(capsys, "evolve", model,
                        str(MODELFILES / "chain4_foliation.json"),
                        "--format", "structured")
    assert code == 0
    doc = json.loads(out)
    assert all(step["residual"] < 1e-9 for step in doc["steps"])

    code, out, _ = _run(capsys, "run", model,
                        str(MODELFILES / "chain4_program.json"),
                        "--seed", "7", "--shots", "20",
                        "--format", "structured")
    assert code == 0
    doc = json.loads(out)
    assert sum(doc["counts"].values()) == 20


def test_cli_exit_codes(capsys, tmp_path):
    code, _, err = _run(capsys, "compress", str(tmp_path / "missing.json"))
    assert code == cli.EXIT_PARSE and "UNREADABLE" in err

    bad = tmp_path / "bad.json"
    doc = json.loads((MODELFILES / "chain4.json").read_text())
    doc["gates"]["1"]["g0"]["0"][0][2] = 0.9  # break row stochasticity
    bad.write_text(json.dumps(doc))
    code, _, err = _run(capsys, "compress", str(bad))
    assert code == cli.EXIT_PARSE and "GATE_NOT_STOCHASTIC" in err


def test_cli_text_rendering_matches_structured_content(capsys):
    model = str(MODELFILES / "chain4.json")
    code, text_out, _ = _run(capsys, "compress", model)
    assert code == 0
    assert "stored_matrices: 7" in text_out
