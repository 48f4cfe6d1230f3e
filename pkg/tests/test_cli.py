import json

import pytest

from ncres import __version__
from ncres.cli import (
    EXIT_MATCH,
    EXIT_MISMATCH,
    RunConfig,
    main,
    render_json,
    render_text,
    run,
    threads_from_env,
    validate_config,
)
from ncres.scalar import InputValidationError, gaussian


def test_validate_config_parses_substitutions():
    """Test that --set assignments become exact values."""
    config = validate_config(RunConfig("phi", substitutions=("hp=0", "W1=1/2,W2=i")))
    assert config.values == {"W1": gaussian("1/2"), "W2": gaussian(0, 1), "hp": gaussian(0)}
    assert config.echo()["substitutions"] == {"W1": "1/2", "W2": "i", "hp": "0"}


def test_validate_config_accepts_geometry_symbols():
    """Test that curvature and connection symbols are valid substitution targets."""
    config = validate_config(RunConfig("functional", substitutions=("s=0", "w12_1=2")))
    assert set(config.values) == {"s", "w12_1"}


def test_validate_config_invalid_inputs():
    """Test rejection of invalid configurations."""
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("plot"))
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("phi", pairing="C"))
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("phi", output_format="yaml"))
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("phi", substitutions=("zeta=1",)))
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("phi", substitutions=("hp",)))
    with pytest.raises(InputValidationError):
        validate_config(RunConfig("phi", threads=0))


def test_threads_from_env():
    """Test the NCRES_THREADS worker count."""
    assert threads_from_env({}) == 1
    assert threads_from_env({"NCRES_THREADS": "4"}) == 4
    for text in ("0", "-2", "many"):
        with pytest.raises(InputValidationError):
            threads_from_env({"NCRES_THREADS": text})


def test_run_functional_document():
    """Test the report document of the functional pipeline."""
    code, document = run(RunConfig("functional"))
    assert code == EXIT_MISMATCH
    assert document["schema"] == 1
    assert document["engine_version"] == __version__
    (section,) = document["sections"]
    assert section["kind"] == "functional"
    assert set(section["comparisons"][0]) == {"target_ref", "engine_expr", "paper_expr", "verdict", "difference"}


def test_run_json_round_trip_and_determinism():
    """Test that JSON output re-serializes identically and runs are repeatable."""
    _, first = run(RunConfig("functional", output_format="json"))
    _, second = run(RunConfig("functional", output_format="json"))
    text = render_json(first)
    assert text == render_json(second)
    assert render_json(json.loads(text)) == text


def test_run_phi_constant_fields_flat_untwisted():
    """Test pairing A with constant fields, h'(0) = 0 and V' = 0 certifies a zero density."""
    derivatives = ",".join(f"d{f}{a}_{j}=0" for f in "UV" for a in range(1, 5) for j in range(1, 5))
    code, document = run(
        RunConfig("phi", pairing="A", substitutions=("hp=0", "W1=0,W2=0,W3=0,W4=0", derivatives))
    )
    assert code == EXIT_MATCH
    (section,) = document["sections"]
    assert section["kind"] == "phi-A"
    assert len(section["cases"]) == 5
    assert section["totals"]["total"] == "0"
    assert section["totals"]["reference_total"] == "0"


def test_main_all_is_byte_identical(tmp_path):
    """Test that two full runs write identical reports."""
    outputs = []
    for name in ("first.json", "second.json"):
        path = tmp_path / name
        with pytest.raises(SystemExit) as exit_info:
            main(["all", "--format", "json", "--output", str(path)])
        assert exit_info.value.code == EXIT_MISMATCH
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    kinds = [section["kind"] for section in json.loads(outputs[0])["sections"]]
    assert kinds == ["trace-identities", "parametrix", "phi-A", "phi-B", "functional"]


def test_render_text_sections():
    """Test the fixed-width text report."""
    _, document = run(RunConfig("parametrix"))
    text = render_text(document)
    assert "== parametrix ==" in text
    assert "target_ref" in text


def test_main_writes_json_report(tmp_path):
    """Test the trace pipeline from the command line."""
    output = tmp_path / "traces.json"
    with pytest.raises(SystemExit) as exit_info:
        main(["verify-traces", "--format", "json", "--output", str(output)])
    assert exit_info.value.code == EXIT_MISMATCH
    document = json.loads(output.read_text())
    assert document["command"] == "verify-traces"
    assert document["sections"][0]["kind"] == "trace-identities"
    assert len(document["sections"][0]["rows"]) > 0


def test_main_invalid_arguments(capsys):
    """Test exit code 1 for bad commands and bad substitutions."""
    with pytest.raises(SystemExit) as exit_info:
        main(["bogus"])
    assert exit_info.value.code == 1
    with pytest.raises(SystemExit) as exit_info:
        main(["functional", "--set", "zeta=1"])
    assert exit_info.value.code == 1
    assert "Error:" in capsys.readouterr().err
