import json
import pathlib

import pytest

import iva_bench as iva

GOLDEN = pathlib.Path(__file__).resolve().parent.parent / "data" / "golden"


def golden(name):
    return (GOLDEN / f"{name}.txt").read_text()


def test_version():
    assert iva.__version__ == "0.1.0"


def test_instruction_round_trip():
    history = [["0"] * 7 for _ in range(4)]
    history.append(["0.0115", "0.1585", "-0.0003", "-0.8588", "0.0045", "1.2363", "0.8086"])
    text = iva.render_instruction("Franka", "joint", "take the chicken off the grill", history)
    assert text in golden("tp_human")
    spec = iva.parse_instruction(text)
    assert spec["task_sentence"] == "take the chicken off the grill"
    assert spec["horizon"] == 1
    assert len(spec["history"]) == 5
    assert spec["history"][-1][3] == pytest.approx(-0.8588)


def test_float_history_is_canonical():
    text = iva.render_instruction("Franka", "joint", "open the drawer", [[0.5, 0, 0, 0, 0, 0, 1.23456]])
    assert "[[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 1.2346]]" in text


def test_parse_error_carries_position():
    with pytest.raises(iva.ParseError) as info:
        iva.parse_instruction("You are a Franka robot")
    assert info.value.position > 0
    assert isinstance(info.value, ValueError)


def test_sample_responses():
    clarify = iva.parse_response(golden("id_gpt_clarify"))
    assert clarify == {"kind": "clarify", "missing_object": "drawer", "suggested_object": "chicken"}
    refuse = iva.parse_response(golden("ood_gpt_refuse"))
    assert refuse["kind"] == "refuse"
    accept = iva.parse_response(golden("tp_gpt_accept"))
    assert accept["kind"] == "accept"
    assert len(accept["visual_trace"]) == 24
    assert accept["action"][-1] == 1.0
    for name in ("id_gpt_clarify", "ood_gpt_refuse", "tp_gpt_accept"):
        assert iva.render_response(iva.parse_response(golden(name))) == golden(name)


def test_malformed_cannot_render():
    r = iva.parse_response("sure, moving now")
    assert r == {"kind": "malformed", "raw_text": "sure, moving now"}
    with pytest.raises(iva.IvaError):
        iva.render_response(r)


def test_dataset_arithmetic():
    assert iva.partition_counts(100) == {"in_domain": 65, "out_of_domain": 20, "true_premise": 15}
    assert iva.fp_step_count(20, 0.1) == 2
    assert iva.fp_step_count(3, 0.1) == 1
    assert iva.overall_success(0.84, 0.32) == pytest.approx(0.58)
    assert iva.extract_target_noun("take the chicken off the grill") == "chicken"
    assert iva.head_noun("blue safe") == "safe"
    assert any(name == "meat_off_grill" for name, _ in iva.builtin_tasks())


def test_cli_generate_and_evaluate(tmp_path):
    data = tmp_path / "data.jsonl"
    code, _, err = iva.run_cli(["generate", "--episodes", "30", "--seed", "5", "--out", str(data)])
    assert code == 0, err
    manifest = json.loads((tmp_path / "data.manifest.json").read_text())
    assert manifest["counts"]["episodes"] == 30

    out = tmp_path / "run"
    code, stdout, err = iva.run_cli(
        ["evaluate", "--dataset", str(data), "--policy", "builtin:oracle", "--out", str(out)])
    assert code == 0, err
    assert "| Task |" in stdout
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["suite"]["overall"] == pytest.approx(1.0)


def test_cli_usage_error():
    code, _, err = iva.run_cli(["evaluate"])
    assert code == 1
    assert err
