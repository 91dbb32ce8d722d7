"""End-to-end tests driving the command line through a real subprocess."""

import json
import os
import subprocess
import sys

from nearstat.zoo import ChannelInstance, instance_to_json


def run_cli(*argv, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "nearstat.cli", *argv],
        capture_output=True,
        text=True,
        env=env,
    )


def channel_doc() -> str:
    return json.dumps(instance_to_json(ChannelInstance(w=[0.3, 0.0], clamp=-1.0)))


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_remark_suite_passes():
    proc = run_cli("verify", "--suite", "remark", "--seed", "7")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert all(line.startswith("[PASS]") for line in lines[:-1])
    assert "(verify:remark" in lines[-1]


def test_verify_writes_report_when_asked(tmp_path):
    out = tmp_path / "reports"
    proc = run_cli("verify", "--suite", "remark", "--output_path", str(out))
    assert proc.returncode == 0
    report = json.loads((out / "report.json").read_text())
    assert report["kind"] == "verify:remark"
    assert all(v["passed"] for v in report["verdicts"])


def test_verify_rejects_stray_arguments():
    proc = run_cli("verify", "--suite", "remark", "--bogus", "1")
    assert proc.returncode == 2
    assert "config error" in proc.stderr


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_reads_config_and_writes_reports(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "quad_lower_bound", "T": 2}))
    proc = run_cli("run", "--config", str(cfg), "--output_path", str(tmp_path / "out"))
    assert proc.returncode == 0
    assert "[PASS] AC1" in proc.stdout
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["T"] == 2
    assert len(report["records"]["distances"]) == 2
    transcript_lines = (tmp_path / "out" / "transcript.jsonl").read_text().splitlines()
    assert len(transcript_lines) == 2


def test_run_failing_verdict_exits_one(tmp_path):
    # the curvature-probing solver lands inside the exp(-3) shell on the
    # three-step chain, which makes this a stable failing configuration
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "quad_lower_bound", "T": 3}))
    proc = run_cli(
        "run", "--config", str(cfg), "--solver.name", "steepest",
        "--output_path", str(tmp_path / "out"),
    )
    assert proc.returncode == 1
    assert "[FAIL] AC1" in proc.stdout


def test_run_honors_output_dir_environment(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "quad_lower_bound", "T": 2}))
    out = tmp_path / "from_env"
    proc = run_cli(
        "run", "--config", str(cfg), env_extra={"NEARSTAT_OUTPUT_DIR": str(out)}
    )
    assert proc.returncode == 0
    assert sorted(p.name for p in out.iterdir()) == ["report.json", "transcript.jsonl"]


def test_run_missing_config_file_exits_one(tmp_path):
    proc = run_cli("run", "--config", str(tmp_path / "nope.json"))
    assert proc.returncode == 1
    assert "error:" in proc.stderr


def test_run_unknown_config_field_exits_two(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "quad_lower_bound", "bogus": 1}))
    proc = run_cli("run", "--config", str(cfg))
    assert proc.returncode == 2
    assert "config error" in proc.stderr


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


def test_certify_prints_certificates_and_succeeds():
    proc = run_cli(
        "certify", "--function", channel_doc(), "--point", "0,0", "--eps", "2.5"
    )
    assert proc.returncode == 0
    certs = json.loads(proc.stdout)
    assert certs[0]["certified"] is True
    assert certs[0]["value"] == 2.0


def test_certify_refutation_counts_as_answered():
    # eps below the region-wise gradient-norm floor: the bound refutes it
    proc = run_cli(
        "certify", "--function", channel_doc(), "--point", "[0.0, 0.0]", "--eps", "0.5"
    )
    assert proc.returncode == 0
    certs = json.loads(proc.stdout)
    assert certs[0]["certified"] is False
    assert len(certs) == 2


def test_certify_unanswered_exits_one():
    # eps sits between the floor and the actual gradient norm, so neither
    # the certificate nor the bound settles the question
    proc = run_cli(
        "certify", "--function", channel_doc(), "--point", "0,0", "--eps", "1.5"
    )
    assert proc.returncode == 1


def test_certify_function_file_variant(tmp_path):
    path = tmp_path / "fn.json"
    path.write_text(channel_doc())
    proc = run_cli(
        "certify", "--function-file", str(path), "--point", "0,0", "--eps", "2.5"
    )
    assert proc.returncode == 0


def test_certify_requires_exactly_one_function_source(tmp_path):
    proc = run_cli("certify", "--point", "0,0", "--eps", "1.0")
    assert proc.returncode == 2
    path = tmp_path / "fn.json"
    path.write_text(channel_doc())
    proc = run_cli(
        "certify", "--function", channel_doc(), "--function-file", str(path),
        "--point", "0,0", "--eps", "1.0",
    )
    assert proc.returncode == 2


# ---------------------------------------------------------------------------
# adversary and figure-data
# ---------------------------------------------------------------------------


def test_adversary_writes_instance_files(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"T": 5, "output_path": str(tmp_path / "adv")}))
    proc = run_cli("adversary", "--config", str(cfg))
    assert proc.returncode == 0
    names = sorted(p.name for p in (tmp_path / "adv").iterdir())
    assert names == ["diagnostics.json", "instance.json", "transcript.jsonl"]
    doc = json.loads((tmp_path / "adv" / "instance.json").read_text())
    assert doc["kind"] == "channel_composed"


def test_figure_data_stdout_with_grid_override():
    proc = run_cli("figure-data", "--figure", "fig3", "--grid.nu", "5", "--grid.nv", "4")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "u,v,value"
    assert len(lines) == 1 + 5 * 4


def test_figure_data_writes_file(tmp_path):
    out = tmp_path / "fig2.csv"
    proc = run_cli(
        "figure-data", "--figure", "fig2", "--grid.nu", "3", "--grid.nv", "3",
        "--out", str(out),
    )
    assert proc.returncode == 0
    assert out.read_text().startswith("u,v,value")


def test_figure_data_rejects_non_grid_flags():
    proc = run_cli("figure-data", "--figure", "fig1", "--nu", "3")
    assert proc.returncode == 2
    assert "--grid.<field>" in proc.stderr
