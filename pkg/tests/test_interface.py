import json

import pytest
from fastapi.testclient import TestClient

from devinv.cli import main
from devinv.config import find_config, load_config
from devinv.service import create_app


@pytest.fixture(scope="module")
def config_path(fixtures_dir):
    return str(fixtures_dir / "config.yaml")


@pytest.fixture(scope="module")
def client(config_path):
    return TestClient(create_app(load_config(config_path)))


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- config ---------------------------------------------------------------------

def test_config_loads_providers(config_path):
    config = load_config(config_path)
    assert config.default_chat == "replay"
    assert config.provider("hash64").dimension == 64
    assert config.provider("replay").kind == "replay_chat"
    # built-in shorthand needs no config entry
    assert config.provider("hash32").dimension == 32
    with pytest.raises(KeyError):
        config.provider("nope")


def test_config_env_var(monkeypatch, config_path):
    monkeypatch.setenv("DEVINV_CONFIG", config_path)
    assert find_config(None).default_chat == "replay"
    monkeypatch.delenv("DEVINV_CONFIG")
    assert find_config(None).default_chat is None


def test_config_rejects_unknown_default(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("default_chat: ghost\nproviders: {}\n")
    with pytest.raises(ValueError):
        load_config(str(bad))


# --- CLI -------------------------------------------------------------------------

def test_cli_ingest(capsys, config_path):
    code, out, _ = run_cli(capsys, "--config", config_path, "ingest")
    assert code == 0
    assert "loaded 20 records" in out


def test_cli_ingest_write_round_trip(capsys, config_path, tmp_path, fixtures_dir):
    target = tmp_path / "copy.jsonl"
    code, _, _ = run_cli(capsys, "--config", config_path, "ingest", "--write", str(target))
    assert code == 0
    assert len(target.read_text().splitlines()) == 20


def test_cli_matrix_csv(capsys, config_path):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "matrix", "--embed", "hash64", "--format", "csv"
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 21
    assert lines[0].startswith("id,inc-001,")
    diagonal = [float(lines[i + 1].split(",")[i + 1]) for i in range(20)]
    assert diagonal == [1.0] * 20


def test_cli_search_csv(capsys, config_path):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "search",
        "--query", "broken glass vial on the line",
        "--phrase", "glass", "--top-k", "3", "--format", "csv",
    )
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "rank,record_id,similarity"
    assert [r.split(",")[1] for r in rows[1:3]] == ["inc-020", "inc-014"]


def test_cli_search_top_k_zero_is_domain_error(capsys, config_path):
    code, _, err = run_cli(
        capsys, "--config", config_path, "search", "--query", "x", "--top-k", "0"
    )
    assert code == 1
    assert "top_k" in err


def test_cli_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["search"])  # missing required --query
    assert exit_info.value.code == 2


def test_cli_unknown_provider_is_domain_error(capsys, config_path):
    code, _, err = run_cli(
        capsys, "--config", config_path, "search", "--query", "x", "--embed", "ghost"
    )
    assert code == 1
    assert "ghost" in err


def test_cli_embed_saves_index(capsys, config_path, tmp_path):
    out_path = tmp_path / "fixture.dvix"
    code, out, _ = run_cli(
        capsys, "--config", config_path, "embed", "--embed", "hash64",
        "--out", str(out_path),
    )
    assert code == 0
    assert out_path.exists()
    code, out, _ = run_cli(
        capsys, "--config", config_path, "matrix", "--index", str(out_path),
        "--format", "csv",
    )
    assert code == 0


def test_cli_extract_single(capsys, config_path):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "extract",
        "--record", "inc-001", "--task", "occurrence_date", "--format", "csv",
    )
    assert code == 0
    assert "inc-001,occurrence_date,replay,2021-03-12" in out


def test_cli_evaluate_matches_committed_table(capsys, config_path, fixtures_dir):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "evaluate", "--format", "csv"
    )
    assert code == 0
    expected = (fixtures_dir / "expected_extraction_report.csv").read_text()
    assert out == expected


def test_cli_ask_with_audit(capsys, config_path, tmp_path):
    audit = tmp_path / "audit.jsonl"
    code, out, _ = run_cli(
        capsys, "--config", config_path, "ask",
        "--question", "what usually causes broken glass on a filling line?",
        "--phrase", "glass", "--top-k", "2", "--budget-chars", "4000",
        "--audit-log", str(audit),
    )
    assert code == 0
    assert "based on retrieved records" in out
    entry = json.loads(audit.read_text().splitlines()[0])
    assert entry["mode"] == "rag"
    assert entry["cited_record_ids"] == ["inc-020", "inc-014"]


def test_cli_ask_fallback_mode(capsys, config_path):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "ask",
        "--question", "what deviations occurred at the mars site?",
        "--filter", "site=mars",
    )
    assert code == 0
    assert "mode: zero_shot" in out
    assert "no related records found" in out


def test_cli_missing_corpus_is_domain_error(capsys):
    code, _, err = run_cli(capsys, "search", "--query", "x")
    assert code == 1
    assert "corpus" in err


# --- service ------------------------------------------------------------------------

def test_get_record(client):
    response = client.get("/records/inc-001")
    assert response.status_code == 200
    body = response.json()
    assert body["id"] == "inc-001"
    assert body["metadata"]["site"] == "rahway"
    assert body["normalized_text"].startswith("on 12 march 2021")


def test_get_record_unknown_404(client):
    assert client.get("/records/inc-999").status_code == 404


def test_post_search(client):
    response = client.post(
        "/search",
        json={"text": "broken glass vial on the line", "phrase_filters": ["glass"],
              "top_k": 3},
    )
    assert response.status_code == 200
    hits = response.json()["hits"]
    assert [h["record_id"] for h in hits[:2]] == ["inc-020", "inc-014"]
    assert hits[0]["rank"] == 1


def test_post_search_top_k_zero_400(client):
    response = client.post("/search", json={"text": "x", "top_k": 0})
    assert response.status_code == 400


def test_post_search_malformed_body_400(client):
    assert client.post("/search", json={"top_k": 3}).status_code == 400


def test_post_extract(client):
    response = client.post(
        "/extract", json={"record_id": "inc-001", "task": "occurrence_date"}
    )
    assert response.status_code == 200
    assert response.json()["parsed"] == "2021-03-12"


def test_post_extract_unknown_record_404(client):
    response = client.post("/extract", json={"record_id": "inc-999", "task": "site"})
    assert response.status_code == 404


def test_post_extract_unknown_task_400(client):
    response = client.post("/extract", json={"record_id": "inc-001", "task": "mood"})
    assert response.status_code == 400


def test_post_ask_deterministic(client):
    body = {"question": "summarize recent deviations at cork",
            "metadata_filters": {"site": "cork"}, "top_k": 3}
    first = client.post("/ask", json=body)
    second = client.post("/ask", json=body)
    assert first.status_code == 200
    assert first.json() == second.json()
    assert first.json()["mode"] == "rag"


def test_post_ask_unscripted_question_502(client):
    response = client.post("/ask", json={"question": "entirely novel question?"})
    assert response.status_code == 502


def test_get_report_csv_matches_committed(client, fixtures_dir):
    response = client.get("/report", params={"format": "csv"})
    assert response.status_code == 200
    assert response.text == (fixtures_dir / "expected_extraction_report.csv").read_text()


def test_cli_service_parity_spot_check(capsys, config_path, client):
    code, out, _ = run_cli(
        capsys, "--config", config_path, "search",
        "--query", "visible particle at inspection", "--top-k", "4", "--format", "csv",
    )
    assert code == 0
    response = client.post(
        "/search", params={"format": "csv"},
        json={"text": "visible particle at inspection", "top_k": 4},
    )
    assert response.content == out.encode("utf-8")
