import logging

from cxhyp.env_validation import get_env_bool, get_env_int, report_runtime_env, validate_runtime_env


def test_runtime_env_clean(monkeypatch):
    monkeypatch.delenv("CXHYP_THREADS", raising=False)
    monkeypatch.setenv("LOG_LEVEL", "debug")
    res = validate_runtime_env()
    assert res == {"valid": True, "errors": [], "warnings": []}


def test_runtime_env_reports_problems(monkeypatch, caplog):
    monkeypatch.setenv("CXHYP_THREADS", "zero")
    monkeypatch.setenv("LOG_LEVEL", "LOUD")
    res = validate_runtime_env()
    assert not res["valid"]
    assert "not an integer" in res["errors"][0]
    assert "LOUD" in res["warnings"][0]
    with caplog.at_level(logging.WARNING):
        assert report_runtime_env(logging.getLogger("cxhyp.test")) is False
    assert any(r.levelno == logging.ERROR for r in caplog.records)


def test_runtime_env_rejects_nonpositive_threads(monkeypatch):
    monkeypatch.setenv("CXHYP_THREADS", "0")
    assert validate_runtime_env()["errors"] == ["CXHYP_THREADS must be >= 1"]


def test_env_helpers(monkeypatch):
    monkeypatch.setenv("CXHYP_FLAG", "yes")
    monkeypatch.setenv("CXHYP_NUM", "x")
    assert get_env_bool("CXHYP_FLAG")
    assert not get_env_bool("CXHYP_UNSET_FLAG")
    assert get_env_int("CXHYP_NUM", 7) == 7
