from __future__ import annotations

from ssc_toolkit.runtime import THREADS_ENV, worker_count


def test_defaults_to_sequential(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert worker_count() == 1
    assert worker_count(4) == 4


def test_env_caps_requests(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert worker_count() == 2
    assert worker_count(8) == 2
    assert worker_count(1) == 1


def test_garbage_env_ignored(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    assert worker_count() == 1
    assert worker_count(3) == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count(3) == 1
