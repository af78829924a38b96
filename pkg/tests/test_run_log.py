"""
Tests for the Run Journal
"""
import json
import time

from shapca.workflow.models import RunAction, RunLogEntry
from shapca.workflow.run_log import export_logs_csv, get_logs, hash_config, journal_path, log_event


class TestRunLogModels:
    """Test run journal data models"""

    def test_actions_defined(self):
        """Every CLI stage has an action"""
        assert [a.value for a in RunAction] == [
            "synth", "fit", "explain-global", "explain-local", "consistency", "render",
        ]

    def test_entry_creation(self):
        """Should create valid journal entry"""
        entry = RunLogEntry(action=RunAction.FIT, seed=3, artifacts=["model.json"])
        assert entry.id is not None
        assert entry.timestamp is not None
        assert entry.error is None


class TestConfigHashing:
    """Test config fingerprints"""

    def test_hash_length(self):
        """Hash should be 64 chars (SHA-256 hex)"""
        assert len(hash_config('{"seed": 0}')) == 64

    def test_hash_is_deterministic(self):
        """Same config, same hash"""
        assert hash_config('{"seed": 0}') == hash_config('{"seed": 0}')
        assert hash_config('{"seed": 0}') != hash_config('{"seed": 1}')


class TestRunJournal:
    """Test the append-only journal file"""

    def test_append_and_read_newest_first(self, tmp_path):
        """Entries accumulate and come back newest first"""
        log_event(tmp_path, RunAction.SYNTH, config_text="{}", seed=0, artifacts=[tmp_path / "spectra.csv"])
        time.sleep(0.01)
        log_event(tmp_path, RunAction.FIT, config_text="{}", seed=0, artifacts=[tmp_path / "model.json"])
        logs = get_logs(tmp_path)
        assert [e.action for e in logs] == [RunAction.FIT, RunAction.SYNTH]
        assert logs[0].artifacts == ["model.json"]
        assert len(json.loads(journal_path(tmp_path).read_text())) == 2

    def test_filter_by_action(self, tmp_path):
        """Filtering keeps only the requested stage"""
        log_event(tmp_path, RunAction.SYNTH)
        log_event(tmp_path, RunAction.FIT, error="[fit] boom")
        logs = get_logs(tmp_path, RunAction.FIT)
        assert len(logs) == 1
        assert logs[0].error == "[fit] boom"

    def test_artifacts_relative_and_sorted(self, tmp_path):
        """Artifact paths are stored relative to the output directory"""
        entry = log_event(tmp_path, RunAction.RENDER, artifacts=[tmp_path / "figures" / "b.svg", tmp_path / "a.svg"])
        assert entry.artifacts == ["a.svg", "figures/b.svg"]

    def test_unreadable_journal_restarts(self, tmp_path):
        """A corrupt journal is replaced rather than crashing the stage"""
        journal_path(tmp_path).write_text("{not json")
        log_event(tmp_path, RunAction.SYNTH)
        assert len(get_logs(tmp_path)) == 1

    def test_missing_journal_is_empty(self, tmp_path):
        """No file means no entries"""
        assert get_logs(tmp_path) == []

    def test_export_csv(self, tmp_path):
        """CSV export lists entries oldest first"""
        log_event(tmp_path, RunAction.SYNTH, seed=1)
        time.sleep(0.01)
        log_event(tmp_path, RunAction.FIT, seed=1)
        lines = export_logs_csv(tmp_path).splitlines()
        assert lines[0] == "timestamp,action,seed,config_hash,artifacts,processing_time_ms,error"
        assert lines[1].split(",")[1] == "synth"
        assert lines[2].split(",")[1] == "fit"
