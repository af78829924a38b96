"""
Run journal
Append-only record of every CLI stage executed against an output directory
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from shapca.config import settings
from shapca.utils.files import format_csv, hash_text, write_text_atomic
from shapca.workflow.models import RunAction, RunLogEntry

logger = logging.getLogger(__name__)


def journal_path(out_dir: Path) -> Path:
    return Path(out_dir) / settings.RUN_LOG_NAME


def _load_logs(out_dir: Path) -> List[dict]:
    path = journal_path(out_dir)
    if path.exists():
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError:
            logger.warning(f"Run journal {path} is unreadable, starting a new one")
            return []
    return []


def _save_logs(out_dir: Path, logs: List[dict]):
    write_text_atomic(journal_path(out_dir), json.dumps(logs, indent=2, default=str) + "\n")


def hash_config(config_text: str) -> str:
    """SHA-256 of the effective run config"""
    return hash_text(config_text)


def log_event(
    out_dir: Path,
    action: RunAction,
    config_text: Optional[str] = None,
    seed: Optional[int] = None,
    artifacts: Sequence[Path] = (),
    processing_time_ms: Optional[int] = None,
    error: Optional[str] = None,
) -> RunLogEntry:
    """
    Record a stage run. Append-only: earlier entries are never modified.
    """
    out_dir = Path(out_dir)
    entry = RunLogEntry(
        action=action,
        config_hash=hash_config(config_text) if config_text else None,
        seed=seed,
        artifacts=sorted(str(Path(a).relative_to(out_dir)) if Path(a).is_relative_to(out_dir) else str(a)
                         for a in artifacts),
        processing_time_ms=processing_time_ms,
        error=error,
    )

    logs = _load_logs(out_dir)
    logs.append(entry.model_dump(mode="json"))
    _save_logs(out_dir, logs)

    logger.info(f"Run journal: {action.value} ({'failed' if error else 'ok'}, {len(entry.artifacts)} artifacts)")
    return entry


def get_logs(out_dir: Path, action: Optional[RunAction] = None) -> List[RunLogEntry]:
    """Journal entries, newest first, optionally filtered by action"""
    logs = _load_logs(out_dir)
    if action:
        logs = [entry for entry in logs if entry.get("action") == action.value]
    logs.sort(key=lambda x: x.get("timestamp", ""), reverse=True)
    return [RunLogEntry(**entry) for entry in logs]


def export_logs_csv(out_dir: Path) -> str:
    """Journal as CSV text, oldest first"""
    entries = list(reversed(get_logs(out_dir)))
    headers = ["timestamp", "action", "seed", "config_hash", "artifacts", "processing_time_ms", "error"]
    rows = [
        [
            e.timestamp.isoformat(),
            e.action.value,
            "" if e.seed is None else e.seed,
            e.config_hash or "",
            ";".join(e.artifacts),
            "" if e.processing_time_ms is None else e.processing_time_ms,
            e.error or "",
        ]
        for e in entries
    ]
    return format_csv(headers, rows)
