"""
Run-config parser
Supports: .toml, .json
"""
import json
import logging
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from pydantic import ValidationError

from shapca.workflow.models import ConfigError, RunConfig

logger = logging.getLogger(__name__)


def parse_config(content: bytes, filename: str) -> Tuple[Optional[dict], Optional[str]]:
    """
    Parse a run-config file into a plain mapping.

    Args:
        content: Raw file bytes
        filename: File name (used to detect format)

    Returns:
        Tuple of (mapping, error_message)
    """
    filename_lower = filename.lower()

    try:
        if filename_lower.endswith(".toml"):
            return parse_toml(content)
        elif filename_lower.endswith(".json"):
            return parse_json(content)
        else:
            return None, "Unsupported config format. Use .toml or .json"
    except Exception as e:
        return None, f"Error parsing config: {str(e)}"


def parse_toml(content: bytes) -> Tuple[Optional[dict], Optional[str]]:
    try:
        return tomllib.loads(content.decode("utf-8")), None
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as e:
        return None, f"Error reading TOML: {str(e)}"


def parse_json(content: bytes) -> Tuple[Optional[dict], Optional[str]]:
    try:
        data = json.loads(content.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        return None, f"Error reading JSON: {str(e)}"
    if not isinstance(data, dict):
        return None, "Run config must be a JSON object"
    return data, None


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply `section.key=value` overrides to a nested mapping (copied, not mutated).
    Values are parsed as JSON when possible, otherwise kept as text.
    """
    out = json.loads(json.dumps(data))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override '{item}' is not of the form section.key=value")
        parts = key.strip().split(".")
        node = out
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"override '{item}': '{part}' is not a section")
            node = child
        node[parts[-1]] = _parse_value(raw)
    return out


def validate_config(data: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    """Validate into RunConfig; a relative dataset path is resolved against base_dir"""
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {e}") from e
    if cfg.dataset.path is not None and base_dir is not None:
        path = Path(cfg.dataset.path)
        if not path.is_absolute():
            cfg = cfg.model_copy(update={"dataset": cfg.dataset.model_copy(update={"path": str(base_dir / path)})})
    return cfg


def load_config(path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """Read, override and validate a run config; no path means all defaults"""
    data: Dict[str, Any] = {}
    base_dir = None
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        data, error = parse_config(path.read_bytes(), path.name)
        if error:
            raise ConfigError(error)
        base_dir = path.parent
    cfg = validate_config(apply_overrides(data, overrides), base_dir)
    logger.info(f"Loaded run config from {path or 'defaults'} with {len(overrides)} overrides")
    return cfg
