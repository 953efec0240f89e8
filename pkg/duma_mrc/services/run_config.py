import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

from pydantic import ValidationError

from duma_mrc import config
from duma_mrc.errors import ConfigurationError
from duma_mrc.schemas import ModelConfig, RunConfig, SyntheticSpec, TaskKind, TaskSpec, TrainConfig

logger = logging.getLogger(__name__)

RUN_CONFIG_SECTIONS = {"model": ModelConfig, "train": TrainConfig}
FLAT_FLAGS = ("seed", "output_dir", "max_steps", "runs")
PRESETS = ("xxlarge",)


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    value_str = str(value).strip().lower()
    return value_str in {"1", "true", "yes", "on"}


def _coerce(section: str, key: str, raw: str) -> Any:
    model_cls = RUN_CONFIG_SECTIONS[section]
    field = model_cls.model_fields.get(key)
    if field is None:
        raise ConfigurationError(f"unknown setting '{section}.{key}'")
    if field.annotation is bool:
        return _to_bool(raw)
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def get_env_run_defaults() -> Dict[str, Dict[str, Any]]:
    return {
        "model": {},
        "train": {"output_dir": os.getenv("DUMA_RUNS_DIR", config.RUNS_DIR)},
    }


def read_config_file(path: str) -> Dict[str, Any]:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(RUN_CONFIG_SECTIONS))
    if unknown:
        raise ConfigurationError(f"config file {path} has unknown sections {unknown}")
    return data


def parse_dotted_overrides(items: Iterable[str]) -> Dict[str, Dict[str, Any]]:
    """Turn ``section.key=value`` strings into a nested override dict."""
    overrides: Dict[str, Dict[str, Any]] = {}
    for item in items:
        dotted, sep, raw = item.partition("=")
        section, dot, key = dotted.strip().partition(".")
        if not sep or not dot or not key:
            raise ConfigurationError(f"override '{item}' is not of the form section.key=value")
        if section not in RUN_CONFIG_SECTIONS:
            raise ConfigurationError(f"override '{item}' targets unknown section '{section}'")
        overrides.setdefault(section, {})[key] = _coerce(section, key, raw.strip())
    return overrides


def builtin_task(name: str, dream_dir: Optional[str] = None, race_dir: Optional[str] = None) -> TaskSpec:
    """Task definitions selectable by name from the command line."""
    if name == "dream":
        root = dream_dir or config.DREAM_DIR
        if not root:
            raise ConfigurationError("task 'dream' needs --dream or DUMA_DREAM_DIR")
        return TaskSpec(
            name="dream",
            kind=TaskKind.DREAM,
            train_path=str(Path(root) / "train.json"),
            dev_path=str(Path(root) / "dev.json"),
            test_path=str(Path(root) / "test.json"),
        )
    if name == "race":
        root = race_dir or config.RACE_DIR
        if not root:
            raise ConfigurationError("task 'race' needs --race or DUMA_RACE_DIR")
        return TaskSpec(
            name="race",
            kind=TaskKind.RACE,
            train_path=str(Path(root) / "train"),
            dev_path=str(Path(root) / "dev"),
            test_path=str(Path(root) / "test"),
        )
    if name == "synthetic":
        return TaskSpec(name=name, kind=TaskKind.SYNTHETIC, synthetic=SyntheticSpec(num_options=3))
    if name == "synthetic4":
        return TaskSpec(name=name, kind=TaskKind.SYNTHETIC, synthetic=SyntheticSpec(num_options=4, seed=1))
    raise ConfigurationError(
        f"unknown task '{name}'; define it in the config file or use dream, race, synthetic, synthetic4"
    )


def select_tasks(
    names: Sequence[str],
    configured: Sequence[Dict[str, Any]],
    dream_dir: Optional[str] = None,
    race_dir: Optional[str] = None,
) -> list:
    by_name = {task.get("name"): task for task in configured}
    selected = []
    for name in names:
        if name in by_name:
            selected.append(by_name[name])
        else:
            selected.append(builtin_task(name, dream_dir, race_dir).model_dump(mode="json"))
    return selected


def _deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def merge_run_config(
    config_file: Optional[str] = None,
    overrides: Optional[Iterable[str]] = None,
    flags: Optional[Dict[str, Any]] = None,
    preset: Optional[str] = None,
    task_names: Optional[Sequence[str]] = None,
    dream_dir: Optional[str] = None,
    race_dir: Optional[str] = None,
    base: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Resolve defaults < preset < config file < dotted overrides < flat flags.

    ``base`` replaces the built-in defaults, e.g. with the resolved configuration
    recorded in a run manifest.
    """
    data = copy.deepcopy(base) if base is not None else get_env_run_defaults()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(f"unknown preset '{preset}', expected one of {PRESETS}")
        data["model"].update(ModelConfig.xxlarge_scale().model_dump(exclude={"positional_table_size"}))
    if config_file:
        _deep_merge(data, read_config_file(config_file))
    if overrides:
        _deep_merge(data, parse_dotted_overrides(overrides))

    for key, value in (flags or {}).items():
        if key not in FLAT_FLAGS:
            raise ConfigurationError(f"unknown flag '{key}'")
        if value is None:
            continue
        data["train"][key] = value
        if key == "seed":
            data["model"]["seed"] = value

    if task_names:
        data["train"]["tasks"] = select_tasks(
            task_names, data["train"].get("tasks", []), dream_dir, race_dir
        )

    try:
        resolved = RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationError(
            f"invalid configuration at '{location}': {first.get('msg')}",
            {"errors": exc.error_count()},
        ) from exc

    logger.info("Resolved run config: %s", resolved.model_dump_json())
    return resolved
