"""Run manifests: the fully resolved configuration plus dataset fingerprints."""

import logging
import os
from pathlib import Path
from typing import Dict, List, Union

from pydantic import ValidationError

from duma_mrc import config
from duma_mrc.errors import ConfigurationError
from duma_mrc.schemas import DatasetFingerprint, RunConfig, RunManifest

logger = logging.getLogger(__name__)


def build_manifest(
    run_config: RunConfig,
    datasets: List[DatasetFingerprint],
    artifacts: Dict[str, str],
) -> RunManifest:
    return RunManifest(
        run_config=run_config,
        seed=run_config.train.seed,
        datasets=datasets,
        artifacts=artifacts,
    )


def write_manifest(run_dir: Union[str, Path], manifest: RunManifest) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / config.MANIFEST_FILE
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    os.replace(tmp_path, path)
    logger.info("Wrote run manifest %s (%d dataset fingerprints)", path, len(manifest.datasets))
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / config.MANIFEST_FILE
    if not path.is_file():
        raise ConfigurationError(f"manifest not found: {path}")
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ConfigurationError(f"manifest {path} is invalid: {exc.errors()[0].get('msg')}") from exc
