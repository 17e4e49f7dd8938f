"""Server configuration: which models to serve and how."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml


class ServerConfigError(Exception):
    """The server configuration is unusable."""


@dataclass(frozen=True)
class ServerConfig:
    """What the server hosts.

    Model identifiers use a scheme prefix: ``fixture:<path.json>`` loads a
    deterministic fixture model, ``hf:<model_id>`` a pretrained checkpoint
    (requires the ``models`` extra). At least one of classifier/translator
    must be configured.
    """

    classifier: str | None = None
    translator: str | None = None
    device: str = "cpu"
    max_batch_size: int = 16
    token: str | None = None

    def __post_init__(self) -> None:
        if not self.classifier and not self.translator:
            raise ServerConfigError("configure at least one of classifier/translator")
        if self.max_batch_size < 1:
            raise ServerConfigError(f"max_batch_size must be >= 1, got {self.max_batch_size}")


def load_server_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    if not path.exists():
        raise ServerConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ServerConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ServerConfigError(f"{path}: top level must be a mapping")

    def resolve(identifier: str | None) -> str | None:
        # fixture paths are relative to the config file
        if identifier and identifier.startswith("fixture:"):
            rel = identifier.split(":", 1)[1]
            return f"fixture:{(path.parent / rel).resolve()}"
        return identifier

    return ServerConfig(
        classifier=resolve(raw.get("classifier")),
        translator=resolve(raw.get("translator")),
        device=str(raw.get("device", "cpu")),
        max_batch_size=int(raw.get("max_batch_size", 16)),
        token=raw.get("token") or None,
    )
