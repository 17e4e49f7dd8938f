from __future__ import annotations

from pathlib import Path

import pytest

from victim_server.config import ServerConfig

EXAMPLES = Path(__file__).parent.parent / "examples"


@pytest.fixture(scope="session")
def full_config() -> ServerConfig:
    return ServerConfig(
        classifier=f"fixture:{EXAMPLES / 'classifier.json'}",
        translator=f"fixture:{EXAMPLES / 'translator.json'}",
        max_batch_size=2,  # small so batching paths are exercised
    )
