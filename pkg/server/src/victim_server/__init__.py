"""Reference inference server for the textsiege wire protocol."""

from .app import create_app
from .config import ServerConfig, ServerConfigError, load_server_config
from .models import (
    DictionaryTranslator,
    LinearBagClassifier,
    ModelError,
    UnsupportedLanguage,
    build_classifier,
    build_translator,
)

__version__ = "0.1.0"

__all__ = [
    "DictionaryTranslator",
    "LinearBagClassifier",
    "ModelError",
    "ServerConfig",
    "ServerConfigError",
    "UnsupportedLanguage",
    "build_classifier",
    "build_translator",
    "create_app",
    "load_server_config",
]
