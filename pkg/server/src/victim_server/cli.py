"""Serve the wire protocol from a YAML config."""

from __future__ import annotations

import sys

import click
import uvicorn

from .app import create_app
from .config import ServerConfig, ServerConfigError, load_server_config


@click.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Server config YAML.")
@click.option("--classifier", default=None, help="Classifier identifier (fixture:... or hf:...).")
@click.option("--translator", default=None, help="Translator identifier (fixture:... or hf:...).")
@click.option("--device", default=None, help="Inference device (default cpu).")
@click.option("--token", default=None, help="Require this bearer token on every request.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True, type=int)
def main(config_path, classifier, translator, device, token, host, port) -> None:
    """Run the reference inference server (/predict, /translate, /health)."""
    try:
        if config_path:
            config = load_server_config(config_path)
            if classifier or translator or device or token:
                config = ServerConfig(
                    classifier=classifier or config.classifier,
                    translator=translator or config.translator,
                    device=device or config.device,
                    max_batch_size=config.max_batch_size,
                    token=token or config.token,
                )
        else:
            config = ServerConfig(
                classifier=classifier,
                translator=translator,
                device=device or "cpu",
                token=token,
            )
    except ServerConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
