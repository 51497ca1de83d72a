from pathlib import Path
import logging

from app.core.config import settings
from app.cli.router import cli

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    """Log to stderr, and to a file under LOG_DIR when enabled"""
    handlers = [logging.StreamHandler()]
    if settings.log_to_file and settings.environment != "test":
        handlers.append(logging.FileHandler(Path(settings.log_dir) / "relevant_excess.log"))

    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


@cli.callback()
def startup():
    """Relevant change detection through excess measures"""
    configure_logging()
    logger.debug(f"Starting {settings.service_name} v{settings.service_version} ({settings.environment})")


app = cli


def main():
    app()


if __name__ == "__main__":
    main()
