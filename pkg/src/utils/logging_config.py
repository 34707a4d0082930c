import logging
import os
from typing import Optional

import config


def setup_logging(level: int = config.LOG_LEVEL, log_file: Optional[str] = None):
    handlers = [logging.StreamHandler()]
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )

    logging.getLogger('httpx').setLevel(logging.WARNING)
    logging.getLogger('httpcore').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    if log_file:
        logger.debug(f"Logging configured. Log file location: {log_file}")
    else:
        logger.debug("Logging configured for standard error only.")
