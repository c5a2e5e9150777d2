from logging.config import fileConfig
import logging
import os
from pathlib import Path


config = os.environ.get("TOPRANK_LOGGING", "/etc/toprank/logging.conf")
if Path(config).is_file():
    fileConfig(config, disable_existing_loggers=False)
    logger = logging.getLogger("toprank")
else:
    logger = logging.getLogger("toprank")
    if not logger.handlers:
        logger.setLevel(logging.INFO)
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(
            logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        logger.addHandler(stream_handler)
