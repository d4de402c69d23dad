import logging.config
import os
from datetime import datetime

from internal.config import settings

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "default": {
            "format": "%(asctime)s.%(msecs)03d %(levelname)s %(name)s %(funcName)s %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S"
        }
    },

    "handlers": {
        # stdout carries the stage summary
        "console": {
            "class": "logging.StreamHandler",
            "level": settings.log_level,
            "formatter": "default",
            "stream": "ext://sys.stderr"
        },
    },
    "loggers": {
        "apps": {
            "propagate": True
        },
    },
    "root": {
        "level": settings.log_level,
        "handlers": ["console"],
    }
}


def setup_logging() -> None:
    """
    Install LOGGING; adds the rotating file handler when log_to_file is set
    """
    config = dict(LOGGING)
    if settings.log_to_file:
        if not os.path.exists(settings.log_dir):
            os.makedirs(settings.log_dir)

        config['handlers'] = dict(LOGGING['handlers'])
        config['handlers']['file'] = {
            "level": settings.log_level,
            "class": "logging.handlers.TimedRotatingFileHandler",
            "filename": f"{settings.log_dir}/nlobs-{datetime.now().strftime('%Y%m%d')}.log",
            "when": "midnight",
            "backupCount": 90,
            "formatter": "default",
        }
        config['root'] = {"level": settings.log_level, "handlers": ["console", "file"]}

    logging.config.dictConfig(config)


app_logger = logging.getLogger('apps')
