import logging
import os

import coloredlogs
from dotenv import load_dotenv


# Loading the environment
load_dotenv()


def fft_workers() -> int:
    """Worker cap for scipy.fft, read from FKPP_THREADS (default 1)."""
    raw = os.getenv("FKPP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logging.getLogger(__name__).warning("ignoring FKPP_THREADS=%r", raw)
        return 1


def setup_logging(verbose: bool = False) -> None:
    level = os.getenv("FKPP_LOG_LEVEL", "DEBUG" if verbose else "INFO")
    coloredlogs.install(
        level=level,
        fmt="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
