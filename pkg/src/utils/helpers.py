"""
Helper functions for the bellbound toolkit
"""

import os
import logging

import bellbound_conf


def get_supported_input_extensions():
    """Return a list of supported input file extensions"""
    return [".json"]


def is_valid_input_file(filepath):
    """Check if a file is a readable JSON input file"""
    if not os.path.isfile(filepath):
        return False

    ext = os.path.splitext(filepath)[1].lower()
    return ext in get_supported_input_extensions()


def get_logger(name):
    """Get a component logger with console (and optional file) handlers"""
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel(logging.INFO)

    formatter = logging.Formatter(bellbound_conf.LOG_FORMAT)

    # Console handler writes to stderr so reports on stdout stay clean
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if bellbound_conf.LOG_TO_FILE:
        if not os.path.exists(bellbound_conf.LOG_DIR):
            os.makedirs(bellbound_conf.LOG_DIR)
        file_handler = logging.FileHandler(os.path.join(bellbound_conf.LOG_DIR, 'bellbound.log'))
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger


def set_log_level(level):
    """Set the level of every bellbound logger already created"""
    for name in list(logging.root.manager.loggerDict):
        if name.startswith("src."):
            logging.getLogger(name).setLevel(level)


def format_value(value):
    """Format a real number with the fixed 6-decimal text precision"""
    if value is None:
        return "-"
    return f"{value:.6f}"


def parse_int_list(text):
    """Parse '2,2' or '2x2' into a list of integers"""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    parts = text.replace("x", ",").split(",")
    try:
        return [int(p) for p in parts if p.strip()]
    except ValueError:
        raise ValueError(f"Expected a list of integers, got '{text}'")


def parse_descriptor(text):
    """Split a descriptor like 'ghz:N=3,d=2' into a name and a parameter dict"""
    if ":" not in text:
        return text.strip().lower(), {}
    name, rest = text.split(":", 1)
    params = {}
    # dims values contain commas only in the 'x' form, so split on ','
    for item in rest.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"Malformed descriptor parameter '{item}' in '{text}'")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return name.strip().lower(), params


def get_thread_count():
    """Number of worker threads allowed by BELLBOUND_THREADS (default 1)"""
    value = os.environ.get("BELLBOUND_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1
