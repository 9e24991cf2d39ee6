#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Logging Utilities - console tee, logging setup and atomic file output
"""

import datetime
import logging
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional, Tuple, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Tee(object):
    """Tee class for redirecting output to multiple streams"""

    def __init__(self, *files):
        self.files = files

    def write(self, obj):
        for f in self.files:
            try:
                f.write(obj)
                f.flush()
            except UnicodeEncodeError:
                encoding = getattr(f, "encoding", None) or "utf-8"
                f.write(obj.encode(encoding, errors="replace").decode(encoding))
                f.flush()

    def flush(self):
        for f in self.files:
            f.flush()

    def isatty(self):
        """Proxy isatty to the first file (usually sys.stdout/stderr)"""
        if self.files and hasattr(self.files[0], "isatty"):
            return self.files[0].isatty()
        return False


def configure_logging(level: str = "INFO") -> None:
    """Configure the root logger used by every src.app module"""
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)


def setup_logging(args, log_dir: str = "logs") -> Tuple[Optional[str], float]:
    """Tee stdout/stderr into logs/console_<timestamp>.log if --log is set

    Returns:
        (log_file or None, start_time)
    """
    if getattr(args, "log", False):
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f"console_{datetime.datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
        log_f = open(log_file, "w", encoding="utf-8")
        sys.stdout = Tee(sys.stdout, log_f)
        sys.stderr = Tee(sys.stderr, log_f)
        print(f"Log redirected to: {log_file}")
        return log_file, time.time()
    return None, time.time()


def finalize_logging(log_file: Optional[str], start_time: float, interrupted: bool = False) -> None:
    """Write final runtime information to log file"""
    if log_file:
        try:
            duration = time.time() - start_time
            with open(log_file, "a", encoding="utf-8") as f:
                if interrupted:
                    f.write("\nUser interrupted and exited\n")
                f.write(f"\nTotal runtime: {duration:.2f} seconds\n")
        except OSError as e:
            print(f"Failed to write runtime to log file: {e}")


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> Path:
    """Write to a temp file in the target directory, then rename over path"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))
