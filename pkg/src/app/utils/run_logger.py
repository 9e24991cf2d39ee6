#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Run Logger - one JSON record per subcommand run

Records: run id, subcommand, resolved config, status, duration, error and
summary metrics (DER, loss, gradient-check error). Only the last 100 runs
are kept.
"""

import json
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

MAX_RECORDS = 100


class RunLogger:
    """Minimal run history logger"""

    def __init__(self, log_file: str = "output/logs/run_history.json"):
        self.log_file = Path(log_file)
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        self.current_run: Optional[Dict[str, Any]] = None
        self.run_start_time: Optional[float] = None
        self.history = self._load_history()

    def _load_history(self) -> List[Dict]:
        if self.log_file.exists():
            try:
                with open(self.log_file, "r", encoding="utf-8") as f:
                    data = json.load(f)
                return data if isinstance(data, list) else []
            except (OSError, json.JSONDecodeError):
                return []
        return []

    def _save_history(self):
        try:
            with open(self.log_file, "w", encoding="utf-8") as f:
                json.dump(self.history, f, indent=2, ensure_ascii=False)
        except OSError as e:
            print(f"⚠️ Failed to save run history: {e}")

    def start_run(self, subcommand: str, config: Dict[str, Any]) -> str:
        run_id = f"{subcommand}_{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}"
        self.current_run = {
            "run_id": run_id,
            "subcommand": subcommand,
            "config": config,
            "start_time": datetime.now().isoformat(),
            "status": "running",
            "metrics": {},
            "duration": 0,
            "error": None,
        }
        self.run_start_time = time.time()
        return run_id

    def log_metric(self, name: str, value: Any):
        if self.current_run is not None:
            self.current_run["metrics"][name] = value

    def end_run(self, status: str = "success", error: Optional[str] = None):
        """
        Close the current run

        Args:
            status: success, failed or interrupted
            error: error message (if failed)
        """
        if not self.current_run:
            return
        duration = time.time() - self.run_start_time if self.run_start_time else 0
        self.current_run["status"] = status
        self.current_run["duration"] = round(duration, 2)
        self.current_run["end_time"] = datetime.now().isoformat()
        if error:
            self.current_run["error"] = str(error)[:500]

        self.history.append(self.current_run)
        if len(self.history) > MAX_RECORDS:
            self.history = self.history[-MAX_RECORDS:]
        self._save_history()
        self.current_run = None
        self.run_start_time = None

