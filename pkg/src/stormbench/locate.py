"""Repo-relative resource locations with environment overrides."""

from __future__ import annotations

import os
from pathlib import Path


def repo_root() -> Path:
    # src/stormbench/locate.py -> src/stormbench -> src -> repo
    return Path(__file__).resolve().parents[2]


def default_waveform_dir() -> Path:
    return Path(os.environ.get("STORMBENCH_WAVEFORM_DIR", repo_root() / "waveforms"))


def default_scene_dir() -> Path:
    return Path(os.environ.get("STORMBENCH_SCENE_DIR", repo_root() / "scenes"))


def default_run_dir() -> Path:
    return Path(os.environ.get("STORMBENCH_RUN_DIR", Path.cwd() / "runs"))


def default_console_dir() -> Path:
    return Path(os.environ.get("STORMBENCH_CONSOLE_DIR", repo_root() / "frontend"))
