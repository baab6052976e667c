"""Tests for structured logging setup."""

from __future__ import annotations

import json

import numpy as np

from pose_affordance.core.logging import (
    LogContext,
    add_global_context,
    get_logger,
    setup_logging,
    summarize_arrays,
)


def test_summarize_arrays():
    """Test that arrays become summaries and NumPy scalars plain numbers."""
    event = summarize_arrays(None, "info", {"event": "x", "w": np.zeros((2, 3)), "n": np.int64(4), "s": "a"})
    assert event["w"] == "array(2x3, float64)"
    assert event["n"] == 4
    assert type(event["n"]) is int
    assert event["s"] == "a"


def test_json_lines_on_stderr(capsys):
    """Test JSON rendering with global and block context."""
    setup_logging("INFO", json_output=True)
    add_global_context(command="train")
    logger = get_logger("pose_affordance.test")
    with LogContext(logger, head="scale") as ctx:
        ctx.logger.info("Epoch finished", loss=np.float64(0.5))
    logger.info("Done")

    captured = capsys.readouterr()
    assert captured.out == ""
    lines = [json.loads(line) for line in captured.err.splitlines() if line.startswith("{")]
    assert lines[0]["event"] == "Epoch finished"
    assert lines[0]["head"] == "scale"
    assert lines[0]["command"] == "train"
    assert lines[0]["loss"] == 0.5
    assert "head" not in lines[1]
