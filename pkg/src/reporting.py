"""CSV trace and JSON summary writers"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .models import IterationRecord, RunResult
from .utils import format_float

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iter", "q", "merit", "gamma", "backtracks", "step_norm", "residual", "partition"]
COMPARE_COLUMNS = ["variant", "status", "iterations", "total_backtracks", "final_q", "final_residual"]


def trace_rows(trace: Iterable[IterationRecord]) -> List[List[str]]:
    return [record.to_csv_row() for record in trace]


def trace_csv_text(trace: Iterable[IterationRecord]) -> str:
    """Render a trace with the fixed header, one row per iteration"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerows(trace_rows(trace))
    return buffer.getvalue()


def write_trace_csv(path: Path, trace: Sequence[IterationRecord]) -> None:
    """
    Write the trace CSV

    Raises:
        OSError: If the path cannot be written
    """
    path = Path(path)
    path.write_text(trace_csv_text(trace))
    logger.info(f"Wrote {len(trace)} trace rows to {path}")


def run_summary(result: RunResult, resolved_config: Dict[str, Any]) -> Dict[str, Any]:
    """JSON-ready summary of a run, echoing the resolved configuration"""
    return {
        "status": result.status.value,
        "variant": result.variant.value,
        "iterations": result.iterations,
        "final_q": result.final_q,
        "final_merit": result.final_merit,
        "final_residual": result.final_residual,
        "total_backtracks": result.total_backtracks,
        "wall_time_ms": result.wall_time * 1000.0,
        "x_final": [float(v) for v in result.x_final],
        "violations": list(result.violations),
        "config": resolved_config,
    }


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    """
    Write a JSON document; floats keep their shortest round-trip form

    Raises:
        OSError: If the path cannot be written
    """
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    logger.info(f"Wrote {path}")


def write_summary_json(path: Path, result: RunResult, resolved_config: Dict[str, Any]) -> None:
    write_json(path, run_summary(result, resolved_config))


def comparison_row(result: RunResult) -> List[str]:
    return [
        result.variant.value,
        result.status.value,
        str(result.iterations),
        str(result.total_backtracks),
        format_float(result.final_q),
        format_float(result.final_residual),
    ]


def comparison_csv_text(results: Sequence[RunResult], note: Optional[str] = None) -> str:
    """
    Comparison table with one row per variant

    A note, when given, is appended as a trailing comment line.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    writer.writerows(comparison_row(r) for r in results)
    if note:
        buffer.write(f"# {note}\n")
    return buffer.getvalue()
