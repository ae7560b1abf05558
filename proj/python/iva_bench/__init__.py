"""Python access to the iva-bench harness: instruction and response grammar,
dataset arithmetic and the command line."""

from ._core import (
    IvaError,
    ParseError,
    TransportError,
    __version__,
    builtin_tasks,
    extract_target_noun,
    fp_step_count,
    head_noun,
    overall_success,
    parse_instruction,
    parse_response,
    partition_counts,
    render_instruction,
    render_response,
    run_cli,
)

__all__ = [
    "IvaError",
    "ParseError",
    "TransportError",
    "__version__",
    "builtin_tasks",
    "extract_target_noun",
    "fp_step_count",
    "head_noun",
    "overall_success",
    "parse_instruction",
    "parse_response",
    "partition_counts",
    "render_instruction",
    "render_response",
    "run_cli",
]
