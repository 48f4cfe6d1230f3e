"""Command-line driver: runs verification pipelines and emits text or JSON reports."""
import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from . import __version__
from .boundary import PAIRINGS, PhiReport, phi_total, worked_value_rows
from .clifford import IdentityRow, verify_relations, verify_trace_block
from .functionals import GEOMETRY, functional_report
from .scalar import RING, InputValidationError, NCResError, format_gaussian, symbol_table
from .symbols import parametrix_report
from .utils import (
    Comparison,
    any_mismatch,
    comparisons_to_frame,
    describe,
    format_table,
    parse_substitutions,
)

log = logging.getLogger(__name__)

SCHEMA = 1
COMMANDS = ("phi", "verify-traces", "functional", "parametrix", "all")
FORMATS = ("text", "json")
THREADS_ENV = "NCRES_THREADS"

EXIT_MATCH = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    pairing: str = "both"
    substitutions: Tuple[str, ...] = ()
    output_format: str = "text"
    output: Optional[str] = None
    threads: int = 1
    values: Dict[str, Any] = field(default_factory=dict, compare=False)

    def echo(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "pairing": self.pairing,
            "substitutions": {k: format_gaussian(v) for k, v in self.values.items()},
            "format": self.output_format,
        }


def known_symbols() -> List[str]:
    return sorted(set(symbol_table(RING)) | set(symbol_table(GEOMETRY)))


def threads_from_env(environ: Optional[Dict[str, str]] = None) -> int:
    """
    Read the worker count from NCRES_THREADS.

    Raises:
        InputValidationError: If the variable is set but not a positive integer
    """
    text = (environ if environ is not None else os.environ).get(THREADS_ENV, "1")
    try:
        threads = int(text)
    except ValueError:
        raise InputValidationError(f"{THREADS_ENV} must be a positive integer, got {text!r}")
    if threads < 1:
        raise InputValidationError(f"{THREADS_ENV} must be a positive integer, got {text!r}")
    return threads


def validate_config(config: RunConfig) -> RunConfig:
    """
    Validate a run configuration and parse its substitutions.

    Args:
        config: raw configuration from the command line

    Returns:
        The configuration with exact substitution values attached

    Raises:
        InputValidationError: If any field is invalid
    """
    if config.command not in COMMANDS:
        raise InputValidationError(f"Unknown command: {config.command}. Must be one of {COMMANDS}")
    if config.pairing not in PAIRINGS + ("both",):
        raise InputValidationError(f"Unknown pairing: {config.pairing}. Must be one of {PAIRINGS + ('both',)}")
    if config.output_format not in FORMATS:
        raise InputValidationError(f"Unknown format: {config.output_format}. Must be one of {FORMATS}")
    if config.threads < 1:
        raise InputValidationError(f"Thread count must be positive, got {config.threads}")
    values = parse_substitutions(config.substitutions, known_symbols())
    return RunConfig(
        config.command,
        config.pairing,
        config.substitutions,
        config.output_format,
        config.output,
        config.threads,
        values,
    )


def _comparison_dicts(rows: Sequence[Comparison]) -> List[Dict[str, str]]:
    return [row.as_dict() for row in rows]


def _identity_rows(rows: Sequence[IdentityRow]) -> Tuple[List[Dict[str, str]], List[Comparison]]:
    table = []
    comparisons = []
    for row in rows:
        for member, value in row.members:
            table.append({"identity": row.name, "member": member, "value": describe(value)})
        worst = next((v for _, v in row.members if v != row.expected), row.expected)
        comparisons.append(
            Comparison(
                row.name,
                describe(worst),
                describe(row.expected),
                row.verdict,
                "0" if worst == row.expected else describe(worst - row.expected),
            )
        )
    return table, comparisons


def _traces_section() -> Dict[str, Any]:
    rows, comparisons = _identity_rows(verify_relations() + verify_trace_block())
    comparisons += worked_value_rows()
    return {"kind": "trace-identities", "rows": rows, "totals": {}, "comparisons": _comparison_dicts(comparisons)}


def _phi_section(report: PhiReport) -> Dict[str, Any]:
    totals = {
        "pairing": report.pairing,
        "total": describe(report.total),
        "reference_total": describe(report.reference_total),
        "components": {name: describe(value) for name, value in report.components},
        "outside_basis": describe(report.residual),
    }
    return {
        "kind": f"phi-{report.pairing}",
        "cases": report.case_rows(),
        "totals": totals,
        "comparisons": _comparison_dicts(report.comparisons),
    }


def _comparison_section(kind: str, rows: Sequence[Comparison]) -> Dict[str, Any]:
    return {"kind": kind, "rows": [], "totals": {}, "comparisons": _comparison_dicts(rows)}


def _sections(config: RunConfig) -> List[Dict[str, Any]]:
    command = config.command
    sections = []
    if command in ("verify-traces", "all"):
        sections.append(_traces_section())
    if command in ("parametrix", "all"):
        sections.append(_comparison_section("parametrix", parametrix_report()))
    if command in ("phi", "all"):
        pairings = PAIRINGS if config.pairing == "both" else (config.pairing,)
        for pairing in pairings:
            sections.append(_phi_section(phi_total(pairing, config.values, config.threads)))
    if command in ("functional", "all"):
        sections.append(_comparison_section("functional", functional_report(config.values)))
    return sections


def run(config: RunConfig) -> Tuple[int, Dict[str, Any]]:
    """
    Execute the pipelines selected by a configuration.

    Args:
        config: run configuration

    Returns:
        (exit code, report document); exit code 2 if any comparison is a mismatch

    Raises:
        NCResError: If the configuration is invalid or a pipeline fails
    """
    try:
        config = validate_config(config)
        sections = _sections(config)
        document = {
            "schema": SCHEMA,
            "engine_version": __version__,
            "command": config.command,
            "config": config.echo(),
            "sections": sections,
        }
        mismatched = any(
            any_mismatch(Comparison(**row) for row in section["comparisons"]) for section in sections
        )
        log.debug("run %s: %d sections, mismatch=%s", config.command, len(sections), mismatched)
        return (EXIT_MISMATCH if mismatched else EXIT_MATCH), document
    except NCResError:
        raise
    except Exception as e:
        raise NCResError(f"Unexpected error in run: {str(e)}")


def render_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def render_text(document: Dict[str, Any]) -> str:
    """Fixed-width rendering of a report document."""
    lines = [f"ncres {document['engine_version']}  command: {document['command']}"]
    config = document["config"]
    lines.append(f"pairing: {config['pairing']}  substitutions: {config['substitutions'] or 'none'}")
    for section in document["sections"]:
        lines.append("")
        lines.append(f"== {section['kind']} ==")
        table = section.get("cases") or section.get("rows")
        if table:
            lines.append(format_table(pd.DataFrame(table)))
        totals = section.get("totals")
        if totals:
            for key in sorted(totals):
                lines.append(f"{key}: {totals[key]}")
        rows = [Comparison(**row) for row in section["comparisons"]]
        lines.append(format_table(comparisons_to_frame(rows)))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncres", description="Exact verification of boundary noncommutative-residue computations"
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline to run")
    parser.add_argument("--pairing", choices=PAIRINGS + ("both",), default="both", help="Pairing for phi (default: both)")
    parser.add_argument(
        "--set",
        dest="substitutions",
        action="append",
        default=[],
        help="Exact substitution name=value[,name=value...], e.g. hp=0 or W1=1/2+i (repeatable)",
    )
    parser.add_argument("--format", dest="output_format", choices=FORMATS, default="text", help="Report format (default: text)")
    parser.add_argument("--output", help="Write the report to this file instead of stdout")
    parser.add_argument("--verbose", action="store_true", help="Debug logging to stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Command line interface for the verification pipelines."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if e.code:
            sys.exit(EXIT_ERROR)
        raise
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    try:
        config = RunConfig(
            command=args.command,
            pairing=args.pairing,
            substitutions=tuple(args.substitutions),
            output_format=args.output_format,
            output=args.output,
            threads=threads_from_env(),
        )
        code, document = run(config)
        text = render_json(document) if config.output_format == "json" else render_text(document)
        if config.output:
            with open(config.output, "w") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
    except NCResError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    except OSError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    sys.exit(code)


if __name__ == "__main__":
    main()
