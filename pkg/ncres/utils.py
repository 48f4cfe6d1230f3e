from dataclasses import asdict, dataclass
from typing import Dict, Iterable, Sequence

import pandas as pd

from .clifford import CliffordEnd, render_end
from .scalar import InputValidationError, XiRational, parse_gaussian, render

MATCH = "match"
MISMATCH = "mismatch"


@dataclass(frozen=True)
class Comparison:
    """One engine-versus-reference row of a report section."""

    target_ref: str
    engine_expr: str
    paper_expr: str
    verdict: str
    difference: str = "0"

    def as_dict(self) -> Dict[str, str]:
        return asdict(self)


def describe(value: object) -> str:
    """
    Canonical text of a scalar, XiRational or endomorphism.

    Parameters:
    - value: PolyElement, XiRational or CliffordEnd

    Returns:
    - str: "(x)*Id" for scalar endomorphisms, entry listing otherwise
    """
    if isinstance(value, CliffordEnd):
        entries = value.entries()
        if not entries:
            return "0"
        diagonal = {entries.get((k, k)) for k in range(16)}
        if len(entries) == 16 and len(diagonal) == 1 and None not in diagonal:
            (scalar,) = diagonal
            return f"({render(scalar)})*Id"
        return render_end(value)
    return render(value)


def compare(target_ref: str, engine: object, reference: object) -> Comparison:
    """
    Build a comparison row from two exact values of the same kind.

    Parameters:
    - target_ref (str): label of the reference result
    - engine: value computed by the engine
    - reference: reference value

    Returns:
    - Comparison: verdict match iff the two values are equal
    """
    same = engine == reference
    difference = "0" if same else describe(engine - reference)
    return Comparison(
        target_ref, describe(engine), describe(reference), MATCH if same else MISMATCH, difference
    )


def any_mismatch(rows: Iterable[Comparison]) -> bool:
    return any(row.verdict != MATCH for row in rows)


def comparisons_to_frame(rows: Sequence[Comparison]) -> pd.DataFrame:
    """
    Tabulate comparison rows.

    Parameters:
    - rows (list of Comparison)

    Returns:
    - pd.DataFrame with columns target_ref, verdict, engine_expr, paper_expr, difference
    """
    columns = ["target_ref", "verdict", "engine_expr", "paper_expr", "difference"]
    return pd.DataFrame([row.as_dict() for row in rows], columns=columns)


def format_table(frame: pd.DataFrame) -> str:
    """Fixed-width text rendering of a report table."""
    if frame.empty:
        return "(empty)"
    return frame.to_string(index=False, justify="left")


def parse_substitutions(assignments: Iterable[str], known: Iterable[str]) -> Dict[str, object]:
    """
    Parses name=value assignments into exact Gaussian rationals.

    Args:
        assignments: strings like "hp=0" or "W1=0,W2=1/2"
        known: accepted symbol names

    Returns:
        Dictionary symbol name -> Gaussian rational, in sorted key order

    Raises:
        InputValidationError: If a name is unknown or a value is malformed
    """
    names = set(known) - {"xin"}
    values: Dict[str, object] = {}
    for item in assignments:
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise InputValidationError(f"Invalid substitution (expected name=value): {part}")
            name, text = (s.strip() for s in part.split("=", 1))
            if name not in names:
                raise InputValidationError(f"Unknown symbol in substitution: {name}")
            values[name] = parse_gaussian(text)
    return dict(sorted(values.items()))


