"""CPLEX LP-format export of the probe-order ILP.

The file can be fed to any third-party MIP solver to cross-check the
objective found by the internal solver.
"""

import re
from enum import Enum
from pathlib import Path

from src.domain.entities.ilp import Constraint, ConstraintFamily, IlpModel
from src.shared.logging import get_logger

logger = get_logger(__name__)

LINE_WIDTH = 510
_RENAMES = str.maketrans({"[": "(", "]": ")", "=": "_", ":": "_", "+": "_", "'": "_"})
_INVALID = re.compile(r"[^A-Za-z0-9!\"#$%&()/,.;?@_`{}|~]")


class LpFlavor(str, Enum):
    """BINDING writes the rows the solver enforces; AGGREGATED one -k x + sum >= 0 row per hop, no at-most-one rows."""

    BINDING = "binding"
    AGGREGATED = "aggregated"


_FAMILIES = {
    LpFlavor.BINDING: (
        ConstraintFamily.ONE_OF,
        ConstraintFamily.SUBQUERY,
        ConstraintFamily.AT_MOST_ONE,
        ConstraintFamily.COST,
    ),
    LpFlavor.AGGREGATED: (
        ConstraintFamily.ONE_OF,
        ConstraintFamily.SUBQUERY_AGGREGATED,
        ConstraintFamily.COST,
    ),
}


def lp_name(name: str) -> str:
    """Map a model name onto the LP-format name alphabet."""
    return _INVALID.sub("_", name.translate(_RENAMES))


def format_coefficient(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def _terms(coefficients: list[tuple[str, float]]) -> list[str]:
    terms = []
    for position, (name, coefficient) in enumerate(coefficients):
        magnitude = format_coefficient(abs(coefficient))
        if position == 0:
            sign = "-" if coefficient < 0 else ""
            terms.append(f"{sign}{magnitude} {lp_name(name)}")
        else:
            terms.append(f"{'-' if coefficient < 0 else '+'} {magnitude} {lp_name(name)}")
    return terms


def _wrap(prefix: str, terms: list[str], suffix: str = "") -> list[str]:
    """Break long rows; LP readers limit the line length."""
    lines = []
    current = prefix
    for term in terms:
        if len(current) + len(term) + 1 > LINE_WIDTH:
            lines.append(current)
            current = "   "
        current = f"{current} {term}"
    lines.append(f"{current}{suffix}")
    return lines


def _row(constraint: Constraint) -> list[str]:
    rhs = format_coefficient(constraint.rhs)
    return _wrap(
        f" {lp_name(constraint.name)}:",
        _terms(list(constraint.coefficients)),
        f" {constraint.comparator.value} {rhs}",
    )


def export_lp(model: IlpModel, flavor: LpFlavor = LpFlavor.BINDING) -> str:
    """Render ``model`` as LP-format text.

    Variable names are derived deterministically from the model's names, so
    two exports of the same workload are identical.

    Args:
        model: The ILP to export.
        flavor: Which subquery rows to write.

    Returns:
        The LP text: header comment, ``Minimize``, ``Subject To``, ``Binary``, ``End``.
    """
    families = _FAMILIES[flavor]
    rows = [row for row in model.constraints if row.family in families]

    lines = [
        f"\\* probeplan model flavor={flavor.value} variables={len(model.variables)} rows={len(rows)} *\\",
        "",
        "Minimize",
    ]
    lines.extend(_wrap(" obj:", _terms([(name, cost) for name, cost in model.goal.items()])))
    lines.append("")
    lines.append("Subject To")
    for row in rows:
        lines.extend(_row(row))
    lines.append("")
    lines.append("Binary")
    for name in model.variables:
        lines.append(f" {lp_name(name)}")
    lines.append("")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: IlpModel, path: Path, flavor: LpFlavor = LpFlavor.BINDING) -> None:
    """Export ``model`` to ``path`` as ASCII."""
    path.write_text(export_lp(model, flavor), encoding="ascii")
    logger.info("lp_exported", path=str(path), flavor=flavor.value, variables=len(model.variables))
