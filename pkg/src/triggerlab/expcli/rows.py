"""Result rows and their CSV serialization.

One global schema serves every suite:

    experiment,seed,replicate,params,metric,value,bound,tolerance,passed

``replicate`` is a replicate index or the marker ``agg`` for aggregates;
``params`` echoes the full parameter block as ``key=value`` pairs joined by
semicolons; ``tolerance`` records the margin the pass/fail comparison used;
``passed`` is ``pass``/``fail`` or empty for informational rows.  Floats are
written with repr (shortest round-trip), so identical runs are
byte-identical.  The first line is a ``#`` comment recording the RNG
algorithm identifier.
"""

from __future__ import annotations

from dataclasses import dataclass

from triggerlab.rngstream import RNG_ALGORITHM

CSV_COLUMNS = ("experiment", "seed", "replicate", "params", "metric",
               "value", "bound", "tolerance", "passed")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    seed: int
    replicate: str
    params: str
    metric: str
    value: float
    bound: float | None = None
    tolerance: float | None = None
    passed: bool | None = None


def params_echo(params: dict) -> str:
    """Deterministic key=value echo of a parameter block."""
    parts = []
    for key in sorted(params):
        parts.append(f"{key}={_fmt(params[key])}")
    return ";".join(parts)


def rows_to_csv(rows: list) -> str:
    lines = [f"# rng = {RNG_ALGORITHM}", ",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join([
            r.experiment,
            str(r.seed),
            r.replicate,
            r.params,
            r.metric,
            _fmt(r.value),
            _fmt(r.bound),
            _fmt(r.tolerance),
            "" if r.passed is None else ("pass" if r.passed else "fail"),
        ]))
    return "\n".join(lines) + "\n"


def all_passed(rows: list) -> bool:
    return all(r.passed for r in rows if r.passed is not None)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
