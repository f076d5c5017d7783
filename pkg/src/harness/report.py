"""
Run Reports

Per-run metrics and the CSV / JSON writers for bench tables. Floats are
written with 9 significant digits in both formats so the two agree field
for field.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from ..baselines import Solution
from ..errors import InstanceFormatError

CSV_COLUMNS = (
    "instance", "algorithm", "epsilon", "seed", "m", "k", "delta", "cost", "opt",
    "ratio", "bound", "rounds", "queries", "wall_ms", "fallback", "capped",
)


@dataclass
class RunReport:
    """Metrics of one solver run."""

    algorithm: str
    seed: Optional[int]
    rounds: int
    queries: int
    wall_ms: float
    cost: float
    achieved: int
    delta_max_singleton: int
    nis_audit_summary: Tuple[int, int] = (0, 0)
    fallback_used: bool = False
    m_prime_capped: bool = False
    ratio_vs_exact: Optional[float] = None
    instance: str = ""
    epsilon: Optional[float] = None
    m: int = 0
    k: int = 0
    opt: Optional[float] = None
    bound: Optional[float] = None
    round_bound: Optional[int] = None
    shrink_ratios: List[float] = field(default_factory=list)
    nis_unfinished: int = 0
    preprocess: Optional[Dict[str, int]] = None
    error: Optional[str] = None

    @property
    def within_bound(self) -> Optional[bool]:
        """cost <= bound·OPT (absolute tolerance 1e-9), when OPT is known."""
        if self.opt is None or self.bound is None or self.error:
            return None
        return self.cost <= self.bound * self.opt + 1e-9

    def attach_opt(self, opt: Optional[float], bound: Optional[float]) -> None:
        self.opt = opt
        self.bound = bound
        if opt is None:
            self.ratio_vs_exact = None
        elif opt > 0:
            self.ratio_vs_exact = self.cost / opt
        else:
            self.ratio_vs_exact = 1.0 if self.cost == 0 else float("inf")


def format_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.9g}"


def _cell(report: RunReport, column: str, timing: bool) -> str:
    if column == "instance":
        return report.instance
    if column == "algorithm":
        return report.algorithm
    if report.error:
        return ""
    values = {
        "epsilon": format_float(report.epsilon),
        "seed": "" if report.seed is None else str(report.seed),
        "m": str(report.m),
        "k": str(report.k),
        "delta": str(report.delta_max_singleton),
        "cost": format_float(report.cost),
        "opt": format_float(report.opt),
        "ratio": format_float(report.ratio_vs_exact),
        "bound": format_float(report.bound),
        "rounds": str(report.rounds),
        "queries": str(report.queries),
        "wall_ms": format_float(report.wall_ms) if timing else "",
        "fallback": str(int(report.fallback_used)),
        "capped": str(int(report.m_prime_capped)),
    }
    return values[column]


def csv_text(reports: Iterable[RunReport], timing: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow([_cell(report, column, timing) for column in CSV_COLUMNS])
    return buffer.getvalue()


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def json_rows(reports: Iterable[RunReport], timing: bool = True) -> List[dict]:
    """JSON rows carrying the CSV columns (same rounding) plus run details."""
    rows = []
    for report in reports:
        row = {}
        for column in CSV_COLUMNS:
            cell = _cell(report, column, timing)
            row[column] = cell if column in ("instance", "algorithm") else _parse_cell(cell)
        calls, satisfied = report.nis_audit_summary
        row.update({
            "achieved": report.achieved,
            "nis_calls": calls,
            "nis_satisfied": satisfied,
            "nis_unfinished": report.nis_unfinished,
            "round_bound": report.round_bound,
            "shrink_ratios": [float(format_float(r)) for r in report.shrink_ratios],
            "preprocess": report.preprocess,
            "error": report.error,
        })
        rows.append(row)
    return rows


def write_csv(reports: List[RunReport], path: Union[str, Path], timing: bool = True) -> None:
    Path(path).write_text(csv_text(reports, timing), encoding="utf-8")


def write_json(reports: List[RunReport], path: Union[str, Path], timing: bool = True) -> None:
    text = json.dumps(json_rows(reports, timing), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def report_to_dict(report: RunReport) -> dict:
    data = asdict(report)
    data["nis_audit_summary"] = list(report.nis_audit_summary)
    return data


def save_solution(solution: Solution, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(solution.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_solution(path: Union[str, Path]) -> Solution:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"schema violation: solution {path} is not valid JSON ({e})")
    return Solution.from_dict(data)
