"""Verification records, JSON-lines reports, and human-readable summaries."""

import json
from dataclasses import asdict, dataclass, field

from .errors import InputError


@dataclass
class CheckRecord:
    """One verified identity or inequality: sides, margin, tolerance, verdict."""

    id: str
    anchor: str  # descriptive tag of the checked statement, or "plumbing"
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool

    def to_json(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return json.dumps(d, sort_keys=True)


@dataclass
class VerificationReport:
    """Ordered collection of check records plus run environment metadata."""

    records: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    def add(self, id, anchor, lhs, rhs, margin, tol, passed):
        self.records.append(
            CheckRecord(
                id=id,
                anchor=anchor,
                lhs=float(lhs),
                rhs=float(rhs),
                margin=float(margin),
                tol=float(tol),
                passed=bool(passed),
            )
        )

    def extend(self, other):
        self.records.extend(other.records)

    @property
    def all_passed(self):
        return all(r.passed for r in self.records)

    @property
    def failures(self):
        return [r for r in self.records if not r.passed]

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(rec.to_json() + "\n")

    @classmethod
    def read_jsonl(cls, path):
        report = cls()
        with open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    d = json.loads(line)
                    report.add(
                        d["id"], d["anchor"], d["lhs"], d["rhs"], d["margin"], d["tol"], d["pass"]
                    )
                except (json.JSONDecodeError, KeyError) as exc:
                    raise InputError(f"malformed report line {line_no} in {path}: {exc}") from exc
        return report


def report_summary(report):
    """One line per check: anchor, margin, pass/fail; totals at the end."""
    if not report.records:
        return "no checks run\n"
    id_width = max(len(r.id) for r in report.records)
    anchor_width = max(len(r.anchor) for r in report.records)
    lines = []
    for r in report.records:
        status = "PASS" if r.passed else "FAIL <<<"
        lines.append(
            f"{r.id:<{id_width}}  {r.anchor:<{anchor_width}}  "
            f"margin={r.margin:+.6e}  tol={r.tol:.3e}  {status}"
        )
    n_fail = len(report.failures)
    lines.append(f"{len(report.records)} checks, {n_fail} failed")
    return "\n".join(lines) + "\n"
