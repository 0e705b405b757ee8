"""Verification record shared by the curvature and inequality checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PASS, FAIL, SKIP = "pass", "fail", "skip"


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isnan(f) or math.isinf(f):
            return repr(f)
        return f
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class CheckReport:
    """Outcome of one sampled inequality check.

    ``worst_slack`` is the minimum of ``rhs - lhs`` over all trials and
    ``worst_case`` holds the inputs of that trial, so the value can be
    replayed.  A report passes when ``worst_slack >= -tolerance``; checks
    whose hypotheses do not hold are marked ``skip``.
    """

    check_id: str
    params: dict = field(default_factory=dict)
    worst_slack: float = math.inf
    worst_case: dict = field(default_factory=dict)
    tolerance: float = 0.0
    trials: int = 0
    status: str = PASS
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def record(self, slack: float, case: dict) -> None:
        self.trials += 1
        if slack < self.worst_slack or not self.worst_case:
            self.worst_slack = float(slack)
            self.worst_case = case

    def finalize(self) -> "CheckReport":
        if self.status != SKIP:
            self.status = PASS if self.worst_slack >= -self.tolerance else FAIL
        return self

    @classmethod
    def skipped(cls, check_id: str, reason: str, params: dict | None = None) -> "CheckReport":
        return cls(check_id, params or {}, status=SKIP, notes=[reason])

    @classmethod
    def errored(cls, check_id: str, exc: BaseException, params: dict | None = None) -> "CheckReport":
        return cls(check_id, params or {}, worst_slack=-math.inf, status=FAIL,
                   notes=[f"{type(exc).__name__}: {exc}"])

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "status": self.status,
            "passed": self.passed,
            "worst_slack": _jsonable(self.worst_slack),
            "tolerance": self.tolerance,
            "trials": self.trials,
            "params": _jsonable(self.params),
            "worst_case": _jsonable(self.worst_case),
            "notes": list(self.notes),
        }
