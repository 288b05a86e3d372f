"""Pass/fail reports shared by the check_* functions."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    rows: tuple = ()
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    @property
    def failures(self):
        return [r for r in self.rows if not r.get("ok", True)]

    def to_text(self):
        lines = [f"[{self.name}]", f"passed = {self.passed}"]
        for key in sorted(self.details):
            lines.append(f"{key} = {_fmt(self.details[key])}")
        for i, row in enumerate(self.rows):
            cells = ", ".join(f"{k}={_fmt(v)}" for k, v in row.items())
            lines.append(f"row_{i} = {cells}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(float(v))
    return str(v)
