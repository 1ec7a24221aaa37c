"""
Pass/fail record shared by the invariant checks and the verify suites.
"""

from dataclasses import dataclass, field
from typing import Any, Dict


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    checked: int
    violations: int = 0
    detail: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_counts(
        cls, name: str, checked: int, violations: int, **detail: Any
    ) -> "CheckResult":
        return cls(name, violations == 0, checked, violations, detail)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "violations": self.violations,
            "detail": self.detail,
        }
