from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass
class ValidationReport:
    """Outcome of a sampled hypothesis check."""
    name: str
    passed: bool
    worst_violation: float
    defects: Dict[str, float] = field(default_factory=dict)
    messages: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "defects": dict(self.defects),
            "messages": list(self.messages),
        }


@dataclass
class Verdict:
    """A pass/fail verdict together with the measured constants behind it."""
    check: str
    passed: bool
    measured: Dict[str, Any] = field(default_factory=dict)
    margin: float = 0.0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "passed": self.passed,
            "measured": self.measured,
            "margin": self.margin,
            "notes": list(self.notes),
        }
