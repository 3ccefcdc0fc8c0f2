#!/usr/bin/env python3
"""
Formatting Utilities for the flocking simulator
Handles number formatting and human-readable reports
"""

import math
from typing import Any, Dict, Iterable, Optional

from colorama import Fore, Style


def sig9(value: float) -> str:
    """Nine significant digits, the precision of every emitted number"""
    return f"{value:.9g}"


class OutputFormatter:
    """Utility class for formatting reports"""

    def __init__(self, color: bool = True):
        self.color = color

    def _paint(self, text: str, colour: str) -> str:
        return f"{colour}{text}{Style.RESET_ALL}" if self.color else text

    def format_check(self, check) -> str:
        status = self._paint("PASS", Fore.GREEN) if check.passed else self._paint("FAIL", Fore.RED)
        observed = sig9(check.observed) if isinstance(check.observed, float) else str(check.observed)
        return f"[{status}] {check.suite}.{check.name}: observed {observed} ({check.relation} {check.tolerance})"

    def format_verification_report(self, checks: Iterable) -> str:
        """One line per check plus a totals line"""
        checks = list(checks)
        lines = ["# Verification Report"]
        lines += [self.format_check(check) for check in checks]
        failed = sum(1 for check in checks if not check.passed)
        total = f"{len(checks) - failed}/{len(checks)} checks passed"
        lines.append("")
        lines.append(self._paint(f"✅ {total}", Fore.GREEN) if failed == 0 else self._paint(f"❌ {total}", Fore.RED))
        return "\n".join(lines)

    def format_run_summary(self, name: str, summary: Dict[str, Any],
                           gain_report: Optional[Dict[str, Any]] = None) -> str:
        """Short text summary of a finished run"""
        lines = [f"# Run Summary: {name}"]
        for key, value in summary.items():
            if isinstance(value, (dict, list)):
                continue
            lines.append(f"- {key}: {sig9(value) if isinstance(value, float) else value}")
        if gain_report:
            lines.append("")
            lines.append("## Gain Condition")
            for key, value in gain_report.items():
                if isinstance(value, float) and math.isfinite(value):
                    value = sig9(value)
                lines.append(f"- {key}: {value}")
        return "\n".join(lines)


def get_output_formatter(color: bool = True) -> OutputFormatter:
    """Get a configured output formatter instance"""
    return OutputFormatter(color)
