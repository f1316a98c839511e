"""Collects acceptance verdicts and prints them as one block after the run."""

from collections import defaultdict

_VERDICTS = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _VERDICTS.extend(v for k, v in report.user_properties if k == "acceptance")


def _line(label, ok, seconds, budget, detail):
    return f"criterion {label:<3} {'PASS' if ok else 'FAIL'}  [{seconds:6.2f} s / {budget:g} s]  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    groups = defaultdict(list)
    for v in _VERDICTS:
        groups[v["criterion"]].append(v)
    for criterion in sorted(groups, key=int):
        parts = sorted(groups[criterion], key=lambda v: v["part"])
        if len(parts) == 1 and not parts[0]["part"]:
            v = parts[0]
            terminalreporter.write_line(_line(criterion, v["ok"], v["seconds"], v["budget"], v["detail"]))
            continue
        seconds = sum(v["seconds"] for v in parts)
        budget = parts[0]["group_budget"]
        failed = [criterion + v["part"] for v in parts if not v["ok"]]
        ok = not failed and seconds <= budget
        detail = "all parts pass" if ok else f"failing: {', '.join(failed) or 'time budget'}"
        terminalreporter.write_line(_line(criterion, ok, seconds, budget, detail))
        for v in parts:
            terminalreporter.write_line("  " + _line(criterion + v["part"], v["ok"], v["seconds"], v["budget"],
                                                     v["detail"]))
