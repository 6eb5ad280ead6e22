CRITERIA = {
    1: "character sums are 0/1-valued on every small field",
    2: "exhaustive pairwise agreement stays within the distance bound",
    3: "analytic hypercube eigenbasis and spectral gap",
    4: "local-to-global variance inequality on 200 seeded instances",
    5: "honest strategies pass with exact probability 1",
    6: "adversarial points function: headline failure and best agreement",
    7: "dilation preserves joint statistics; distance counterexample",
    8: "orthogonalization bounds on 100 perturbed measurement pairs",
    9: "improvement program residuals and diagonal-oracle agreement",
    10: "self-improvement guarantees on 25 seeded instances",
    11: "sandwich telescoping, honest pasting, distinct-tuple distance",
    12: "scalar truncation and interpolation inequalities on dense grids",
    13: "CLI reruns are byte-identical given config and seed",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    reports = []
    for status in ("passed", "failed", "error", "skipped"):
        reports.extend(terminalreporter.getreports(status))
    seen = {}
    for rep in reports:
        if "test_acceptance" not in rep.nodeid:
            continue
        for number in CRITERIA:
            if f"criterion_{number:02d}" in rep.nodeid:
                outcome = rep.outcome.upper()
                prev = seen.get(number)
                if prev != "FAILED":
                    seen[number] = outcome if prev in (None, "PASSED") else prev
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(seen):
        status = {"PASSED": "PASS", "FAILED": "FAIL"}.get(seen[number], seen[number])
        terminalreporter.write_line(
            f"criterion {number:02d} [{status}] {CRITERIA[number]}"
        )
