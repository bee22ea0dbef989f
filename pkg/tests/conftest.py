import re


def pytest_runtest_logreport(report):
    # the acceptance tests print their own PASS lines; mirror failures so
    # every criterion has exactly one pass/fail line
    if report.when != "call" or not report.failed:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m:
        print(f"\nacceptance criterion {int(m.group(1)):2d}: FAIL")
