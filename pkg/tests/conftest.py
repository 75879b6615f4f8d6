import pytest

_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (rep.when == "call" or rep.failed or rep.skipped):
        prev = _acceptance.get(item.name, "PASS")
        if rep.failed:
            _acceptance[item.name] = "FAIL"
        elif rep.skipped:
            _acceptance[item.name] = "SKIP"
        else:
            _acceptance[item.name] = prev


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    from test_acceptance import LABELS

    terminalreporter.section("acceptance")
    for name, label in LABELS.items():
        if name in _acceptance:
            terminalreporter.write_line(f"{_acceptance[name]}  {label}")
