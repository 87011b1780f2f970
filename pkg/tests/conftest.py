import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name, bound): acceptance criterion with runtime bound in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, name, bound = m.args
    props = dict(item.user_properties)
    _RESULTS[n] = (name, rep.passed, props.get("elapsed"), bound, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        name, ok, elapsed, bound, detail = _RESULTS[n]
        t = "n/a" if elapsed is None else f"{elapsed:.2f}s"
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {name} ({t} / bound {bound}s) {detail}".rstrip())
