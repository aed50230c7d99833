import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion checked by this test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    status = "PASS" if report.passed else "FAIL"
    capman = item.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(f"[{status}] {marker.args[0]}", flush=True)
    else:
        print(f"[{status}] {marker.args[0]}", flush=True)
