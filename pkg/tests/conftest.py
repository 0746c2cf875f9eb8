from collections import OrderedDict

CRITERIA = OrderedDict([
    (1, "error-rate sweep over epsilon: monotone and under the bound chain"),
    (2, "error-rate sweep over voters: decreasing and under all three bounds"),
    (3, "Jensen bound vanishes with many voters"),
    (4, "simplified bound halves when voters double"),
    (5, "exact slice volume vs Monte Carlo slab, half mass, central cap"),
    (6, "distance density is maximal at zero"),
    (7, "reference score matrix, hyperplanes and sensitivity"),
    (8, "aggregation, privacy and sampler property suites"),
    (9, "closed-form tau vs grid-search argmin"),
])

_outcomes: dict[int, list[tuple[str, bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


def pytest_runtest_logreport(report):
    n = report.user_properties and dict(report.user_properties).get("criterion")
    if not n:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(n, []).append((report.nodeid, report.passed))


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark:
        item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _outcomes.get(n)
        if not runs:
            tr.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        failed = [nid for nid, ok in runs if not ok]
        status = "FAIL" if failed else "PASS"
        tr.write_line(f"criterion {n}: {status}  {title} ({len(runs) - len(failed)}/{len(runs)} checks)")
        for nid in failed:
            tr.write_line(f"    failed: {nid}")
