import pytest

from finlap import AlternatingSeries, ForgeParams, forge
from finlap.zeros import find_zeros


@pytest.fixture(scope="session")
def default_cert():
    return forge(AlternatingSeries.geometric(), ForgeParams(omega=0.1, pairs=5))


@pytest.fixture(scope="session")
def default_series(default_cert):
    return default_cert.series()


@pytest.fixture(scope="session")
def default_zeros(default_cert, default_series):
    return find_zeros(default_cert, default_series, rel_tol=1e-12)


@pytest.fixture(scope="session")
def small_cert():
    return forge(AlternatingSeries.geometric(), ForgeParams(omega=0.1, pairs=1))


@pytest.fixture(scope="session")
def cert_m3():
    return forge(AlternatingSeries.geometric(), ForgeParams(omega=0.1, pairs=3))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request, capsys):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
