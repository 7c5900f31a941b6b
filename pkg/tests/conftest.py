import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from liphilbert.grid import TorusGrid

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid64():
    return TorusGrid(64)


@pytest.fixture(scope="session")
def grid128():
    return TorusGrid(128)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion after the run
# ---------------------------------------------------------------------------

CRITERIA = {
    "AC1": "symbol correctness",
    "AC2": "constant-field norm",
    "AC3": "standard square function",
    "AC4": "adapted square function",
    "AC5": "one-variable commutation",
    "AC6": "commutator decay",
    "AC7": "chart Lipschitz bound",
    "AC8": "wave packets",
    "AC9": "orientation vanishing",
    "AC10": "beta Carleson",
    "AC11": "Kakeya counting",
    "AC12": "Knapp example",
    "AC13": "exact identities",
}

_RESULTS = pytest.StashKey[dict]()


class _Part:
    def __init__(self, store: dict, ac: str, name: str):
        self.store, self.ac, self.name = store, ac, name
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.store.setdefault(self.ac, []).append((self.name, exc_type is None, self.detail))
        return False


@pytest.fixture
def criterion(request):
    """``with criterion("AC1", "part") as part: ...`` records the part as PASS unless it raises."""
    store = request.config.stash.setdefault(_RESULTS, {})
    return lambda ac, name: _Part(store, ac, name)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for ac, title in CRITERIA.items():
        parts = store.get(ac)
        if not parts:
            terminalreporter.write_line(f"{ac} NOT RUN  {title}")
            continue
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        desc = "; ".join(f"{name}: {'ok' if ok else 'failed'}{f' ({d})' if d else ''}" for name, ok, d in parts)
        terminalreporter.write_line(f"{ac} {verdict}  {title} [{desc}]")
