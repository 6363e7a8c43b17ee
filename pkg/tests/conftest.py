import pytest

from normapprox.arith import NumberField
from normapprox.lattices import ModuleLattice, multiplier_ring
from normapprox.units import fundamental_units

# (poly, root selector, basis or None) for the lattices used throughout
FIELDS = {
    "golden": ([-1, -1, 1], "largest", None),
    "sqrt2": ([-2, 0, 1], "largest", None),
    "cbrt2": ([-2, 0, 0, 1], "largest", None),
    "heptagon": ([-1, -2, 1, 1], "positive", None),
    "d15529": ([21, -19, 0, 1], "smallest-positive", None),
    "two_sqrt5": ([-5, 0, 1], "largest", [[1], [0, 2]]),
}


class Bundle:
    def __init__(self, name):
        poly, root, basis = FIELDS[name]
        self.name = name
        self.field = NumberField(poly, root=root)
        self.lat = ModuleLattice(self.field, basis)
        self._ring = None
        self._group = None

    @property
    def ring(self):
        if self._ring is None:
            self._ring = multiplier_ring(self.lat)
        return self._ring

    @property
    def group(self):
        if self._group is None:
            self._group = fundamental_units(self.ring)
        return self._group


_cache = {}


def bundle(name) -> Bundle:
    if name not in _cache:
        _cache[name] = Bundle(name)
    return _cache[name]


@pytest.fixture(params=sorted(FIELDS))
def any_bundle(request):
    return bundle(request.param)


@pytest.fixture
def golden():
    return bundle("golden")


@pytest.fixture
def sqrt2():
    return bundle("sqrt2")


@pytest.fixture
def cbrt2():
    return bundle("cbrt2")


@pytest.fixture
def heptagon():
    return bundle("heptagon")


@pytest.fixture
def d15529():
    return bundle("d15529")


@pytest.fixture
def two_sqrt5():
    return bundle("two_sqrt5")


# Acceptance criteria report one line each; they are collected here and
# repeated at the end of the run so they survive output capturing.
ACCEPTANCE_LINES = []


def record_acceptance(label: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
