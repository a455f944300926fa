from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bpp_matroid.core import make_instance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60)
settings.load_profile("default")


@st.composite
def instances(draw, n_max=8, groups_max=3, k_max=3, denom=24, max_size=Fraction(1), min_n=0):
    n = draw(st.integers(min_n, n_max))
    g = draw(st.integers(1, groups_max))
    top = int(max_size * denom)
    sizes = [Fraction(draw(st.integers(1, top)), denom) for _ in range(n)]
    groups = [draw(st.integers(0, g - 1)) for _ in range(n)]
    caps = {x: draw(st.integers(1, k_max)) for x in sorted(set(groups))}
    return make_instance(sizes, groups, caps)


# one line per acceptance criterion, printed after the test run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
