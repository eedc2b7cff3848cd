from fractions import Fraction

import pytest

from algdim.gales import (all_in_on_zero, bernoulli_likelihood_martingale, constant_martingale,
                          random_structured_martingale)

ACCEPTANCE_LINES: list[str] = []


def martingale_suite():
    """d = 1, all-in-on-0, Bernoulli(1/4) likelihood, 10 seeded random structured."""
    return ([constant_martingale(), all_in_on_zero(), bernoulli_likelihood_martingale(Fraction(1, 4))]
            + [random_structured_martingale(seed) for seed in range(10)])


@pytest.fixture(scope="session")
def suite():
    return martingale_suite()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
