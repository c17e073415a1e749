"""Shared test helpers."""
import numpy as np

from resetsim import PiecewiseLinearPath

#: (index, name, "PASS"/"FAIL") tuples collected by the acceptance suite
ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def random_admissible_path(rng, max_pieces: int = 6) -> PiecewiseLinearPath:
    """Random piecewise-linear path meeting the finite-rate admissibility
    conditions: starts at 0 and every flagged jump lands at 0."""
    while True:
        k = int(rng.integers(2, max_pieces + 1))
        interior = np.sort(rng.uniform(0.02, 0.98, size=k - 2))
        bp = np.concatenate([[0.0], interior, [1.0]])
        if np.all(np.diff(bp) > 1e-4):
            break
    values = rng.uniform(-1.5, 1.5, size=k)
    values[0] = 0.0
    flags = rng.random(max(k - 2, 0)) < 0.3
    if flags.size:
        inner = values[1:-1]
        inner[flags] = 0.0
        values[1:-1] = inner
    return PiecewiseLinearPath(bp, values, flags.tolist())


def pytest_terminal_summary(terminalreporter):
    """One visible line per acceptance criterion, outside output capture."""
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for index, name, status in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {index} ({name}): {status}")
