import sys
import textwrap

import pytest

FREE = """\
scenario:
  kind: accelerated
clocks:
  - label: A
    dimension: 16
    tick: 0.0625
particles:
  - label: M
    grid: {min: -8.0, max: 8.0, count: 32}
    mass: 1.0
profile:
  family: zero
run:
  perspective: A
  readings: {start: 0.0, stop: 1.0, count: 11}
  initial: {particle_width: 1.0}
  observables: [position:M, momentum:M, energy:M]
"""

DECAY = """\
scenario:
  kind: time-parametrized
clocks:
  - label: A
    dimension: 64
    tick: 0.015625
particles:
  - label: M
    grid: {min: -32.0, max: 32.0, count: 32}
profile:
  family: linear
  alpha: 0.1
run:
  perspective: A
  readings: {start: 0.0, stop: 1.0, count: 129}
  initial: {particle_width: 1.0}
  observables: [position:M]
"""

GRAVITY = """\
scenario:
  kind: gravitational
constants: {G: 0.0}
clocks:
  - {label: A, dimension: 3, tick: 1.0}
  - {label: B, dimension: 3, tick: 1.0}
particles:
  - label: M
    grid: {min: -1.0, max: 1.0, count: 2}
  - label: N
    grid: {min: 1.0, max: 3.0, count: 4}
run:
  perspective: A
  readings: {start: 0.0, stop: 1.0, count: 11}
"""


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="config.yaml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
