"""Byte-for-byte comparisons against frozen output files.

Regenerate with ``python tests/test_golden.py`` after an intentional format change.
"""

from pathlib import Path

import pytest

from busnoise.circuit import NoiseParams, build_memory_circuit, serialize
from busnoise.decoder import extract_graph
from busnoise.geometry import build_layout

GOLDEN = Path(__file__).parent / "golden"


def _circuit(d, channel):
    return build_memory_circuit(build_layout(d), d, "Z", NoiseParams(0.001, 0.002, channel))


PRODUCERS = {
    "layout_d3.txt": lambda: build_layout(3).dump(),
    "layout_d5.txt": lambda: build_layout(5).dump(),
    "circuit_d3_unbiased.txt": lambda: serialize(_circuit(3, "unbiased")),
    "circuit_d5_biased.txt": lambda: serialize(_circuit(5, "biased")),
    "graph_d3_unbiased.txt": lambda: extract_graph(_circuit(3, "unbiased")).dump(),
}


@pytest.mark.parametrize("name", sorted(PRODUCERS))
def test_matches_golden(name):
    assert PRODUCERS[name]() == (GOLDEN / name).read_text()


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for name, make in PRODUCERS.items():
        (GOLDEN / name).write_text(make())
