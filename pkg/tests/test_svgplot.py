import threading

import numpy as np
import pytest

from secsweep.network import Flatten, Linear, Network
from secsweep.svgplot import line_plot_svg


def test_rendering_is_deterministic():
    series = [("a", [0.0, 1.0, 2.0], [0.1, 0.5, 0.9]), ("b", [0.0, 1.0, 2.0], [0.0, 0.2, 0.4])]
    one = line_plot_svg(series, title="t", xlabel="x", ylabel="y")
    two = line_plot_svg(series, title="t", xlabel="x", ylabel="y")
    assert one == two
    assert one.startswith("<svg") and one.rstrip().endswith("</svg>")


def test_one_legend_entry_per_series():
    series = [(f"z={z}", [0.0, 1.0], [0.0, z / 10]) for z in range(10)]
    svg = line_plot_svg(series)
    for z in range(10):
        assert f">z={z}<" in svg
    assert svg.count("<polyline") == 10


def test_log_x_requires_positive_values():
    with pytest.raises(ValueError):
        line_plot_svg([("a", [0.0, 1.0], [0.0, 1.0])], logx=True)
    svg = line_plot_svg([("a", [760, 38170], [0.05, 0.01])], logx=True)
    assert "<polyline" in svg


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        line_plot_svg([])
    with pytest.raises(ValueError):
        line_plot_svg([("a", [], [])])


def test_concurrent_forward_backward_matches_serial():
    # same frozen parameters, disjoint batches, many threads
    rng = np.random.default_rng(0)
    model = Network(
        [Flatten(), Linear("fc", rng.normal(0, 0.3, (8, 4)).astype(np.float32), np.zeros(4, dtype=np.float32))],
        (2, 2, 2),
        4,
    )
    batches = [rng.random((5, 2, 2, 2), dtype=np.float32) for _ in range(8)]
    labels = [rng.integers(0, 4, size=5) for _ in range(8)]
    serial = [model.loss_and_grads(x, y, wrt=("input",)).input_grad for x, y in zip(batches, labels)]

    out = [None] * 8
    def work(i):
        out[i] = model.loss_and_grads(batches[i], labels[i], wrt=("input",)).input_grad

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for a, b in zip(serial, out):
        np.testing.assert_array_equal(a, b)
