"""Configuration texts shared by the tests."""

from pathlib import Path

ZERO_DATA = """\
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = linear
graph.c0 = 1
run.lambda = 0.05
run.tau = 0.05
run.t_end = 0.2
initial.profile = zero
"""

HELESHAW_SMALL = """\
# small Hele-Shaw run with random mean-zero data
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = heleshaw_clipped
graph.c0_prime = 1
run.lambda = 0.05
run.tau = 0.05
run.t_end = 0.2
initial.profile = random_mean_zero
initial.seed = 7
initial.amplitude = 2
forcing.kind = random_mean_zero
forcing.seed = 11
forcing.amplitude = 0.5
output.stride = 2
"""

HELESHAW_UNFORCED = """\
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = heleshaw_clipped
graph.c0_prime = 1
run.lambda = 0.05
run.tau = 0.05
run.t_end = 0.2
initial.profile = random_mean_zero
initial.seed = 7
initial.amplitude = 2
"""

HELESHAW_DESK = """\
geometry.kind = strip
geometry.nx = 32
geometry.ny = 16
graph.preset = heleshaw_clipped
graph.c0_prime = 1
run.lambda = 0.05
run.tau = 0.01
run.t_end = 1
initial.profile = random_mean_zero
initial.seed = 7
initial.amplitude = 2
forcing.kind = random_mean_zero
forcing.seed = 11
"""

INTERVAL_DEADZONE = """\
geometry.kind = interval
geometry.n = 16
graph.preset = deadzone_jump
graph.a = -0.5
graph.b = 1
graph.c0 = 1
graph.c0_prime = 0.5
run.lambda = 0.1
run.tau = 0.05
run.t_end = 0.2
initial.profile = random_mean_zero
initial.seed = 3
"""

TWO_GRAPH = """\
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = heleshaw_clipped
graph.c0_prime = 1
surface_graph.preset = deadzone_jump
surface_graph.a = 0
surface_graph.b = 0.5
surface_graph.c0 = 1
surface_graph.c0_prime = 0.5
run.lambda = 0.05
run.tau = 0.05
run.t_end = 0.2
initial.profile = random_mean_zero
initial.seed = 5
initial.amplitude = 2
"""

SHIFTED_MEAN = """\
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = heleshaw_clipped
graph.c0_prime = 1
run.lambda = 0.05
run.tau = 0.05
run.t_end = 0.2
initial.profile = constant_plus_mode
initial.m0 = 0.3
initial.k = 1
initial.amplitude = 1.5
"""

SINGLE_MODE = """\
geometry.kind = strip
geometry.lx = 1
geometry.nx = 64
geometry.ny = 2
graph.preset = linear
graph.c0 = 1
run.lambda = 0.001
run.tau = 0.004
run.t_end = 0.05
initial.profile = single_mode
initial.k = 1
forcing.kind = manufactured
"""

LINEAR_SWEEP = """\
geometry.kind = strip
geometry.nx = 8
geometry.ny = 4
graph.preset = linear
graph.c0 = 1
run.lambda = 0.2
run.tau = 0.01
run.t_end = 0.5
initial.profile = random_mean_zero
initial.seed = 1
"""

BAD_TAU = """\
geometry.kind = strip
graph.preset = linear
run.lambda = 0.05
run.tau = 0
run.t_end = 1
"""


def write_config(directory: Path, text: str, name: str = "run.env") -> Path:
    """Write a config text and return its path; ``output.directory`` keeps runs apart."""
    path = directory / name
    path.write_text(text, encoding="utf-8")
    return path
