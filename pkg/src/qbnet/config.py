"""Experiment configuration files.

The format is INI-style text read with :mod:`configparser`::

    [network]
    n = 3                       ; number of qubits

    [model]
    kind = consensus            ; consensus | amplitude_damping | depolarizing | dense
    edges =
        1-2: 1.0                ; qubit pair and swap rate (1/time)
        2-3: 1.0

    [measurement]
    theta = 0.0                 ; Bloch polar angle of v0, radians
    phi = 0.0                   ; Bloch azimuth of v0, radians

    [run]
    tau = 1.0                   ; measurement period (time)

Preset models take ``gamma`` (rate, 1/time). ``kind = dense`` reads
``hamiltonian`` and a comma-separated ``dissipators`` list of ``.npy`` files
relative to the config file. Optional keys: ``[run] tau_grid`` (comma list),
``[run] eps`` (positivity threshold) and a ``[simulation]`` section with
``steps``, ``trajectories``, ``seed`` and ``initial`` (a bit string, or
``mixed`` to start from ``I/N``).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .consensus import InteractionGraph, consensus_as_lindblad
from .errors import ConfigError
from .hilbert import MAX_QUBITS
from .lindblad import LindbladModel, amplitude_damping, depolarizing
from .measurement import QubitMeasurement, parse_bits, qubit_basis_from_angles

MODEL_KINDS = ("consensus", "amplitude_damping", "depolarizing", "dense")
_EDGE_RE = re.compile(r'^"?\s*(\d+)\s*-\s*(\d+)\s*:\s*([^"\s]+)\s*"?$')


@dataclass(frozen=True)
class SimulationBlock:
    steps: int = 1000
    trajectories: int = 1
    seed: int = 0
    initial: str = "mixed"


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    kind: str
    tau: float
    theta: float = 0.0
    phi: float = 0.0
    graph: InteractionGraph | None = None
    model: LindbladModel | None = None
    gamma: float | None = None
    tau_grid: tuple = ()
    eps: float | None = None
    simulation: SimulationBlock = field(default_factory=SimulationBlock)
    source: str = "<string>"

    @property
    def is_consensus(self) -> bool:
        return self.kind == "consensus"

    @property
    def measurement(self) -> QubitMeasurement:
        return qubit_basis_from_angles(self.theta, self.phi)

    def lindblad_model(self) -> LindbladModel:
        return consensus_as_lindblad(self.graph) if self.is_consensus else self.model


class _Reader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        try:
            self.cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    def line_of(self, section: str, key: str) -> int | None:
        current = None
        for no, line in enumerate(self.text.splitlines(), start=1):
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                current = s[1:-1].strip()
            elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
                return no
        return None

    def fail(self, section: str, key: str, msg: str):
        line = self.line_of(section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    def raw(self, section: str, key: str, default=None, required=False):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            raise ConfigError(f"{self.source}: missing required field [{section}] {key}")
        return default

    def number(self, section, key, default=None, required=False, kind=float):
        v = self.raw(section, key, None, required)
        if v is None:
            return default
        try:
            x = kind(v)
        except ValueError:
            self.fail(section, key, f"expected {kind.__name__}, got {v!r}")
        if kind is float and not math.isfinite(x):
            self.fail(section, key, f"must be finite, got {v!r}")
        return x


def _parse_edges(reader: _Reader, n: int) -> InteractionGraph:
    text = reader.raw("model", "edges", "")
    entries = [e.strip() for chunk in text.splitlines() for e in chunk.split(",") if e.strip()]
    edges = {}
    for e in entries:
        m = _EDGE_RE.match(e)
        if not m:
            reader.fail("model", "edges", f"cannot parse edge {e!r}; expected 'j-k: weight'")
        j, k = int(m.group(1)), int(m.group(2))
        try:
            w = float(m.group(3))
        except ValueError:
            reader.fail("model", "edges", f"edge {e!r} has non-numeric weight")
        if not (w > 0 and math.isfinite(w)):
            reader.fail("model", "edges", f"edge {j}-{k} weight must be positive, got {w}")
        if (min(j, k), max(j, k)) in edges:
            reader.fail("model", "edges", f"duplicate edge {j}-{k}")
        edges[(min(j, k), max(j, k))] = w
    try:
        return InteractionGraph(n, edges)
    except ValueError as exc:
        reader.fail("model", "edges", str(exc))


def _load_matrix(reader: _Reader, base: Path, key: str, name: str, N: int) -> np.ndarray:
    path = base / name
    if not path.exists():
        reader.fail("model", key, f"file not found: {path}")
    try:
        m = np.load(path)
    except (OSError, ValueError) as exc:
        reader.fail("model", key, f"cannot read {path}: {exc}")
    if m.shape != (N, N):
        reader.fail("model", key, f"{path} has shape {m.shape}, expected {(N, N)}")
    return m


def parse_config(text: str, source: str = "<string>", base_dir: Path | None = None) -> ExperimentConfig:
    rd = _Reader(text, source)
    n = rd.number("network", "n", required=True, kind=int)
    if not 1 <= n <= MAX_QUBITS:
        rd.fail("network", "n", f"qubit count must be in 1..{MAX_QUBITS}, got {n}")
    kind = rd.raw("model", "kind", required=True).lower()
    if kind not in MODEL_KINDS:
        rd.fail("model", "kind", f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")

    tau = rd.number("run", "tau", required=True)
    if tau < 0:
        rd.fail("run", "tau", f"must be non-negative, got {tau}")
    grid_text = rd.raw("run", "tau_grid")
    grid = ()
    if grid_text:
        try:
            grid = tuple(float(x) for x in grid_text.replace("\n", ",").split(",") if x.strip())
        except ValueError:
            rd.fail("run", "tau_grid", f"expected comma-separated numbers, got {grid_text!r}")
        if any(t <= 0 for t in grid) or list(grid) != sorted(grid):
            rd.fail("run", "tau_grid", "must be sorted positive values")
    eps = rd.number("run", "eps")
    if eps is not None and eps <= 0:
        rd.fail("run", "eps", f"must be positive, got {eps}")

    graph = model = gamma = None
    if kind == "consensus":
        graph = _parse_edges(rd, n)
    elif kind in ("amplitude_damping", "depolarizing"):
        gamma = rd.number("model", "gamma", required=True)
        if not gamma > 0:
            rd.fail("model", "gamma", f"rate must be positive, got {gamma}")
        model = (amplitude_damping if kind == "amplitude_damping" else depolarizing)(n, gamma)
    else:
        base = base_dir or Path(".")
        N = 2**n
        h = _load_matrix(rd, base, "hamiltonian", rd.raw("model", "hamiltonian", required=True), N)
        names = [s.strip() for s in (rd.raw("model", "dissipators", "") or "").split(",") if s.strip()]
        ops = [_load_matrix(rd, base, "dissipators", s, N) for s in names]
        try:
            model = LindbladModel(h, tuple(ops))
        except ValueError as exc:
            rd.fail("model", "hamiltonian", str(exc))

    sim = SimulationBlock(
        steps=rd.number("simulation", "steps", 1000, kind=int),
        trajectories=rd.number("simulation", "trajectories", 1, kind=int),
        seed=rd.number("simulation", "seed", 0, kind=int),
        initial=rd.raw("simulation", "initial", "mixed"),
    )
    if sim.steps < 1:
        rd.fail("simulation", "steps", "must be at least 1")
    if sim.trajectories < 1:
        rd.fail("simulation", "trajectories", "must be at least 1")
    if not 0 <= sim.seed < 2**64:
        rd.fail("simulation", "seed", "must be an unsigned 64-bit integer")
    if sim.initial != "mixed":
        try:
            bits = parse_bits(sim.initial)
        except ValueError as exc:
            rd.fail("simulation", "initial", str(exc))
        if len(bits) != n:
            rd.fail("simulation", "initial", f"expected {n} bits, got {sim.initial!r}")

    return ExperimentConfig(
        n=n,
        kind=kind,
        tau=tau,
        theta=rd.number("measurement", "theta", 0.0),
        phi=rd.number("measurement", "phi", 0.0),
        graph=graph,
        model=model,
        gamma=gamma,
        tau_grid=grid,
        eps=eps,
        simulation=sim,
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), str(path), path.parent)


def bundled_config_text(name: str = "path3_example.cfg") -> str:
    return resources.files("qbnet.data").joinpath(name).read_text(encoding="utf-8")


def bundled_config(name: str = "path3_example.cfg") -> ExperimentConfig:
    return parse_config(bundled_config_text(name), name)
