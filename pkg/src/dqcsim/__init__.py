"""Simulation of two-node distributed quantum circuits with buffered, asynchronous entanglement generation."""
from .circuit import Circuit, Gate, GateKind
from .engine import DESIGNS, SimConfig, SimResult, ideal_depth, run, sweep
from .entnet import EntParams
from .noise import NoiseParams

__all__ = ["Circuit", "Gate", "GateKind", "DESIGNS", "SimConfig", "SimResult", "ideal_depth", "run", "sweep",
           "EntParams", "NoiseParams"]
__version__ = "0.1.0"
