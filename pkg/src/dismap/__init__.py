"""Distributed quantum circuit mapping over EPR-linked workers."""
from .circuit import Circuit, Gate, GateKind, lower
from .hardware import SystemConfig, bundled_config, load_system_config
from .optimizer import OptimizerOptions, Plan, baseline_plan, optimize
from .qasm import emit_qasm, parse_qasm

__all__ = ["Circuit", "Gate", "GateKind", "lower", "SystemConfig", "bundled_config",
           "load_system_config", "OptimizerOptions", "Plan", "baseline_plan", "optimize",
           "emit_qasm", "parse_qasm"]
__version__ = "0.1.0"
