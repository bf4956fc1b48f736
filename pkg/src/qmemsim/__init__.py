"""Quantum-memory-aware simulator: statevector kernel, memory device models,
bucket-brigade QRAM, device metrics, and an extended-QASM toolchain."""

__version__ = "0.1.0"
