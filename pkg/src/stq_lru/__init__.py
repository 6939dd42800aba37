"""Leakage reduction units for singlet-triplet spin qubits.

Modules: :mod:`spin` (dense four-spin algebra), :mod:`gates` (phase,
exchange and entangling gates), :mod:`verify` (LRU truth tables),
:mod:`search` (sequence synthesis), :mod:`lattice` (surface-code leakage
Monte Carlo) and :mod:`cli`.
"""

__version__ = "0.1.0"
