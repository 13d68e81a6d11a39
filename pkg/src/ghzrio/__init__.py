"""Deterministic simulator for controlled and combined remote implementation
of partially unknown operations over GHZ and Bell entanglement."""
from __future__ import annotations

__version__ = "0.1.0"
