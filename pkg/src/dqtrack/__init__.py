"""Dual quaternion pose tracking: algebra, error dynamics, feedback control,
stability certificates, barrier-function safety filtering and simulation."""

__version__ = "0.1.0"
