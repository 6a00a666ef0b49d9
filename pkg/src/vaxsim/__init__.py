"""Discrete-event simulator for an integrated vaccine manufacturing supply chain.

Production processes, QA/QC activities with finite personnel pools, and
raw-material procurement are simulated together so that disruption scenarios
can be compared against an undisrupted base case with common random numbers.
"""

__version__ = "0.1.0"
