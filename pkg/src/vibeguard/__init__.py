"""vibeguard: a side-car analyzer for agent-generated TypeScript.

Detects four classes of latent union-handling bugs, turns them into
persistent specification records with a human approval lifecycle,
verifies them with tiered checks, and generates corrective edit plans.
"""

__version__ = "0.1.0"

DETECTOR_VERSION = "1"
