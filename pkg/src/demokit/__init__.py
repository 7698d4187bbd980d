"""Programming-by-demonstration engine: record and edit end-effector
trajectories, train and condition probabilistic movement primitives,
validate against a simulated 6-DOF arm, and stream execution to a robot
endpoint over a small session protocol.
"""

__version__ = "0.1.0"
