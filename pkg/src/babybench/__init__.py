"""Grid-world benchmark toolkit: simulator, expert planner, dataset generators and evaluation harness."""

__version__ = "0.1.0"
