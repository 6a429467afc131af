"""
Scripts Module

Command-line entry points:
- fl_rewards.py: run, flip-study, report, validate-config, scalability
- run_all_splits.py: sweep over all eight attribute/regime splits
"""

__version__ = "1.0.0"
