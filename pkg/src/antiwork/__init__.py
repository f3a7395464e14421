"""Antiwork-propensity cohorts, classifiers and explanations from forum dumps."""

__version__ = "0.1.0"
