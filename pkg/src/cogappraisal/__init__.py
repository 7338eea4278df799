"""Cognitive distortions vs. emotional appraisals: prediction, significance, profiles."""

__version__ = "0.1.0"
