"""Frequency-domain image features and few-shot episodic evaluation."""

__version__ = "0.1.0"
