"""Backbone feature exporter and DCT-pipeline parity checker."""

__version__ = "0.1.0"
