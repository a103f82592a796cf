"""Multimodal cognitive-load classification: fNIRS, eye tracking and driving telemetry."""

__version__ = "0.1.0"
