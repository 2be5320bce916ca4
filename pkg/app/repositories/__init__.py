"""Persistence: calibration profiles and exported tables."""
