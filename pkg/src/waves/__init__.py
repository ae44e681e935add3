"""Traveling waves of scalar balance laws: construction, classification, spectra, simulation."""
