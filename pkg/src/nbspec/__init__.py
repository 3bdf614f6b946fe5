"""Non-backtracking matrix spectra: construction, classification, motifs."""

__version__ = "0.1.0"
