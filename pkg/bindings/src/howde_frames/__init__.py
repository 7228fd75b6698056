"""DataFrame-facing bindings for the howde detection engine.

A facade only: every function forwards to the same engine entry points the
``howde`` command line uses, with tables in the CSV column schemas. For
identical inputs and seeds, output serialized through the package writers
is byte-identical to the CLI's files.
"""

from .frames import SynthResult, anonymize, detect, evaluate, synth

__version__ = "0.1.0"

__all__ = ["detect", "evaluate", "anonymize", "synth", "SynthResult"]
