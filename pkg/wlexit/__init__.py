"""
Wang-Landau exit-time laboratory: adaptive sampler, toy and 2D models, experiment harness and scaling fits.
"""

__version__ = "0.1.0"
