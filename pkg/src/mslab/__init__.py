"""Multi-well microstructure laboratory.

Builds explicit branched competitors for multi-well elastic energies,
evaluates four surface regularizations (sharp anisotropic TV, diffuse
L^q, fractional spectral, discrete triangulation), and fits the
resulting scaling exponents.
"""

__all__ = [
    "wells",
    "fields",
    "energies",
    "fourier",
    "constructions",
    "comparison",
    "discrete",
    "harness",
]

__version__ = "0.1.0"
