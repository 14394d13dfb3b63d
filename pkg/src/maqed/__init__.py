"""Field quantization toolkit for anisotropic absorptive magnetodielectric media.

The pipeline converts causal susceptibility tensors into coupling-tensor
spectral densities and back, assembles the anisotropic wave operator in the
Laplace domain, computes field-evolution kernels by inverse Laplace
transform, and verifies the noise-commutator and limiting-case identities.
"""

from maqed.constants import NATURAL, SI, PhysicalConstants

__version__ = "0.1.0"

__all__ = ["PhysicalConstants", "NATURAL", "SI", "__version__"]
