"""Tensor-network simulation of lossless and lossy boson sampling.

Photon-number conservation is tracked explicitly: matrix product states carry
a single U(1) charge per bond, matrix product operators carry independent ket
and bra charges, and every two-site update decomposes into charge sectors
whose singular values are pooled for global truncation.
"""

__version__ = "0.1.0"
