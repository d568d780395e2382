"""cubicartin: value distribution of Artin L-functions of non-Galois cubic fields.

Submodules
----------
local        exact splitting-type arithmetic at one prime
primes       sieves, factorization, prime-zeta tails
euler        characteristic-function Euler products
density      value-distribution densities by Fourier inversion
fields       cubic field enumeration, splitting types, counting predictions
lvalues      L-value evaluation (Euler products and smoothed Dirichlet series)
experiments  desk-scale statistical experiments against the random models
cli          command-line interface
"""

from . import local, primes

__version__ = "0.1.0"
__all__ = ["local", "primes", "__version__"]
