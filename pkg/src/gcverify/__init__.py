"""Numerical verification of moment-map convexity on generalized complex
manifolds: fiber linear algebra, sampled-manifold calculus, Hamiltonian
action checks, Bott-Morse analysis and moment-image convexity."""

__version__ = "0.1.0"
