"""Pointwise semi-Riemannian curvature laboratory."""
