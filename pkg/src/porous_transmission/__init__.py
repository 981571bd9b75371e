"""Boundary-integral solver for Stokes/Brinkman transmission problems."""
