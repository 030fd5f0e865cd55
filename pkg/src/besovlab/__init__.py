"""Littlewood-Paley, Besov-norm and compressible Navier-Stokes decay laboratory."""
