"""Numerical core: grids, operator engines, norms, limits, potentials, Poisson extensions."""
