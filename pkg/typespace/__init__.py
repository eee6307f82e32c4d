"""Particle type space: masses, diffusivities, weights and kernel tables."""
