"""Wick-ordered heat equation toolkit: Skorokhod integrals, randomized shifts,
intersection local times, solvable polymers and scaling experiments."""

__version__ = "0.1.0"
