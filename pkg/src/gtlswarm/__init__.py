"""Markov-matrix synthesis and simulation for swarms under graph temporal logic."""
__version__ = "0.1.0"
