"""Closed-form success probabilities, fidelities and Haar averages."""
