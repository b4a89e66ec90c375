"""Choiceless polynomial time interpreter and symmetry laboratory."""
