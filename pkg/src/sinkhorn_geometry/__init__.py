"""Riemannian geometry of the Sinkhorn divergence on discrete measures."""
