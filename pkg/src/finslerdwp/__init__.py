"""Curvature of doubly warped product Finsler metrics (build in progress)."""
