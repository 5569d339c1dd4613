"""Syntomic and finite-polynomial cohomology with coefficients over Q_p,
with Kedlaya Frobenius matrices and Coleman integration on odd hyperelliptic
curves."""

__version__ = "0.1.0"
