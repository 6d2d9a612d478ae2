"""Creative telescoping for bivariate hypergeometric double sums."""

__version__ = "0.1.0"
