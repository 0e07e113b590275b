"""ε-resolving reference solver for the full stiff transport equation."""
