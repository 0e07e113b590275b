"""Application presets: axisymmetric beam, guiding-center and finite-Larmor-radius models."""
