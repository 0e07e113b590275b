"""Two-scale expansion engine: averaged fields, corrector recursion, slow transport."""
