"""Characteristic flows of the fast field and their diagnostics."""
