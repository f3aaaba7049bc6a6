"""Spin-orbit pointer measurement simulations."""
