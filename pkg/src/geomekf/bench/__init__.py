"""Benchmark harness: simulation runs, equivalence reports, Monte Carlo."""
