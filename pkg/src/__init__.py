# MinSMC
# Low-adaptivity parallel solver for min-cost submodular cover, with
# greedy and brute-force baselines and a benchmark harness

__version__ = "1.0.0"
