"""Error rate vs epsilon for 3-candidate Borda, N=2000, delta=5e-4, against the analytic bounds."""
from _sweep import run

if __name__ == "__main__":
    run("figure2", __doc__)
