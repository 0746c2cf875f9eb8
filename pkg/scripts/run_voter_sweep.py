"""Error rate vs number of voters for 3-candidate Borda, epsilon=0.1, delta=0.1/N."""
from _sweep import run

if __name__ == "__main__":
    run("figure3", __doc__)
