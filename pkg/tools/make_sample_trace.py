"""Regenerate src/greenmeta/data/sample.swf, a synthetic SWF trace.

Shapes loosely follow a busy capability cluster: power-of-two job widths
skewed toward small jobs, log-normal runtimes, Poisson arrivals.
"""

import sys
from pathlib import Path

import numpy as np

N_JOBS = 1200
MEAN_INTERARRIVAL = 600.0
WIDTHS = np.array([1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024])
WIDTH_WEIGHTS = np.array([10, 6, 14, 14, 12, 10, 8, 5, 3, 1.5, 0.5])


def main(out):
    rng = np.random.default_rng(20070101)
    submit = np.cumsum(rng.exponential(MEAN_INTERARRIVAL, N_JOBS)).round()
    submit -= submit[0]
    widths = rng.choice(WIDTHS, size=N_JOBS, p=WIDTH_WEIGHTS / WIDTH_WEIGHTS.sum())
    runtimes = np.clip(rng.lognormal(np.log(300.0), 1.4, N_JOBS), 10, 86400).round()
    wait = np.zeros(N_JOBS)
    lines = [
        "; Version: 2.2",
        "; Computer: synthetic sample (not a real machine)",
        "; Note: generated by tools/make_sample_trace.py with seed 20070101",
        "; MaxJobs: %d" % N_JOBS,
        "; MaxProcs: 4096",
    ]
    for i in range(N_JOBS):
        rt, n = int(runtimes[i]), int(widths[i])
        fields = [i + 1, int(submit[i]), int(wait[i]), rt, n, -1, -1, n, rt, -1, 1, 1, 1, 1, 1, -1, -1, 0]
        lines.append(" ".join(str(f) for f in fields))
    Path(out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/greenmeta/data/sample.swf")
