"""Reference first-order statistics for the 1000-value fixture.

Values: x_k = -1000 + 1400 * u_k, u_k = (splitmix64(k) >> 11) * 2^-53,
k = 0..999, laid out as a 10x10x10 volume with spacing (1, 1, 2) mm and a
full mask. Histogram features use 32 fixed bins. Prints a C++ initializer.
"""
import numpy as np
from scipy import stats

MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


x = np.array([-1000.0 + 1400.0 * ((splitmix64(k) >> 11) * 2.0**-53) for k in range(1000)])
ng = 32
lo, hi = x.min(), x.max()
levels = np.minimum(ng, np.floor(ng * (x - lo) / (hi - lo)) + 1)
_, counts = np.unique(levels, return_counts=True)
p = counts / counts.sum()
p10, p90 = np.percentile(x, [10, 90])
robust = x[(x >= p10) & (x <= p90)]
energy = np.sum(x**2)
feats = {
    "Energy": energy,
    "TotalEnergy": energy * 2.0,
    "Entropy": -np.sum(p * np.log2(p)),
    "Minimum": lo,
    "Percentile10": p10,
    "Percentile90": p90,
    "Maximum": hi,
    "Mean": x.mean(),
    "Median": np.median(x),
    "InterquartileRange": np.percentile(x, 75) - np.percentile(x, 25),
    "Range": hi - lo,
    "MeanAbsoluteDeviation": np.mean(np.abs(x - x.mean())),
    "RobustMeanAbsoluteDeviation": np.mean(np.abs(robust - robust.mean())),
    "RootMeanSquared": np.sqrt(np.mean(x**2)),
    "StandardDeviation": x.std(),
    "Skewness": stats.skew(x),
    "Kurtosis": stats.kurtosis(x, fisher=False),
    "Variance": x.var(),
    "Uniformity": np.sum(p**2),
}
for k, v in feats.items():
    print(f'    {{"{k}", {v!r}}},')
