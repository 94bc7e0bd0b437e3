"""Independent reference implementations used by the tests."""
import math
from fractions import Fraction


def scan_stats(matrix):
    """Six slice statistics by a direct pass over every cell (exact sums via fsum)."""
    cells = [float(v) for row in matrix for v in row]
    n = len(cells)
    hi = lo = cells[0]
    for v in cells:
        hi = v if v > hi else hi
        lo = v if v < lo else lo
    total = math.fsum(cells)
    mean = total / n
    s = sorted(cells)
    median = s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in cells) / n)
    return hi, lo, mean, median, std, total


def ratio(num, den):
    return None if den == 0 else Fraction(num, den)
