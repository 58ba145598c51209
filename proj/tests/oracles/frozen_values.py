"""Independent oracles used to compute the constants frozen into the C++ tests.

Run with `python3 tests/oracles/frozen_values.py`. Nothing here imports the
C++ code; every value is computed from first principles (or scipy).
"""
import math
from itertools import combinations

from scipy import stats


def alpha_ordinal_definitional(gold, pred):
    # Pairable values: every unit holds two values (gold, pred).
    units = [(g, p) for g, p in zip(gold, pred)]
    values = [v for u in units for v in u]
    n_total = len(values)
    freq = {c: sum(1 for v in values if v == c) for c in range(1, 5)}

    def delta2(a, b):
        lo, hi = min(a, b), max(a, b)
        s = sum(freq[g] for g in range(lo, hi + 1)) - (freq[lo] + freq[hi]) / 2
        return s * s

    observed = 0.0
    for u in units:
        for i in range(2):
            for j in range(2):
                if i != j:
                    observed += delta2(u[i], u[j]) / (len(u) - 1)
    expected = 0.0
    for i in range(n_total):
        for j in range(n_total):
            if i != j:
                expected += delta2(values[i], values[j])
    return 1.0 - (n_total - 1) * observed / expected


def spearman(a, b):
    return stats.spearmanr(a, b).statistic


def boost_regression_trace():
    # 5-point, 1-feature fixture; depth-1 stumps, lr 0.5, 2 rounds.
    xs = [1.0, 2.0, 3.0, 4.0, 5.0]
    ys = [1.0, 1.5, 4.0, 4.5, 10.0]
    lr = 0.5
    f = [sum(ys) / len(ys)] * 5
    for _ in range(2):
        r = [y - p for y, p in zip(ys, f)]
        best = None
        for k in range(1, 5):
            left, right = r[:k], r[k:]
            gain = sum(left) ** 2 / len(left) + sum(right) ** 2 / len(right) - sum(r) ** 2 / len(r)
            if best is None or gain > best[0]:
                best = (gain, k)
        k = best[1]
        lm = sum(r[:k]) / k
        rm = sum(r[k:]) / (5 - k)
        f = [p + lr * (lm if i < k else rm) for i, p in enumerate(f)]
    return f


def main():
    print("alpha([1,1,2,2,3,3],[1,2,1,3,2,3]) =",
          repr(alpha_ordinal_definitional([1, 1, 2, 2, 3, 3], [1, 2, 1, 3, 2, 3])))
    print("rho([0,1,1,2],[0.1,0.9,1.2,1.1]) =", repr(spearman([0, 1, 1, 2], [0.1, 0.9, 1.2, 1.1])))

    # Permutation fixture: gold[i] = (i * 37) % 101 / 10, pred = gold permuted by i -> (i * 7919) % 1000.
    n = 1000
    gold = [((i * 37) % 101) / 10.0 for i in range(n)]
    pred = [gold[(i * 7919) % n] for i in range(n)]
    print("rho(permutation fixture) =", repr(spearman(gold, pred)))

    print("gelu(1) =", repr(1.0 * 0.5 * (1 + math.erf(1 / math.sqrt(2)))))
    print("gelu(-1) =", repr(-1.0 * 0.5 * (1 + math.erf(-1 / math.sqrt(2)))))

    # Two-sample cross-entropy: logits rows, targets are class indices.
    logits = [[2.0, 1.0, 0.0, -1.0], [0.5, 0.5, 1.5, 0.0]]
    targets = [0, 2]
    ce = 0.0
    for row, t in zip(logits, targets):
        lse = math.log(sum(math.exp(v) for v in row))
        ce += lse - row[t]
    print("ce(2 samples) =", repr(ce / 2))

    print("boost trace =", [repr(v) for v in boost_regression_trace()])

    # Hand-picked bins for the 40-point noisy fixture are checked in C++; nothing to freeze.


if __name__ == "__main__":
    main()
