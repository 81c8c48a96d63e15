#!/usr/bin/env python3
"""Brute-force reference evaluator for the CPL distributions and losses.

Writes tests/data/oracle_cases.json. Every quantity is computed directly from
its closed form with plain floats: no max-shift in softmax, factorials and
binomial coefficients as exact integers, and semicircular proxies built by
rotating the first direction inside the Gram-Schmidt plane (a different
construction from the law-of-sines weights used by the library).

Usage: python3 tests/oracle/cpl_oracle.py [output.json]
"""
import json
import math
import random
import sys


def norm(v):
    return math.sqrt(sum(x * x for x in v))


def sub(a, b):
    return [x - y for x, y in zip(a, b)]


def sim(kind, f, p, scale):
    if kind == "euclidean-t":
        return -math.log(1.0 + sum(x * x for x in sub(f, p)))
    if kind == "cosine":
        return scale * sum(x * y for x, y in zip(f, p)) / (norm(f) * norm(p))
    if kind == "neg-euclidean":
        return -norm(sub(f, p))
    raise ValueError(kind)


def softmax_plain(z):
    e = [math.exp(v) for v in z]
    s = sum(e)
    return [v / s for v in e]


def linear_proxies(v0, K):
    return [[k * x for x in v0] for k in range(K)]


def semicircular_proxies(v0, v1, K):
    u0 = [x / norm(v0) for x in v0]
    u1 = [x / norm(v1) for x in v1]
    c = sum(x * y for x, y in zip(u0, u1))
    e2 = [y - c * x for x, y in zip(u0, u1)]
    n2 = norm(e2)
    e2 = [x / n2 for x in e2]
    beta = math.pi / (K - 1)
    return [[math.cos(k * beta) * a + math.sin(k * beta) * b for a, b in zip(u0, e2)]
            for k in range(K)]


def smoothing_scores(name, ks, K, params):
    if name == "poisson":
        lam = ks + 0.5
        return [(k * math.log(lam) - lam - math.log(math.factorial(k))) / params["tau_p"]
                for k in range(K)]
    if name == "binomial":
        p = (2 * ks + 1) / (2 * K)
        return [(math.log(math.comb(K - 1, k)) + k * math.log(p)
                 + (K - 1 - k) * math.log(1 - p)) / params["tau_b"] for k in range(K)]
    if name == "exponential":
        w = [math.exp(-abs(k - ks) / params["tau_e"]) for k in range(K)]
        s = sum(w)
        return [x / s for x in w]
    if name == "triangular":
        a, b = params["tri_a"], params["tri_b"]
        span = max(ks, K - ks - 1)
        f = [a - (a - b) * abs(k - ks) / span for k in range(K)]
        s = sum(f)
        return [x / s for x in f]
    raise ValueError(name)


def unimodal(name, ks, K, params):
    e = smoothing_scores(name, ks, K, params)
    if name in ("poisson", "binomial"):
        return softmax_plain(e)
    return e


def kl_scaled(q, p):
    K = len(q)
    return -sum(qk * math.log(pk / qk) for qk, pk in zip(q, p)) / K


def rand_vec(rng, d):
    return [rng.uniform(-1.5, 1.5) for _ in range(d)]


def build_case(rng, idx, layout, similarity, smoothing):
    K = rng.randint(2, 5)
    d = rng.randint(2, 3)
    scale = rng.choice([2.0, 4.0, 6.0, 8.0])
    params = {"tau_p": rng.choice([0.07, 0.11, 0.15]),
              "tau_b": rng.choice([0.09, 0.13, 0.17]),
              "tau_e": 30.0, "tri_a": 0.9, "tri_b": 0.1}
    if layout == "hard-linear":
        V = [rand_vec(rng, d)]
        P = linear_proxies(V[0], K)
    elif layout == "hard-semicircular":
        while True:
            V = [rand_vec(rng, d), rand_vec(rng, d)]
            c = sum(x * y for x, y in zip(V[0], V[1])) / (norm(V[0]) * norm(V[1]))
            if abs(c) < 0.95:
                break
        P = semicircular_proxies(V[0], V[1], K)
    else:
        V = [rand_vec(rng, d) for _ in range(K)]
        P = [list(v) for v in V]
    f = rand_vec(rng, d)
    ks = rng.randrange(K)
    Pf = softmax_plain([sim(similarity, f, p, scale) for p in P])
    Q = softmax_plain([sim(similarity, P[ks], p, scale) for p in P])
    case = {
        "name": f"case{idx:02d}-{layout}-{similarity}" + (f"-{smoothing}" if smoothing else ""),
        "classes": K, "dim": d, "layout": layout, "similarity": similarity,
        "scale": scale, "target": ks, "feature": f, "params": V,
        "expected_proxies": P, "expected_assignment": Pf, "expected_proxy_dist": Q,
        "expected_basic_loss": kl_scaled(Q, Pf),
    }
    if smoothing:
        U = unimodal(smoothing, ks, K, params)
        case.update({"smoothing": smoothing, "smoothing_params": params,
                     "expected_unimodal": U,
                     "expected_unimodal_loss": kl_scaled(U, Q)})
    return case


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/oracle_cases.json"
    rng = random.Random(20230207)
    plan = [
        ("hard-linear", "euclidean-t", None),
        ("hard-linear", "euclidean-t", None),
        ("hard-linear", "euclidean-t", None),
        ("hard-linear", "neg-euclidean", None),
        ("hard-semicircular", "cosine", None),
        ("hard-semicircular", "cosine", None),
        ("hard-semicircular", "cosine", None),
        ("soft-free", "euclidean-t", "poisson"),
        ("soft-free", "euclidean-t", "poisson"),
        ("soft-free", "cosine", "poisson"),
        ("soft-free", "cosine", "poisson"),
        ("soft-free", "euclidean-t", "binomial"),
        ("soft-free", "euclidean-t", "binomial"),
        ("soft-free", "cosine", "binomial"),
        ("soft-free", "cosine", "binomial"),
        ("soft-free", "euclidean-t", "exponential"),
        ("soft-free", "cosine", "exponential"),
        ("soft-free", "euclidean-t", "triangular"),
        ("soft-free", "cosine", "triangular"),
        ("soft-free", "neg-euclidean", "binomial"),
    ]
    cases = [build_case(rng, i, *p) for i, p in enumerate(plan)]
    with open(out, "w") as fh:
        json.dump({"generator": "tests/oracle/cpl_oracle.py", "cases": cases}, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
