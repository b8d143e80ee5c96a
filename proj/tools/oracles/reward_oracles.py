"""Independent high-precision oracles for the frozen test values.

Run: python3 tools/oracles/reward_oracles.py
"""
from mpmath import mp, mpf, exp, log, sqrt, diff

mp.dps = 50


def advantages(rewards):
    r = [mpf(x) for x in rewards]
    g = len(r)
    mean = sum(r) / g
    std = sqrt(sum((x - mean) ** 2 for x in r) / g)
    return [(x - mean) / std for x in r]


def kl_exact(p, q):
    return sum(mpf(a) * log(mpf(a) / mpf(b)) for a, b in zip(p, q) if a > 0)


def clip(x, lo, hi):
    return max(lo, min(hi, x))


def surrogate(rollouts, advs, eps, beta):
    total = mpf(0)
    for tokens, a in zip(rollouts, advs):
        s = mpf(0)
        for lp_new, lp_old, kl in tokens:
            rho = exp(mpf(lp_new) - mpf(lp_old))
            a = mpf(a)
            s += min(rho * a, clip(rho, 1 - mpf(eps), 1 + mpf(eps)) * a) - mpf(beta) * mpf(kl)
        total += s / len(tokens)
    return total / len(rollouts)


def log_softmax(logits, t):
    z = [mpf(l) / t for l in logits]
    m = max(z)
    norm = m + log(sum(exp(v - m) for v in z))
    return [v - norm for v in z]


TAB = dict(
    logits=[0.3, -0.2, 1.1, 0.0],
    old_logits=[0.25, -0.1, 1.0, 0.05],
    temperature=0.7,
    choices=[0, 2, 2, 3, 1],
    advantages=[1.2, -0.4, 0.3, -1.5, 0.4],
    ref=[0.25, 0.25, 0.25, 0.25],
    eps=0.2,
    beta=0.01,
)


def tabular(logits, estimator):
    t = mpf(TAB["temperature"])
    lp = log_softmax(logits, t)
    old = log_softmax(TAB["old_logits"], t)
    p = [exp(v) for v in lp]
    q = [mpf(v) for v in TAB["ref"]]
    exact = sum(pi * log(pi / qi) for pi, qi in zip(p, q))
    rollouts = []
    for a in TAB["choices"]:
        if estimator == "exact":
            kl = exact
        else:
            r = q[a] / p[a]
            kl = r - log(r) - 1
        rollouts.append([(lp[a], old[a], kl)])
    return surrogate(rollouts, TAB["advantages"], TAB["eps"], TAB["beta"])


def main():
    print("advantages [0.75,0.25,1,0]:", [mp.nstr(v, 20) for v in advantages([0.75, 0.25, 1.0, 0.0])])
    print("kl (0.7,0.3)||(0.3,0.7):", mp.nstr(kl_exact([0.7, 0.3], [0.3, 0.7]), 20))
    mixed = [
        [(-0.5, -0.7, 0.02), (-1.2, -1.0, 0.05), (-0.3, -0.31, 0.01)],
        [(-2.0, -1.5, 0.1), (-0.9, -1.0, 0.0)],
    ]
    print("mixed surrogate:", mp.nstr(surrogate(mixed, [0.8, -1.1], 0.2, 0.01), 20))
    for est in ("exact", "k3"):
        base = TAB["logits"]
        print(est, "objective:", mp.nstr(tabular(base, est), 20))
        grads = []
        for k in range(len(base)):
            def f(x, k=k):
                v = list(map(mpf, base))
                v[k] = x
                return tabular(v, est)
            grads.append(diff(f, mpf(base[k])))
        print(est, "gradient:", [mp.nstr(g, 20) for g in grads])


if __name__ == "__main__":
    main()
