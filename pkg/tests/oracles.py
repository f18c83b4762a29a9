"""Independent reference implementations used to cross-check the library.

Everything here is written the slow, obvious way on purpose: pairwise loops,
exhaustive grids, naive scans.  None of it imports the code under test beyond
plain data types.
"""

from __future__ import annotations

import math

import numpy as np


def auc_pairwise(scores, labels) -> float:
    """Probability a random positive outscores a random negative, ties 1/2."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        raise ValueError("need both classes")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def threshold_grid(scored) -> float:
    """Exhaustive search of t in {0.001..0.999} maximizing F1 of score >= t."""
    best_t, best_f1 = None, -1.0
    for i in range(1, 1000):
        t = i / 1000
        tp = fp = fn = 0
        for s, y in scored:
            pred = s >= t
            if pred and y == 1:
                tp += 1
            elif pred and y == 0:
                fp += 1
            elif not pred and y == 1:
                fn += 1
        if tp + fp == 0 or tp + fn == 0:
            p = r = 0.0
        else:
            p = tp / (tp + fp)
            r = tp / (tp + fn)
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        if f1 > best_f1:
            best_f1, best_t = f1, t
    return best_t


def boundary_sample(pool, threshold, fraction):
    """pool: (id, score) pairs.  Returns (below_ids, above_ids)."""
    need = math.ceil(fraction * len(pool))
    below = sorted((r for r in pool if r[1] < threshold),
                   key=lambda r: (abs(r[1] - threshold), r[0]))
    above = sorted((r for r in pool if r[1] >= threshold),
                   key=lambda r: (abs(r[1] - threshold), r[0]))
    return [r[0] for r in below[:need]], [r[0] for r in above[:need]]


def count_pronouns_naive(tokens, first, second, third):
    """Plain membership scan over an already-tokenized text."""
    f = s = t = 0
    for tok in tokens:
        if tok in first:
            f += 1
        elif tok in second:
            s += 1
        elif tok in third:
            t += 1
    return f, s, t


def phrase_scan(tokens, phrases):
    """All (start, phrase) positions where a phrase occurs as a contiguous
    run; sorted by (start, length desc)."""
    hits = []
    for start in range(len(tokens)):
        for phrase in phrases:
            k = len(phrase)
            if k and tuple(tokens[start:start + k]) == tuple(phrase):
                hits.append((start, tuple(phrase)))
    hits.sort(key=lambda h: (h[0], -len(h[1])))
    return hits


def coverage_scores(tokens, categories):
    """categories: {name: [term tuples]}.  Fraction of token positions
    covered by any match of that category's terms."""
    out = {}
    n = len(tokens)
    for name, terms in categories.items():
        covered = set()
        for start in range(n):
            for term in terms:
                k = len(term)
                if k and tuple(tokens[start:start + k]) == tuple(term):
                    covered.update(range(start, start + k))
        out[name] = len(covered) / n if n else 0.0
    return out


def poisson_irls_fit(X, y, tol=1e-12, max_iter=200):
    """Textbook Poisson IRLS with log link, written independently."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = np.log(y + 0.5)
    beta = np.linalg.lstsq(X, eta, rcond=None)[0]
    for _ in range(max_iter):
        eta = np.clip(X @ beta, -30, 30)
        mu = np.exp(eta)
        z = eta + (y - mu) / mu
        W = mu
        A = X.T @ (W[:, None] * X)
        b = X.T @ (W * z)
        new = np.linalg.solve(A, b)
        if np.max(np.abs(new - beta)) < tol:
            beta = new
            break
        beta = new
    return beta


def negbin_loglik_direct(X, y, beta, theta):
    """Log-likelihood written from the gamma-function form, independently."""
    from scipy.special import gammaln

    mu = np.exp(np.clip(np.asarray(X) @ np.asarray(beta), -30, 30))
    y = np.asarray(y, dtype=float)
    return float(np.sum(
        gammaln(y + theta) - gammaln(theta) - gammaln(y + 1)
        + theta * np.log(theta / (theta + mu))
        + y * np.log(mu / (theta + mu))
    ))


def negbin_grad_fd(X, y, beta, theta, h=1e-6):
    """Central finite differences of the log-likelihood in (beta, log theta)."""
    beta = np.asarray(beta, dtype=float)
    g = np.empty(len(beta) + 1)
    for j in range(len(beta)):
        bp, bm = beta.copy(), beta.copy()
        bp[j] += h
        bm[j] -= h
        g[j] = (negbin_loglik_direct(X, y, bp, theta)
                - negbin_loglik_direct(X, y, bm, theta)) / (2 * h)
    lt = math.log(theta)
    g[-1] = (negbin_loglik_direct(X, y, beta, math.exp(lt + h))
             - negbin_loglik_direct(X, y, beta, math.exp(lt - h))) / (2 * h)
    return g


def spearman_naive(x, y):
    """Midrank Spearman as Pearson on ranks, computed with plain sorting."""
    def midranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        ranks = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                ranks[order[k]] = avg
            i = j + 1
        return ranks

    rx, ry = midranks(list(x)), midranks(list(y))
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    if den == 0:
        raise ValueError("zero variance")
    return num / den
